#include "neggen/rng.hpp"

namespace neggen {

namespace {

uint64_t fnv1a(uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

uint64_t derive_seed(uint64_t base, std::string_view tag, std::string_view key,
                     uint64_t index) {
    uint64_t h = 0xcbf29ce484222325ULL ^ base;
    h = fnv1a(h, tag);
    h = fnv1a(h, "\x1f");
    h = fnv1a(h, key);
    h ^= index * 0x9e3779b97f4a7c15ULL;
    return splitmix64(h);
}

}  // namespace neggen

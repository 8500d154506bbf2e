#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace neggen {

// Deterministic RNG wrapper. Draws are hand-rolled on top of mt19937_64 so
// sequences are identical across standard libraries; std::shuffle and
// std::uniform_int_distribution are implementation-defined and would break
// byte-identical pipeline output between machines.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    // n must be > 0.
    size_t below(size_t n) { return static_cast<size_t>(next() % n); }

    // uniform in [0, 1)
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    // k distinct indices into a pool of size n (k <= n), in draw order.
    std::vector<size_t> sample_indices(size_t n, size_t k) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        for (size_t i = 0; i < k; ++i) {
            std::swap(idx[i], idx[i + below(n - i)]);
        }
        idx.resize(k);
        return idx;
    }

  private:
    std::mt19937_64 eng_;
};

// Stable per-item seed derivation so concurrent generation does not depend on
// scheduling order: every request's seed is a pure function of its identity.
uint64_t derive_seed(uint64_t base, std::string_view tag,
                     std::string_view key = {}, uint64_t index = 0);

}  // namespace neggen

#include "neggen/cache.hpp"

#include <fstream>

#include "neggen/hash.hpp"
#include "neggen/jsonl.hpp"

namespace neggen {

std::string Cache::key(std::string_view op, const nlohmann::json& inputs) const {
    std::string material(op);
    material.push_back('\0');
    material += inputs.dump();
    return sha256_hex(material);
}

std::optional<std::string> Cache::get(std::string_view op,
                                      const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::filesystem::path file = root_ / op / key;
    if (!std::filesystem::exists(file)) return std::nullopt;
    return read_text_file(file);
}

void Cache::put(std::string_view op, const std::string& key,
                std::string_view content) const {
    if (!enabled()) return;
    std::filesystem::path dir = root_ / op;
    std::filesystem::create_directories(dir);
    // write-then-rename so a crash cannot leave a truncated entry behind
    std::filesystem::path tmp = dir / (key + ".tmp");
    write_text_file(tmp, content);
    std::filesystem::rename(tmp, dir / key);
}

}  // namespace neggen

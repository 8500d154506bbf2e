#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace neggen {

// Content-addressed store: keys are SHA-256 over (op, canonical input JSON),
// so any change to an input or the consumed config slice lands on a fresh
// key. A default-constructed cache is disabled and misses everything.
class Cache {
  public:
    Cache() = default;
    explicit Cache(std::filesystem::path root) : root_(std::move(root)) {}

    bool enabled() const { return !root_.empty(); }

    std::string key(std::string_view op, const nlohmann::json& inputs) const;
    std::optional<std::string> get(std::string_view op, const std::string& key) const;
    void put(std::string_view op, const std::string& key,
             std::string_view content) const;

  private:
    std::filesystem::path root_;
};

}  // namespace neggen

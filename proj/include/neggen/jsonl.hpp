#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace neggen {

// One JSON object per line. Parse failures throw ParseError with the
// 1-based line number in the message.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(size_t line_no, const nlohmann::json&)>& fn);

// Lines are dumped with nlohmann's default (key-sorted) object order, one
// object per '\n'-terminated line, so reruns emit identical bytes.
void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::json>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace neggen

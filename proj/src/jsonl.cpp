#include "neggen/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "neggen/errors.hpp"

namespace neggen {

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    for_each_jsonl(path, [&](size_t, const nlohmann::json& j) { rows.push_back(j); });
    return rows;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(size_t, const nlohmann::json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": malformed JSON line");
        }
        fn(line_no, j);
    }
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<nlohmann::json>& rows) {
    std::filesystem::create_directories(path.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
    for (const auto& row : rows) {
        out << row.dump() << '\n';
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace neggen

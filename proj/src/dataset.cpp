#include "neggen/dataset.hpp"

#include <cctype>
#include <set>
#include <sstream>

#include "neggen/errors.hpp"
#include "neggen/jsonl.hpp"

namespace neggen {

namespace {

[[noreturn]] void fail(const GroundingSample& s, const std::string& what) {
    throw ValidationError("sample '" + s.id + "': " + what);
}

bool all_whitespace(std::string_view text) {
    for (unsigned char c : text) {
        if (!std::isspace(c)) return false;
    }
    return true;
}

}  // namespace

void validate_sample(const GroundingSample& s) {
    if (s.id.empty()) throw ValidationError("sample with empty id");
    if (s.image.width <= 0 || s.image.height <= 0) {
        fail(s, "image dimensions must be positive");
    }
    const int len = static_cast<int>(s.caption.size());
    for (size_t i = 0; i < s.regions.size(); ++i) {
        const Region& r = s.regions[i];
        const std::string where = "region " + std::to_string(i) + ": ";
        if (r.span.start < 0) fail(s, where + "span start negative");
        if (r.span.start >= r.span.end) fail(s, where + "span start < end violated");
        if (r.span.end > len) fail(s, where + "span end exceeds caption length");
        std::string_view text(s.caption);
        if (all_whitespace(text.substr(r.span.start, r.span.length()))) {
            fail(s, where + "span text is empty or whitespace");
        }
        if (!(r.box.x1 < r.box.x2)) fail(s, where + "x1 < x2 violated");
        if (!(r.box.y1 < r.box.y2)) fail(s, where + "y1 < y2 violated");
        if (r.box.x1 < 0 || r.box.y1 < 0 || r.box.x2 > s.image.width ||
            r.box.y2 > s.image.height) {
            fail(s, where + "box outside image bounds");
        }
    }
}

GroundingSample sample_from_json(const nlohmann::json& j) {
    GroundingSample s;
    try {
        s.id = j.at("id").get<std::string>();
        s.caption = j.at("caption").get<std::string>();
        const auto& img = j.at("image");
        s.image.path = img.at("path").get<std::string>();
        s.image.width = img.at("width").get<int>();
        s.image.height = img.at("height").get<int>();
        for (const auto& rj : j.at("regions")) {
            Region r;
            const auto& b = rj.at("box");
            if (!b.is_array() || b.size() != 4) {
                throw ParseError("box must be [x1,y1,x2,y2]");
            }
            r.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                     b[3].get<double>()};
            const auto& sp = rj.at("span");
            if (!sp.is_array() || sp.size() != 2) {
                throw ParseError("span must be [start,end]");
            }
            r.span = {sp[0].get<int>(), sp[1].get<int>()};
            s.regions.push_back(r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad grounding record: ") + e.what());
    }
    return s;
}

nlohmann::json sample_to_json(const GroundingSample& s) {
    nlohmann::json regions = nlohmann::json::array();
    for (const Region& r : s.regions) {
        regions.push_back({{"box", {r.box.x1, r.box.y1, r.box.x2, r.box.y2}},
                           {"span", {r.span.start, r.span.end}}});
    }
    return {{"id", s.id},
            {"caption", s.caption},
            {"image",
             {{"path", s.image.path},
              {"width", s.image.width},
              {"height", s.image.height}}},
            {"regions", regions}};
}

DatasetLoadResult load_dataset(const std::filesystem::path& path,
                               const LoadOptions& options) {
    DatasetLoadResult result;
    std::set<std::string> seen_ids;
    for_each_jsonl(path, [&](size_t line_no, const nlohmann::json& j) {
        try {
            GroundingSample s = sample_from_json(j);
            validate_sample(s);
            if (!seen_ids.insert(s.id).second) {
                throw ValidationError("sample '" + s.id + "': duplicate id");
            }
            result.samples.push_back(std::move(s));
        } catch (const std::exception& e) {
            if (options.skip_invalid) {
                ++result.skipped;
            } else {
                throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                      ": " + e.what());
            }
        }
    });
    return result;
}

void save_dataset(const std::filesystem::path& path,
                  const std::vector<GroundingSample>& samples) {
    std::vector<nlohmann::json> rows;
    rows.reserve(samples.size());
    for (const auto& s : samples) rows.push_back(sample_to_json(s));
    write_jsonl(path, rows);
}

std::string_view span_text(const GroundingSample& sample, size_t region_index) {
    if (region_index >= sample.regions.size()) {
        throw ValidationError("sample '" + sample.id + "': region index " +
                              std::to_string(region_index) + " out of range");
    }
    const PhraseSpan& sp = sample.regions[region_index].span;
    return std::string_view(sample.caption).substr(sp.start, sp.length());
}

std::vector<std::string> fold_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

VocabularyIndex build_vocabulary(const std::vector<GroundingSample>& samples) {
    VocabularyIndex vocab;
    for (const auto& s : samples) {
        for (auto& tok : fold_tokens(s.caption)) {
            ++vocab.counts[tok];
        }
    }
    return vocab;
}

}  // namespace neggen

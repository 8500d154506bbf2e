#include "neggen/config.hpp"

#include <cctype>
#include <cstdlib>

#include "neggen/errors.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/negtext.hpp"

namespace neggen {

namespace {

void skip_ws(const std::string& s, size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

nlohmann::json parse_scalar(const std::string& s, size_t& i, int line_no) {
    skip_ws(s, i);
    if (i >= s.size()) throw ParseError("toml:" + std::to_string(line_no) + ": missing value");
    if (s[i] == '"') {
        ++i;
        std::string out;
        while (i < s.size() && s[i] != '"') {
            if (s[i] == '\\' && i + 1 < s.size()) {
                ++i;
                switch (s[i]) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default:
                        throw ParseError("toml:" + std::to_string(line_no) +
                                         ": unsupported escape");
                }
            } else {
                out.push_back(s[i]);
            }
            ++i;
        }
        if (i >= s.size()) {
            throw ParseError("toml:" + std::to_string(line_no) + ": unterminated string");
        }
        ++i;  // closing quote
        return nlohmann::json(out);
    }
    if (s.compare(i, 4, "true") == 0) {
        i += 4;
        return nlohmann::json(true);
    }
    if (s.compare(i, 5, "false") == 0) {
        i += 5;
        return nlohmann::json(false);
    }
    size_t start = i;
    while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) ||
                            s[i] == '.' || s[i] == '+' || s[i] == '-' || s[i] == '_')) {
        ++i;
    }
    std::string token = s.substr(start, i - start);
    if (token.empty()) {
        throw ParseError("toml:" + std::to_string(line_no) + ": bad value");
    }
    try {
        if (token.find('.') != std::string::npos ||
            token.find('e') != std::string::npos ||
            token.find('E') != std::string::npos) {
            return nlohmann::json(std::stod(token));
        }
        return nlohmann::json(static_cast<int64_t>(std::stoll(token)));
    } catch (const std::exception&) {
        throw ParseError("toml:" + std::to_string(line_no) + ": bad number '" + token +
                         "'");
    }
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    std::string section;
    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string line = eol == std::string::npos ? text.substr(pos)
                                                    : text.substr(pos, eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();

        size_t i = 0;
        skip_ws(line, i);
        if (i >= line.size() || line[i] == '#') continue;
        if (line[i] == '[') {
            size_t close = line.find(']', i);
            if (close == std::string::npos) {
                throw ParseError("toml:" + std::to_string(line_no) +
                                 ": unterminated section header");
            }
            section = line.substr(i + 1, close - i - 1);
            if (!root.contains(section)) root[section] = nlohmann::json::object();
            continue;
        }
        size_t key_start = i;
        while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) ||
                                   line[i] == '_' || line[i] == '-')) {
            ++i;
        }
        std::string key = line.substr(key_start, i - key_start);
        skip_ws(line, i);
        if (key.empty() || i >= line.size() || line[i] != '=') {
            throw ParseError("toml:" + std::to_string(line_no) + ": expected key = value");
        }
        ++i;
        skip_ws(line, i);
        nlohmann::json value;
        if (i < line.size() && line[i] == '[') {
            ++i;
            value = nlohmann::json::array();
            skip_ws(line, i);
            while (i < line.size() && line[i] != ']') {
                value.push_back(parse_scalar(line, i, line_no));
                skip_ws(line, i);
                if (i < line.size() && line[i] == ',') {
                    ++i;
                    skip_ws(line, i);
                }
            }
            if (i >= line.size()) {
                throw ParseError("toml:" + std::to_string(line_no) +
                                 ": unterminated array");
            }
            ++i;
        } else {
            value = parse_scalar(line, i, line_no);
        }
        skip_ws(line, i);
        if (i < line.size() && line[i] != '#') {
            throw ParseError("toml:" + std::to_string(line_no) +
                             ": trailing characters after value");
        }
        if (section.empty()) {
            root[key] = value;
        } else {
            root[section][key] = value;
        }
    }
    return root;
}

namespace {

template <typename T>
void read_field(const nlohmann::json& section, const char* key, T& out) {
    if (section.contains(key)) out = section.at(key).get<T>();
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    nlohmann::json toml = parse_toml(read_text_file(path));
    PipelineConfig cfg;
    cfg.config_dir = path.parent_path();

    if (toml.contains("dataset")) {
        const auto& s = toml["dataset"];
        read_field(s, "path", cfg.dataset_path);
        read_field(s, "skip_invalid", cfg.skip_invalid);
        read_field(s, "images_root", cfg.images_root);
    }
    if (toml.contains("gen_text")) {
        const auto& s = toml["gen_text"];
        read_field(s, "strategies", cfg.strategies);
        read_field(s, "negatives_per_caption", cfg.negatives_per_caption);
        read_field(s, "per_concept_count", cfg.per_concept_count);
        read_field(s, "retry_limit", cfg.retry_limit);
        read_field(s, "temperature", cfg.temperature);
        read_field(s, "max_tokens", cfg.max_tokens);
        read_field(s, "substitution_table", cfg.substitution_table);
        read_field(s, "seed_pairs", cfg.seed_pairs);
        read_field(s, "incontext_k", cfg.incontext_k);
        read_field(s, "summary_pairs", cfg.summary_pairs);
        read_field(s, "incontext_count", cfg.incontext_count);
    }
    if (toml.contains("gen_triplets")) {
        const auto& s = toml["gen_triplets"];
        read_field(s, "seed_triplets", cfg.seed_triplets);
        read_field(s, "bootstrap_k", cfg.bootstrap_k);
        read_field(s, "stage1_size", cfg.stage1_size);
        read_field(s, "stage2_size", cfg.stage2_size);
    }
    if (toml.contains("gen_images")) {
        const auto& s = toml["gen_images"];
        read_field(s, "box_threshold", cfg.box_threshold);
        read_field(s, "image_threshold", cfg.image_threshold);
        read_field(s, "region_threshold", cfg.region_threshold);
        read_field(s, "crop_factor", cfg.crop_factor);
    }
    if (toml.contains("assemble")) {
        const auto& s = toml["assemble"];
        read_field(s, "k_negatives", cfg.k_negatives);
        read_field(s, "separator", cfg.separator);
        read_field(s, "neg_image_mode", cfg.neg_image_mode);
    }
    if (toml.contains("analyze")) {
        const auto& s = toml["analyze"];
        read_field(s, "pos_lexicon", cfg.pos_lexicon);
        read_field(s, "review_sample_size", cfg.review_sample_size);
    }
    if (toml.contains("backend")) {
        const auto& s = toml["backend"];
        read_field(s, "text_url", cfg.text_backend_url);
        read_field(s, "image_url", cfg.image_backend_url);
        read_field(s, "scorer_url", cfg.scorer_url);
        read_field(s, "image_remote", cfg.image_backend_remote);
        read_field(s, "max_inflight", cfg.max_inflight);
    }
    if (toml.contains("mock")) {
        const auto& s = toml["mock"];
        read_field(s, "scorer_table", cfg.scorer_table);
        read_field(s, "attribute_words", cfg.mock_attributes);
        read_field(s, "fault_echo_rate", cfg.fault_echo_rate);
        read_field(s, "fault_nonjson_rate", cfg.fault_nonjson_rate);
    }
    if (toml.contains("run")) {
        const auto& s = toml["run"];
        if (s.contains("seed")) cfg.seed = s.at("seed").get<uint64_t>();
        read_field(s, "out", cfg.out_dir);
        read_field(s, "cache", cfg.cache_dir);
    }

    cfg.text_backend_url = env_or("NEGGEN_TEXT_BACKEND_URL", cfg.text_backend_url);
    cfg.image_backend_url = env_or("NEGGEN_IMAGE_BACKEND_URL", cfg.image_backend_url);
    cfg.scorer_url = env_or("NEGGEN_SCORER_URL", cfg.scorer_url);
    cfg.text_backend_token = env_or("NEGGEN_TEXT_BACKEND_TOKEN", cfg.text_backend_token);
    cfg.image_backend_token =
        env_or("NEGGEN_IMAGE_BACKEND_TOKEN", cfg.image_backend_token);
    cfg.scorer_token = env_or("NEGGEN_SCORER_TOKEN", cfg.scorer_token);
    return cfg;
}

std::filesystem::path PipelineConfig::resolve(const std::string& path) const {
    std::filesystem::path p(path);
    if (p.is_absolute() || config_dir.empty()) return p;
    return config_dir / p;
}

std::vector<std::string> PipelineConfig::validate(bool check_files) const {
    std::vector<std::string> warnings;
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ValidationError("config: " + what);
    };
    require(!dataset_path.empty(), "dataset.path is required");
    require(box_threshold > 0.0 && box_threshold <= 1.0,
            "gen_images.box_threshold must be in (0, 1]");
    require(image_threshold >= 0.0 && image_threshold <= 1.0,
            "gen_images.image_threshold must be in [0, 1]");
    require(region_threshold >= 0.0 && region_threshold <= 1.0,
            "gen_images.region_threshold must be in [0, 1]");
    require(crop_factor >= 1.0, "gen_images.crop_factor must be >= 1");
    require(k_negatives >= 1, "assemble.k_negatives must be >= 1");
    if (k_negatives < 2) {
        warnings.push_back("assemble.k_negatives below 2 weakens the negative signal");
    }
    require(neg_image_mode == "off" || neg_image_mode == "grounding" ||
                neg_image_mode == "pair" || neg_image_mode == "both",
            "assemble.neg_image_mode must be off|grounding|pair|both");
    require(max_inflight >= 1, "backend.max_inflight must be >= 1");
    require(retry_limit >= 0, "gen_text.retry_limit must be >= 0");
    require(negatives_per_caption >= 1, "gen_text.negatives_per_caption must be >= 1");
    require(incontext_k >= 1, "gen_text.incontext_k must be >= 1");
    require(fault_echo_rate >= 0.0 && fault_echo_rate <= 1.0,
            "mock.fault_echo_rate must be in [0, 1]");
    require(fault_nonjson_rate >= 0.0 && fault_nonjson_rate <= 1.0,
            "mock.fault_nonjson_rate must be in [0, 1]");
    for (const auto& s : strategies) strategy_from_string(s);

    if (check_files) {
        auto must_exist = [&](const std::string& p, const char* what) {
            if (!p.empty() && !std::filesystem::exists(resolve(p))) {
                throw ValidationError(std::string("config: ") + what + " not found: " +
                                      resolve(p).string());
            }
        };
        must_exist(dataset_path, "dataset file");
        must_exist(substitution_table, "substitution table");
        must_exist(seed_pairs, "seed pairs file");
        must_exist(seed_triplets, "seed triplets file");
        must_exist(pos_lexicon, "POS lexicon");
        must_exist(scorer_table, "scorer table");
    }
    return warnings;
}

nlohmann::json PipelineConfig::to_json() const {
    return {
        {"dataset",
         {{"path", dataset_path},
          {"skip_invalid", skip_invalid},
          {"images_root", images_root}}},
        {"gen_text",
         {{"strategies", strategies},
          {"negatives_per_caption", negatives_per_caption},
          {"per_concept_count", per_concept_count},
          {"retry_limit", retry_limit},
          {"temperature", temperature},
          {"max_tokens", max_tokens},
          {"substitution_table", substitution_table},
          {"seed_pairs", seed_pairs},
          {"incontext_k", incontext_k},
          {"summary_pairs", summary_pairs},
          {"incontext_count", incontext_count}}},
        {"gen_triplets",
         {{"seed_triplets", seed_triplets},
          {"bootstrap_k", bootstrap_k},
          {"stage1_size", stage1_size},
          {"stage2_size", stage2_size}}},
        {"gen_images",
         {{"box_threshold", box_threshold},
          {"image_threshold", image_threshold},
          {"region_threshold", region_threshold},
          {"crop_factor", crop_factor}}},
        {"assemble",
         {{"k_negatives", k_negatives},
          {"separator", separator},
          {"neg_image_mode", neg_image_mode}}},
        {"analyze",
         {{"pos_lexicon", pos_lexicon},
          {"review_sample_size", review_sample_size}}},
        {"backend",
         {{"text_url", text_backend_url},
          {"image_url", image_backend_url},
          {"scorer_url", scorer_url},
          {"image_remote", image_backend_remote},
          {"max_inflight", max_inflight}}},
        {"mock",
         {{"scorer_table", scorer_table},
          {"attribute_words", mock_attributes},
          {"fault_echo_rate", fault_echo_rate},
          {"fault_nonjson_rate", fault_nonjson_rate}}},
        {"run", {{"seed", seed}, {"out", out_dir}, {"cache", cache_dir}}},
    };
}

}  // namespace neggen

#include "neggen/mock_image.hpp"

#include "json.hpp"
#include "neggen/errors.hpp"
#include "neggen/hash.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/raster.hpp"
#include "neggen/rng.hpp"

namespace neggen {

MockImageBackend::MockImageBackend(std::filesystem::path out_root,
                                   std::filesystem::path subdir)
    : out_root_(std::move(out_root)), subdir_(std::move(subdir)) {}

std::string MockImageBackend::inpaint(const ImageEditRequest& request) {
    Image img = load_or_synth(request.source_image, request.width, request.height);
    if (img.width != request.width || img.height != request.height) {
        throw BackendError("source image dimensions disagree with the request");
    }
    auto color = color_for_key(request.edited_phrase);
    for (const auto& entry : request.layout) {
        if (entry.phrase == request.edited_phrase) fill_box(img, entry.box, color);
    }
    fill_box(img, request.target_box, color);

    nlohmann::json key_json = {
        {"source", request.source_image},
        {"box", {request.target_box.x1, request.target_box.y1, request.target_box.x2,
                 request.target_box.y2}},
        {"phrase", request.edited_phrase},
        {"caption", request.edited_caption},
        {"seed", request.seed}};
    std::string key = sha256_hex(key_json.dump()).substr(0, 16);
    std::filesystem::path rel = subdir_ / (key + ".png");
    save_png(out_root_ / rel, img);
    return rel.generic_string();
}

MockScorer::MockScorer(std::map<std::string, double> table,
                       std::optional<double> default_logit)
    : table_(std::move(table)), default_logit_(default_logit) {}

MockScorer MockScorer::load(const std::filesystem::path& table_path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(table_path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("scorer table must be a JSON object: " + table_path.string());
    }
    std::map<std::string, double> table;
    std::optional<double> fallback;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "__default__") {
            fallback = it.value().get<double>();
        } else {
            table[it.key()] = it.value().get<double>();
        }
    }
    return MockScorer(std::move(table), fallback);
}

std::vector<double> MockScorer::score(const std::string& image,
                                      const std::optional<BoundingBox>& crop,
                                      const std::vector<std::string>& texts) {
    std::vector<double> logits;
    logits.reserve(texts.size());
    // key on the image basename only, so absolute output roots do not leak
    // into scores
    std::string stem = std::filesystem::path(image).filename().generic_string();
    for (size_t idx = 0; idx < texts.size(); ++idx) {
        auto it = table_.find(texts[idx]);
        if (it != table_.end()) {
            logits.push_back(it->second);
            continue;
        }
        if (default_logit_) {
            logits.push_back(*default_logit_);
            continue;
        }
        nlohmann::json key = {{"image", stem}, {"text", texts[idx]}, {"slot", idx}};
        if (crop) key["crop"] = {crop->x1, crop->y1, crop->x2, crop->y2};
        uint64_t h = derive_seed(0x5c0, "score", key.dump());
        double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
        // hashed fallback leans toward the candidate texts so unconfigured
        // runs keep a realistic share of records
        logits.push_back(idx == 0 ? -2.0 + 2.0 * unit : 2.5 * unit);
    }
    return logits;
}

}  // namespace neggen

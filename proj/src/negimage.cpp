#include "neggen/negimage.hpp"

#include <algorithm>
#include <cmath>

#include "neggen/errors.hpp"
#include "neggen/raster.hpp"
#include "neggen/strutil.hpp"

namespace neggen {

double box_coverage(const BoundingBox& a, const BoundingBox& b) {
    double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    double denom = b.area();
    if (denom <= 0.0) return 0.0;
    return ix * iy / denom;
}

std::vector<size_t> box_filter(const GroundingSample& sample, double threshold) {
    std::vector<size_t> editable;
    for (size_t l = 0; l < sample.regions.size(); ++l) {
        bool ok = true;
        for (size_t k = 0; k < sample.regions.size() && ok; ++k) {
            if (k == l) continue;
            // coverage == threshold keeps; only strictly-greater drops
            if (box_coverage(sample.regions[l].box, sample.regions[k].box) > threshold) {
                ok = false;
            }
        }
        if (ok) editable.push_back(l);
    }
    return editable;
}

BoundingBox upscale_crop_box(const BoundingBox& box, double factor, int image_w,
                             int image_h) {
    double cx = (box.x1 + box.x2) / 2.0;
    double cy = (box.y1 + box.y2) / 2.0;
    double hw = box.width() / 2.0 * factor;
    double hh = box.height() / 2.0 * factor;
    BoundingBox out{cx - hw, cy - hh, cx + hw, cy + hh};
    out.x1 = std::max(0.0, out.x1);
    out.y1 = std::max(0.0, out.y1);
    out.x2 = std::min(static_cast<double>(image_w), out.x2);
    out.y2 = std::min(static_cast<double>(image_h), out.y2);
    return out;
}

double normalized_pair_score(double logit_pos, double logit_neg) {
    double m = std::max(logit_pos, logit_neg);
    double ep = std::exp(logit_pos - m);
    double en = std::exp(logit_neg - m);
    return en / (ep + en);
}

void validate_request(const ImageEditRequest& r) {
    if (r.width <= 0 || r.height <= 0) {
        throw ValidationError("edit request: image dimensions must be positive");
    }
    if (r.target_box.x1 < 0 || r.target_box.y1 < 0 || r.target_box.x2 > r.width ||
        r.target_box.y2 > r.height || !(r.target_box.x1 < r.target_box.x2) ||
        !(r.target_box.y1 < r.target_box.y2)) {
        throw ValidationError("edit request: target box outside image bounds");
    }
    if (find_ci(r.edited_caption, r.edited_phrase) == std::string_view::npos) {
        throw ValidationError(
            "edit request: edited phrase does not occur in edited caption");
    }
}

std::string_view to_string(RecordStatus s) {
    switch (s) {
        case RecordStatus::pending: return "pending";
        case RecordStatus::kept: return "kept";
        case RecordStatus::dropped_box_filter: return "dropped_box_filter";
        case RecordStatus::dropped_image_score: return "dropped_image_score";
        case RecordStatus::dropped_region_score: return "dropped_region_score";
        case RecordStatus::backend_failed: return "backend_failed";
    }
    return "pending";
}

RecordStatus record_status_from_string(std::string_view name) {
    for (RecordStatus s :
         {RecordStatus::pending, RecordStatus::kept, RecordStatus::dropped_box_filter,
          RecordStatus::dropped_image_score, RecordStatus::dropped_region_score,
          RecordStatus::backend_failed}) {
        if (to_string(s) == name) return s;
    }
    throw ParseError("unknown record status '" + std::string(name) + "'");
}

namespace {

nlohmann::json box_to_json(const BoundingBox& b) {
    return nlohmann::json::array({b.x1, b.y1, b.x2, b.y2});
}

BoundingBox box_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
            j.at(3).get<double>()};
}

}  // namespace

nlohmann::json record_to_json(const GeneratedImageRecord& r) {
    nlohmann::json layout = nlohmann::json::array();
    for (const auto& e : r.request.layout) {
        layout.push_back({{"box", box_to_json(e.box)}, {"phrase", e.phrase}});
    }
    return {
        {"sample_id", r.sample_id},
        {"original_caption", r.original_caption},
        {"original_phrase", r.original_phrase},
        {"region_indices", r.region_indices},
        {"edited_span", {r.edited_span.start, r.edited_span.end}},
        {"request",
         {{"image", r.request.source_image},
          {"width", r.request.width},
          {"height", r.request.height},
          {"box", box_to_json(r.request.target_box)},
          {"caption", r.request.edited_caption},
          {"phrase", r.request.edited_phrase},
          {"layout", layout},
          {"seed", r.request.seed}}},
        {"output_image", r.output_image},
        {"image_level_score",
         r.image_level_score ? nlohmann::json(*r.image_level_score)
                             : nlohmann::json(nullptr)},
        {"region_level_score",
         r.region_level_score ? nlohmann::json(*r.region_level_score)
                              : nlohmann::json(nullptr)},
        {"status", std::string(to_string(r.status))},
        {"error_note", r.error_note},
    };
}

GeneratedImageRecord record_from_json(const nlohmann::json& j) {
    GeneratedImageRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.original_caption = j.at("original_caption").get<std::string>();
    r.original_phrase = j.at("original_phrase").get<std::string>();
    r.region_indices = j.at("region_indices").get<std::vector<int>>();
    r.edited_span = {j.at("edited_span").at(0).get<int>(),
                     j.at("edited_span").at(1).get<int>()};
    const auto& rq = j.at("request");
    r.request.source_image = rq.at("image").get<std::string>();
    r.request.width = rq.at("width").get<int>();
    r.request.height = rq.at("height").get<int>();
    r.request.target_box = box_from_json(rq.at("box"));
    r.request.edited_caption = rq.at("caption").get<std::string>();
    r.request.edited_phrase = rq.at("phrase").get<std::string>();
    for (const auto& e : rq.at("layout")) {
        r.request.layout.push_back(
            {box_from_json(e.at("box")), e.at("phrase").get<std::string>()});
    }
    r.request.seed = rq.at("seed").get<uint64_t>();
    r.output_image = j.at("output_image").get<std::string>();
    if (!j.at("image_level_score").is_null()) {
        r.image_level_score = j.at("image_level_score").get<double>();
    }
    if (!j.at("region_level_score").is_null()) {
        r.region_level_score = j.at("region_level_score").get<double>();
    }
    r.status = record_status_from_string(j.at("status").get<std::string>());
    r.error_note = j.value("error_note", "");
    return r;
}

GeneratedImageRecord request_inpaint(GeneratedImageRecord record,
                                     ImageBackend& backend,
                                     const std::filesystem::path& resolve_root) {
    try {
        validate_request(record.request);
        std::string out_path = backend.inpaint(record.request);
        if (out_path.empty()) throw BackendError("inpaint returned no image");
        auto dims = png_dimensions(resolve_root / out_path);
        if (!dims) {
            throw BackendError("inpaint output is not a readable PNG: " + out_path);
        }
        if (dims->first != record.request.width ||
            dims->second != record.request.height) {
            throw BackendError("inpaint output dimensions differ from the source");
        }
        record.output_image = out_path;
        record.status = RecordStatus::pending;
    } catch (const std::exception& e) {
        record.status = RecordStatus::backend_failed;
        record.error_note = e.what();
    }
    return record;
}

void image_level_filter(GeneratedImageRecord& record, Scorer& scorer,
                        double threshold, const std::filesystem::path& resolve_root) {
    if (record.status != RecordStatus::pending) return;
    if (!record.image_level_score) {  // stored scores are reused on reruns
        std::vector<double> logits;
        try {
            logits = scorer.score(
                (resolve_root / record.output_image).generic_string(), std::nullopt,
                {record.original_caption, record.request.edited_caption});
        } catch (const std::exception& e) {
            record.error_note = std::string("image-level scorer failed: ") + e.what();
            return;  // stays pending
        }
        if (logits.size() != 2 || !std::isfinite(logits[0]) ||
            !std::isfinite(logits[1])) {
            record.error_note = "image-level scorer returned bad logits";
            return;
        }
        record.image_level_score = normalized_pair_score(logits[0], logits[1]);
    }
    if (*record.image_level_score < threshold) {
        record.status = RecordStatus::dropped_image_score;
    }
}

void region_level_filter(GeneratedImageRecord& record, Scorer& scorer,
                         double threshold, double crop_factor,
                         const std::filesystem::path& resolve_root) {
    if (record.status != RecordStatus::pending) return;
    if (!record.region_level_score) {
        double min_score = 1.0;
        bool scored_any = false;
        for (const auto& entry : record.request.layout) {
            if (entry.phrase != record.request.edited_phrase) continue;
            BoundingBox crop = upscale_crop_box(entry.box, crop_factor,
                                                record.request.width,
                                                record.request.height);
            std::vector<double> logits;
            try {
                logits = scorer.score(
                    (resolve_root / record.output_image).generic_string(), crop,
                    {record.original_phrase, record.request.edited_phrase});
            } catch (const std::exception& e) {
                record.error_note =
                    std::string("region-level scorer failed: ") + e.what();
                return;
            }
            if (logits.size() != 2 || !std::isfinite(logits[0]) ||
                !std::isfinite(logits[1])) {
                record.error_note = "region-level scorer returned bad logits";
                return;
            }
            double score = normalized_pair_score(logits[0], logits[1]);
            min_score = std::min(min_score, score);
            scored_any = true;
        }
        if (!scored_any) {
            record.error_note = "no edited region to score";
            return;
        }
        record.region_level_score = min_score;
    }
    if (*record.region_level_score < threshold) {
        record.status = RecordStatus::dropped_region_score;
    }
}

nlohmann::json FilterReport::to_json() const {
    return {{"stage", stage},
            {"input", input},
            {"status_counts", status_counts},
            {"retention", retention}};
}

FilterReport FilterReport::from_json(const nlohmann::json& j) {
    FilterReport r;
    r.stage = j.value("stage", "filters");
    r.input = j.at("input").get<int>();
    r.status_counts = j.at("status_counts").get<std::map<std::string, int>>();
    r.retention = j.at("retention").get<double>();
    return r;
}

std::pair<std::vector<GeneratedImageRecord>, FilterReport> run_filters(
    std::vector<GeneratedImageRecord> records, Scorer& scorer,
    const FilterConfig& config, const std::filesystem::path& resolve_root) {
    for (auto& record : records) {
        if (!config.skip_image) {
            image_level_filter(record, scorer, config.image_threshold, resolve_root);
        }
        if (!config.skip_region) {
            region_level_filter(record, scorer, config.region_threshold,
                                config.crop_factor, resolve_root);
        }
        if (record.status == RecordStatus::pending && record.error_note.empty()) {
            record.status = RecordStatus::kept;
        }
    }
    FilterReport report;
    report.input = static_cast<int>(records.size());
    for (const auto& s :
         {RecordStatus::pending, RecordStatus::kept, RecordStatus::dropped_box_filter,
          RecordStatus::dropped_image_score, RecordStatus::dropped_region_score,
          RecordStatus::backend_failed}) {
        report.status_counts[std::string(to_string(s))] = 0;
    }
    for (const auto& record : records) {
        ++report.status_counts[std::string(to_string(record.status))];
    }
    report.retention =
        report.input == 0
            ? 0.0
            : static_cast<double>(report.status_counts["kept"]) / report.input;
    return {std::move(records), report};
}

}  // namespace neggen

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "neggen/types.hpp"

namespace neggen {

// fraction of b's area covered by a: area(a ∩ b) / area(b)
double box_coverage(const BoundingBox& a, const BoundingBox& b);

// Indices of regions whose box covers no more than `threshold` of every other
// region's box; only these are safe to edit.
std::vector<size_t> box_filter(const GroundingSample& sample, double threshold);

// Box scaled about its center by `factor` per dimension, clamped to the image.
BoundingBox upscale_crop_box(const BoundingBox& box, double factor, int image_w,
                             int image_h);

// softmax over two logits, returning the second's share; shift-stabilized.
double normalized_pair_score(double logit_pos, double logit_neg);

struct LayoutEntry {
    BoundingBox box;
    std::string phrase;
};

struct ImageEditRequest {
    std::string source_image;
    int width = 0;
    int height = 0;
    BoundingBox target_box;
    std::string edited_caption;
    std::string edited_phrase;
    std::vector<LayoutEntry> layout;  // conditioning pairs for every region
    uint64_t seed = 0;
};

// target box within bounds; edited phrase present in edited caption
void validate_request(const ImageEditRequest& request);

enum class RecordStatus {
    pending,
    kept,
    dropped_box_filter,
    dropped_image_score,
    dropped_region_score,
    backend_failed,
};

std::string_view to_string(RecordStatus s);
RecordStatus record_status_from_string(std::string_view name);

struct GeneratedImageRecord {
    ImageEditRequest request;
    std::string output_image;  // relative path; empty until inpainting ran
    std::string sample_id;
    std::string original_caption;
    std::string original_phrase;
    std::vector<int> region_indices;  // regions of the edited span, in order
    PhraseSpan edited_span;           // span of edited_phrase inside edited_caption
    std::optional<double> image_level_score;
    std::optional<double> region_level_score;  // min over edited-region crops
    RecordStatus status = RecordStatus::pending;
    std::string error_note;
};

nlohmann::json record_to_json(const GeneratedImageRecord& record);
GeneratedImageRecord record_from_json(const nlohmann::json& j);

// Box-conditioned inpainting backend; returns the output image path.
class ImageBackend {
  public:
    virtual ~ImageBackend() = default;
    virtual std::string inpaint(const ImageEditRequest& request) = 0;
    virtual std::string id() const = 0;
};

// Similarity scorer: unnormalized logits for each candidate text against the
// image (optionally restricted to a crop).
class Scorer {
  public:
    virtual ~Scorer() = default;
    virtual std::vector<double> score(const std::string& image,
                                      const std::optional<BoundingBox>& crop,
                                      const std::vector<std::string>& texts) = 0;
    virtual std::string id() const = 0;
};

// Runs the inpainting backend and verifies output dimensions; failures come
// back as status backend_failed rather than exceptions.
GeneratedImageRecord request_inpaint(GeneratedImageRecord record,
                                     ImageBackend& backend,
                                     const std::filesystem::path& resolve_root);

// Scores [original caption, edited caption] on the whole generated image and
// drops the record when the edited caption's share is below the threshold.
void image_level_filter(GeneratedImageRecord& record, Scorer& scorer,
                        double threshold,
                        const std::filesystem::path& resolve_root = {});

// Crops each edited-region box (upscaled by crop_factor) from the generated
// image and scores [original phrase, edited phrase]; any crop scoring below
// the threshold drops the record.
void region_level_filter(GeneratedImageRecord& record, Scorer& scorer,
                         double threshold, double crop_factor,
                         const std::filesystem::path& resolve_root = {});

struct FilterConfig {
    double image_threshold = 0.35;
    double region_threshold = 0.75;
    double crop_factor = 1.5;
    bool skip_image = false;
    bool skip_region = false;
};

struct FilterReport {
    std::string stage = "filters";
    int input = 0;
    std::map<std::string, int> status_counts;
    double retention = 0.0;  // kept / input

    nlohmann::json to_json() const;
    static FilterReport from_json(const nlohmann::json& j);
};

// Applies the image-level then the region-level filter to every pending
// record; decisions are pure functions of stored scores, so reruns are
// idempotent.
std::pair<std::vector<GeneratedImageRecord>, FilterReport> run_filters(
    std::vector<GeneratedImageRecord> records, Scorer& scorer,
    const FilterConfig& config, const std::filesystem::path& resolve_root = {});

}  // namespace neggen

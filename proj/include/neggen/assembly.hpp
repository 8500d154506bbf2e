#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "neggen/negimage.hpp"
#include "neggen/negtext.hpp"
#include "neggen/types.hpp"

namespace neggen {

struct Token {
    std::string text;
    PhraseSpan span;
};

// Contract: tokenizing a suffix of a larger string at its offset yields the
// same tokens as tokenizing it alone, provided the join point breaks tokens.
class Tokenizer {
  public:
    virtual ~Tokenizer() = default;
    virtual std::vector<Token> tokenize(std::string_view text) const = 0;
};

// Case-preserving alphanumeric runs with exact character spans.
class DefaultTokenizer : public Tokenizer {
  public:
    std::vector<Token> tokenize(std::string_view text) const override;
};

// Sparse binary L×T matrix; entry (l, j) set iff token j's span intersects
// region l's span.
struct AssignmentMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::pair<int, int>> ones;

    bool at(int l, int j) const;
};

struct TrainingRegion {
    BoundingBox box;
    PhraseSpan span;    // into the concatenated text
    int image_index = 0;
};

struct SegmentOut {
    std::string source;  // positive | negative(<strategy>) | generated-image-caption
    PhraseSpan range;
};

struct PlacedImage {
    std::string path;
    double x = 0;
    double y = 0;
};

struct TrainingSample {
    std::string id;
    std::vector<PlacedImage> images;
    double canvas_w = 0;
    double canvas_h = 0;
    std::string text;
    std::vector<SegmentOut> segments;
    std::vector<TrainingRegion> regions;
    AssignmentMatrix matrix;
};

// ---- negative-text sampling and concatenation ----

struct SampledNegatives {
    std::vector<size_t> indices;  // into the pool
    int shortfall = 0;            // how many short of K the pool was
};

// K distinct pool entries, seeded. Pools smaller than K yield everything plus
// a recorded shortfall; sampling with replacement is never used.
SampledNegatives sample_negatives(size_t pool_size, int k, uint64_t seed);

struct SegmentInput {
    std::string source;
    std::string text;
    std::vector<Region> regions;  // spans local to `text`
    int image_index = 0;
};

struct ConcatResult {
    std::string text;
    std::vector<SegmentOut> segments;    // in concatenation order
    std::vector<TrainingRegion> regions; // in input-segment order
    std::vector<size_t> order;           // shuffled order of input segments
};

// Joins segments in seeded-shuffled order; every region span is shifted by
// its segment's concatenation offset. Rejects separators containing the mask
// token.
ConcatResult shuffle_and_concat(const std::vector<SegmentInput>& segments,
                                const std::string& separator, uint64_t seed);

AssignmentMatrix build_assignment_matrix(std::string_view text,
                                         const std::vector<TrainingRegion>& regions,
                                         const Tokenizer& tokenizer);

// ---- training-sample construction ----

struct ChosenNegative {
    std::string text;
    Strategy strategy;
};

// positive caption plus K sampled negative texts, shuffled.
TrainingSample make_text_sample(const GroundingSample& sample,
                                const std::vector<ChosenNegative>& negatives,
                                const std::string& separator, uint64_t seed,
                                const Tokenizer& tokenizer);

// The regions of the edited caption t', derived from the source sample and
// the record's edit. Regions whose span overlaps the edited span (other than
// the edited regions themselves) cannot keep their alignment and are dropped.
struct EditedCaptionRegions {
    std::vector<Region> regions;
    std::vector<bool> edited;  // parallel to regions
    int dropped_overlapping = 0;
};
EditedCaptionRegions regions_for_edited_caption(const GroundingSample& sample,
                                                const GeneratedImageRecord& record);

// Integration option: the generated image becomes a grounding sample of its
// own. t' is the positive caption carrying the regions; the original caption
// t rides along as a pure-negative segment.
TrainingSample make_negative_grounding_sample(const GroundingSample& sample,
                                              const GeneratedImageRecord& record,
                                              const std::string& separator,
                                              uint64_t seed,
                                              const Tokenizer& tokenizer);

// Integration option: original and generated image packed into one canvas.
struct PairLayout {
    bool horizontal = false;  // side-by-side when height >= width
    bool generated_first = false;
    double canvas_w = 0;
    double canvas_h = 0;
    double second_dx = 0;
    double second_dy = 0;
};
PairLayout pair_layout(int width, int height, uint64_t seed);

TrainingSample pack_pair_sample(const GroundingSample& sample,
                                const GeneratedImageRecord& record,
                                const std::string& separator, uint64_t seed,
                                const Tokenizer& tokenizer);

// ---- emission ----

nlohmann::json training_sample_to_json(const TrainingSample& sample);
TrainingSample training_sample_from_json(const nlohmann::json& j);

struct Manifest {
    int count = 0;
    std::map<std::string, int> segment_counts;
    std::string content_hash;

    nlohmann::json to_json() const;
};

Manifest emit_training_set(const std::vector<TrainingSample>& samples,
                           const std::filesystem::path& path);

}  // namespace neggen

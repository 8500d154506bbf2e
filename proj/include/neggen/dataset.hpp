#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "neggen/types.hpp"

namespace neggen {

// Counts of case-folded tokens over all dataset captions.
struct VocabularyIndex {
    std::map<std::string, int> counts;

    bool contains(const std::string& token) const { return counts.count(token) > 0; }
    size_t size() const { return counts.size(); }
    bool empty() const { return counts.empty(); }
};

struct LoadOptions {
    // When true, invalid records are skipped and counted instead of aborting
    // the load.
    bool skip_invalid = false;
};

struct DatasetLoadResult {
    std::vector<GroundingSample> samples;
    int skipped = 0;
};

// Throws ValidationError naming the sample id and offending field.
void validate_sample(const GroundingSample& sample);

GroundingSample sample_from_json(const nlohmann::json& j);
nlohmann::json sample_to_json(const GroundingSample& sample);

// Reads grounding JSONL:
//   {"id", "caption", "image": {"path","width","height"},
//    "regions": [{"box": [x1,y1,x2,y2], "span": [start,end]}]}
// Samples are validated and returned in file order; duplicate ids are
// validation errors.
DatasetLoadResult load_dataset(const std::filesystem::path& path,
                               const LoadOptions& options = {});

void save_dataset(const std::filesystem::path& path,
                  const std::vector<GroundingSample>& samples);

// caption[start..end) of the given region. Throws on a bad index.
std::string_view span_text(const GroundingSample& sample, size_t region_index);

// Case-folded alphanumeric runs, in order of appearance. Empty tokens dropped.
std::vector<std::string> fold_tokens(std::string_view text);

VocabularyIndex build_vocabulary(const std::vector<GroundingSample>& samples);

}  // namespace neggen

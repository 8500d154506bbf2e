#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace neggen {

// Minimal TOML subset: [section] headers, key = value with quoted strings,
// integers, floats, booleans and single-line scalar arrays, # comments.
// Returned as one JSON object per section.
nlohmann::json parse_toml(const std::string& text);

struct PipelineConfig {
    // dataset
    std::string dataset_path;
    bool skip_invalid = false;
    std::string images_root;  // defaults to the dataset file's directory

    // gen_text
    std::vector<std::string> strategies = {"rule_foil", "llm_foil", "recombination",
                                           "incontext_summary"};
    int negatives_per_caption = 2;
    int per_concept_count = 2;
    int retry_limit = 3;
    double temperature = 0.7;
    int max_tokens = 512;
    std::string substitution_table;
    std::string seed_pairs;
    int incontext_k = 3;
    int summary_pairs = 80;
    int incontext_count = 20;

    // gen_triplets
    std::string seed_triplets;
    int bootstrap_k = 3;
    int stage1_size = 100;
    int stage2_size = 1000;

    // gen_images
    double box_threshold = 0.75;
    double image_threshold = 0.35;
    double region_threshold = 0.75;
    double crop_factor = 1.5;

    // assemble
    int k_negatives = 3;
    std::string separator = ". ";
    std::string neg_image_mode = "both";  // off | grounding | pair | both

    // analyze
    std::string pos_lexicon;
    int review_sample_size = 100;

    // backend
    std::string text_backend_url;
    std::string image_backend_url;
    std::string scorer_url;
    std::string text_backend_token;
    std::string image_backend_token;
    std::string scorer_token;
    bool image_backend_remote = false;
    int max_inflight = 4;

    // mock
    std::string scorer_table;
    std::vector<std::string> mock_attributes;
    double fault_echo_rate = 0.0;
    double fault_nonjson_rate = 0.0;

    // run
    uint64_t seed = 42;
    std::string out_dir = "out";
    std::string cache_dir;

    std::filesystem::path config_dir;  // base for relative paths in the file

    // Reads the TOML file, then applies NEGGEN_* environment overrides for
    // backend URLs and tokens.
    static PipelineConfig load(const std::filesystem::path& path);

    // Range checks; with check_files also verifies referenced files exist.
    // Returns human-readable warnings (e.g. K below 2).
    std::vector<std::string> validate(bool check_files) const;

    std::filesystem::path resolve(const std::string& path) const;
    nlohmann::json to_json() const;
};

}  // namespace neggen

#pragma once

#include <memory>
#include <optional>
#include <string>

#include "neggen/backend.hpp"
#include "neggen/config.hpp"
#include "neggen/negimage.hpp"

namespace neggen {

// Command-line overrides applied on top of the config file.
struct RunOverrides {
    bool mock = false;
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> cache_dir;
};

PipelineConfig effective_config(const std::filesystem::path& config_path,
                                const RunOverrides& overrides);

// Backend selection: --mock wires the deterministic in-tree backends,
// otherwise the configured URLs are used; a stage that needs a backend with
// neither configured fails with a backend error.
std::unique_ptr<TextBackend> make_text_backend(const PipelineConfig& config,
                                               bool mock);
std::unique_ptr<ImageBackend> make_image_backend(const PipelineConfig& config,
                                                 bool mock);
std::unique_ptr<Scorer> make_scorer(const PipelineConfig& config, bool mock);

struct GenTextOptions {
    std::vector<std::string> strategies;  // empty = config strategies
};
void cmd_gen_text(const PipelineConfig& config, bool mock,
                  const GenTextOptions& options = {});

struct GenTripletsOptions {
    int bootstrap_stage = 0;  // 0 = dataset triplets, 1 or 2 = bootstrap stages
    std::string reviewed_file;
};
void cmd_gen_triplets(const PipelineConfig& config, bool mock,
                      const GenTripletsOptions& options = {});

struct GenImagesOptions {
    bool skip_image_filter = false;
    bool skip_region_filter = false;
};
void cmd_gen_images(const PipelineConfig& config, bool mock,
                    const GenImagesOptions& options = {});

void cmd_filter_images(const PipelineConfig& config, bool mock,
                       const GenImagesOptions& options = {});

void cmd_assemble(const PipelineConfig& config, bool mock);

void cmd_analyze(const PipelineConfig& config);

void cmd_loss_check(const PipelineConfig& config, const std::string& predictions_path);

void cmd_sample_report(const PipelineConfig& config);

void cmd_validate_config(const PipelineConfig& config);

}  // namespace neggen

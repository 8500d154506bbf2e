#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "neggen/errors.hpp"
#include "neggen/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitBackend = 4;

struct GlobalArgs {
    std::string config_path;
    bool mock = false;
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> cache_dir;

    neggen::RunOverrides overrides() const {
        neggen::RunOverrides o;
        o.mock = mock;
        o.seed = seed;
        o.out_dir = out_dir;
        o.cache_dir = cache_dir;
        return o;
    }
};

void add_global_flags(CLI::App* cmd, GlobalArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline config (TOML)")
        ->required();
    cmd->add_flag("--mock", args.mock, "use the deterministic in-tree backends");
    auto* seed = cmd->add_option("--seed", "override run.seed");
    seed->each([&args](const std::string& v) { args.seed = std::stoull(v); });
    auto* out = cmd->add_option("--out", "override run.out output directory");
    out->each([&args](const std::string& v) { args.out_dir = v; });
    auto* cache = cmd->add_option("--cache", "override run.cache directory");
    cache->each([&args](const std::string& v) { args.cache_dir = v; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"neggen: negative-caption and negative-image training data pipeline"};
    app.require_subcommand(1);
    GlobalArgs args;

    auto* gen_text = app.add_subcommand("gen-text", "generate negative captions");
    add_global_flags(gen_text, args);
    neggen::GenTextOptions text_options;
    gen_text->add_option("--strategies", text_options.strategies,
                         "subset of strategies to run")
        ->delimiter(',');

    auto* gen_triplets = app.add_subcommand(
        "gen-triplets", "mask-and-fill triplets and bootstrap stages");
    add_global_flags(gen_triplets, args);
    neggen::GenTripletsOptions triplet_options;
    gen_triplets->add_option("--bootstrap-stage", triplet_options.bootstrap_stage,
                             "0 = dataset triplets (default), 1 or 2 = bootstrap");
    gen_triplets->add_option("--reviewed", triplet_options.reviewed_file,
                             "reviewed stage-1 file for --bootstrap-stage 2");

    auto* gen_images =
        app.add_subcommand("gen-images", "inpaint negative images and filter them");
    add_global_flags(gen_images, args);
    neggen::GenImagesOptions image_options;
    gen_images->add_flag("--skip-image-filter", image_options.skip_image_filter,
                         "skip the image-level similarity filter");
    gen_images->add_flag("--skip-region-filter", image_options.skip_region_filter,
                         "skip the region-level similarity filter");

    auto* filter_images =
        app.add_subcommand("filter-images", "re-run filters over stored records");
    add_global_flags(filter_images, args);
    neggen::GenImagesOptions refilter_options;
    filter_images->add_flag("--skip-image-filter", refilter_options.skip_image_filter,
                            "skip the image-level similarity filter");
    filter_images->add_flag("--skip-region-filter",
                            refilter_options.skip_region_filter,
                            "skip the region-level similarity filter");

    auto* assemble = app.add_subcommand("assemble", "build the training set");
    add_global_flags(assemble, args);

    auto* analyze = app.add_subcommand("analyze", "diversity and retention reports");
    add_global_flags(analyze, args);

    auto* loss_check =
        app.add_subcommand("loss-check", "evaluate predictions against the set");
    add_global_flags(loss_check, args);
    std::string predictions_path;
    loss_check->add_option("--predictions", predictions_path, "predictions JSONL")
        ->required();

    auto* sample_report =
        app.add_subcommand("sample-report", "emit the human-review bundle");
    add_global_flags(sample_report, args);

    auto* validate =
        app.add_subcommand("validate-config", "check the config and print it");
    add_global_flags(validate, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        neggen::PipelineConfig config =
            neggen::effective_config(args.config_path, args.overrides());
        if (gen_text->parsed()) {
            neggen::cmd_gen_text(config, args.mock, text_options);
        } else if (gen_triplets->parsed()) {
            neggen::cmd_gen_triplets(config, args.mock, triplet_options);
        } else if (gen_images->parsed()) {
            neggen::cmd_gen_images(config, args.mock, image_options);
        } else if (filter_images->parsed()) {
            neggen::cmd_filter_images(config, args.mock, refilter_options);
        } else if (assemble->parsed()) {
            neggen::cmd_assemble(config, args.mock);
        } else if (analyze->parsed()) {
            neggen::cmd_analyze(config);
        } else if (loss_check->parsed()) {
            neggen::cmd_loss_check(config, predictions_path);
        } else if (sample_report->parsed()) {
            neggen::cmd_sample_report(config);
        } else if (validate->parsed()) {
            neggen::cmd_validate_config(config);
        }
        return kExitOk;
    } catch (const neggen::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const neggen::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const neggen::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const neggen::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

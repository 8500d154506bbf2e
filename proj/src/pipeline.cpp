#include "neggen/pipeline.hpp"

#include <atomic>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include "neggen/analyzer.hpp"
#include "neggen/assembly.hpp"
#include "neggen/cache.hpp"
#include "neggen/dataset.hpp"
#include "neggen/errors.hpp"
#include "neggen/hash.hpp"
#include "neggen/http_backend.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/losskernel.hpp"
#include "neggen/mock_backend.hpp"
#include "neggen/mock_image.hpp"
#include "neggen/negimage.hpp"
#include "neggen/negtext.hpp"
#include "neggen/raster.hpp"
#include "neggen/rng.hpp"

namespace neggen {

namespace {

namespace fs = std::filesystem;

// Machine-auditable event log; counts only, never timestamps, so output
// trees stay byte-identical across runs.
class EventLog {
  public:
    explicit EventLog(fs::path file) : file_(std::move(file)) {}
    void event(nlohmann::json entry) { rows_.push_back(std::move(entry)); }
    ~EventLog() {
        try {
            write_jsonl(file_, rows_);
        } catch (...) {
        }
    }

  private:
    fs::path file_;
    std::vector<nlohmann::json> rows_;
};

template <typename Fn>
void parallel_for(size_t n, int max_inflight, Fn&& fn) {
    int workers = static_cast<int>(std::min<size_t>(
        static_cast<size_t>(std::max(1, max_inflight)), n));
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (size_t i; (i = next.fetch_add(1)) < n;) fn(i);
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

GenOptions gen_options(const PipelineConfig& config) {
    GenOptions opt;
    opt.retry_limit = config.retry_limit;
    opt.temperature = config.temperature;
    opt.max_tokens = config.max_tokens;
    opt.per_concept_count = config.per_concept_count;
    opt.seed = config.seed;
    return opt;
}

SubstitutionTable load_table_if_any(const PipelineConfig& config) {
    if (config.substitution_table.empty()) return {};
    return SubstitutionTable::load(config.resolve(config.substitution_table));
}

std::vector<GroundingSample> load_samples(const PipelineConfig& config) {
    LoadOptions opts;
    opts.skip_invalid = config.skip_invalid;
    return load_dataset(config.resolve(config.dataset_path), opts).samples;
}

// Spans can repeat across regions (one phrase, several boxes); image editing
// operates per distinct span.
struct SpanGroup {
    PhraseSpan span;
    std::vector<int> region_indices;
};

std::vector<SpanGroup> span_groups(const GroundingSample& sample) {
    std::vector<SpanGroup> groups;
    for (size_t i = 0; i < sample.regions.size(); ++i) {
        const PhraseSpan& span = sample.regions[i].span;
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const SpanGroup& g) { return g.span == span; });
        if (it == groups.end()) {
            groups.push_back({span, {static_cast<int>(i)}});
        } else {
            it->region_indices.push_back(static_cast<int>(i));
        }
    }
    return groups;
}

nlohmann::json text_config_slice(const PipelineConfig& config,
                                 const std::string& backend_id) {
    return {{"backend", backend_id},
            {"negatives_per_caption", config.negatives_per_caption},
            {"per_concept_count", config.per_concept_count},
            {"retry_limit", config.retry_limit},
            {"temperature", config.temperature},
            {"max_tokens", config.max_tokens},
            {"seed", config.seed},
            {"fault_echo_rate", config.fault_echo_rate},
            {"fault_nonjson_rate", config.fault_nonjson_rate}};
}

std::optional<SummaryContext> build_summary_context(const PipelineConfig& config,
                                                    TextBackend& backend,
                                                    EventLog& log) {
    if (config.seed_pairs.empty()) return std::nullopt;
    std::vector<NegativePair> pool;
    for (const auto& j : read_jsonl(config.resolve(config.seed_pairs))) {
        NegativePair p;
        p.positive = j.at("positive").get<std::string>();
        p.negative = j.at("negative").get<std::string>();
        p.strategy = Strategy::incontext_summary;
        p.sample_id = j.value("sample_id", "");
        pool.push_back(std::move(p));
    }
    if (pool.empty()) return std::nullopt;
    size_t want = std::min<size_t>(static_cast<size_t>(config.summary_pairs),
                                   pool.size());
    Rng rng(derive_seed(config.seed, "summary-pairs"));
    std::vector<NegativePair> chosen;
    for (size_t idx : rng.sample_indices(pool.size(), want)) {
        chosen.push_back(pool[idx]);
    }
    SummaryContext ctx = summarize_pairs(chosen, backend, gen_options(config));
    log.event({{"event", "summary_built"}, {"pairs", chosen.size()}});
    return ctx;
}

}  // namespace

PipelineConfig effective_config(const fs::path& config_path,
                                const RunOverrides& overrides) {
    PipelineConfig config = PipelineConfig::load(config_path);
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.cache_dir) config.cache_dir = *overrides.cache_dir;
    config.validate(false);
    return config;
}

std::unique_ptr<TextBackend> make_text_backend(const PipelineConfig& config,
                                               bool mock) {
    if (mock) {
        MockBackendOptions opt;
        opt.table = load_table_if_any(config);
        opt.attribute_words = config.mock_attributes;
        opt.fault_echo_rate = config.fault_echo_rate;
        opt.fault_nonjson_rate = config.fault_nonjson_rate;
        opt.fault_salt = config.seed;
        return std::make_unique<MockTextBackend>(std::move(opt));
    }
    if (config.text_backend_url.empty()) {
        throw BackendError(
            "no text backend configured; set NEGGEN_TEXT_BACKEND_URL or pass --mock");
    }
    return std::make_unique<HttpTextBackend>(config.text_backend_url,
                                             config.text_backend_token);
}

std::unique_ptr<ImageBackend> make_image_backend(const PipelineConfig& config,
                                                 bool mock) {
    if (mock) return std::make_unique<MockImageBackend>(config.out_dir);
    if (config.image_backend_url.empty()) {
        throw BackendError(
            "no image backend configured; set NEGGEN_IMAGE_BACKEND_URL or pass "
            "--mock");
    }
    return std::make_unique<HttpImageBackend>(config.image_backend_url,
                                              config.image_backend_token,
                                              config.image_backend_remote,
                                              config.out_dir);
}

std::unique_ptr<Scorer> make_scorer(const PipelineConfig& config, bool mock) {
    if (mock) {
        if (!config.scorer_table.empty()) {
            return std::make_unique<MockScorer>(
                MockScorer::load(config.resolve(config.scorer_table)));
        }
        return std::make_unique<MockScorer>();
    }
    if (config.scorer_url.empty()) {
        throw BackendError(
            "no scorer configured; set NEGGEN_SCORER_URL or pass --mock");
    }
    return std::make_unique<HttpScorer>(config.scorer_url, config.scorer_token);
}

void cmd_gen_text(const PipelineConfig& config, bool mock,
                  const GenTextOptions& options) {
    config.validate(true);
    std::vector<Strategy> enabled;
    for (const auto& name :
         options.strategies.empty() ? config.strategies : options.strategies) {
        Strategy s = strategy_from_string(name);
        if (s == Strategy::mask_fill) {
            throw UsageError("mask_fill pairs are produced by gen-triplets");
        }
        enabled.push_back(s);
    }
    auto samples = load_samples(config);
    auto backend = make_text_backend(config, mock);
    SubstitutionTable table = load_table_if_any(config);
    Cache cache(config.cache_dir.empty() ? fs::path{}
                                         : fs::path(config.cache_dir));
    fs::path out_root(config.out_dir);
    EventLog log(out_root / "logs" / "gen_text.jsonl");

    bool wants_concepts =
        std::count(enabled.begin(), enabled.end(), Strategy::llm_foil) ||
        std::count(enabled.begin(), enabled.end(), Strategy::recombination);
    bool wants_incontext =
        std::count(enabled.begin(), enabled.end(), Strategy::incontext_summary) > 0;

    std::optional<SummaryContext> context;
    if (wants_incontext) {
        context = build_summary_context(config, *backend, log);
        if (!context) {
            throw ValidationError(
                "incontext_summary requires gen_text.seed_pairs in the config");
        }
    }
    nlohmann::json cfg_slice = text_config_slice(config, backend->id());
    std::string summary_hash =
        context ? sha256_hex(context->summary) : std::string();

    struct SampleResult {
        std::map<Strategy, std::vector<NegativePair>> pairs;
        GenStats stats;
        int cache_hits = 0;
    };
    std::vector<SampleResult> results(samples.size());

    parallel_for(samples.size(), config.max_inflight, [&](size_t i) {
        const GroundingSample& sample = samples[i];
        SampleResult& slot = results[i];
        GenOptions opts = gen_options(config);

        nlohmann::json key_inputs = {{"sample", sample_to_json(sample)},
                                     {"cfg", cfg_slice},
                                     {"summary", summary_hash}};
        std::optional<ConceptSet> concepts;
        auto llm_concepts = [&]() -> const ConceptSet& {
            if (!concepts) {
                concepts = extract_concepts(sample.caption, *backend, opts, slot.stats);
            }
            return *concepts;
        };

        for (Strategy strategy : enabled) {
            nlohmann::json key_json = key_inputs;
            key_json["strategy"] = std::string(to_string(strategy));
            std::string key = cache.key("gen_text", key_json);
            if (auto hit = cache.get("gen_text", key)) {
                nlohmann::json cached = nlohmann::json::parse(*hit);
                for (const auto& pj : cached.at("pairs")) {
                    slot.pairs[strategy].push_back(pair_from_json(pj));
                }
                GenStats cached_stats;
                const auto& cs = cached.at("stats");
                cached_stats.candidates = cs.at("candidates").get<int>();
                cached_stats.emitted = cs.at("emitted").get<int>();
                cached_stats.dropped_equal = cs.at("dropped_equal").get<int>();
                cached_stats.malformed = cs.at("malformed").get<int>();
                cached_stats.retries = cs.at("retries").get<int>();
                cached_stats.backend_failures = cs.at("backend_failures").get<int>();
                cached_stats.skipped = cs.at("skipped").get<int>();
                slot.stats.merge(cached_stats);
                ++slot.cache_hits;
                continue;
            }

            GenStats stats;
            std::vector<NegativePair> pairs;
            switch (strategy) {
                case Strategy::rule_foil: {
                    ConceptSet rule_concepts = extract_concepts_rule(sample.caption);
                    pairs = rule_foil(sample.caption, sample.id, rule_concepts, table,
                                      derive_seed(config.seed, "rule", sample.id),
                                      stats);
                    break;
                }
                case Strategy::llm_foil: {
                    const ConceptSet& set = llm_concepts();
                    if (set.empty()) {
                        ++stats.skipped;
                        break;
                    }
                    pairs = llm_foil(sample.caption, sample.id, set, *backend, opts,
                                     stats);
                    break;
                }
                case Strategy::recombination: {
                    const ConceptSet& set = llm_concepts();
                    auto objects = set.object_phrases();
                    if (objects.empty()) {
                        ++stats.skipped;
                        break;
                    }
                    pairs = recombine(sample.caption, sample.id, objects, *backend,
                                      config.negatives_per_caption, opts, stats);
                    break;
                }
                case Strategy::incontext_summary: {
                    pairs = incontext_negatives(sample.caption, sample.id, *context,
                                                config.incontext_k, *backend,
                                                config.negatives_per_caption, opts,
                                                stats);
                    break;
                }
                case Strategy::mask_fill: break;
            }
            nlohmann::json cached_pairs = nlohmann::json::array();
            for (const auto& p : pairs) cached_pairs.push_back(pair_to_json(p));
            cache.put("gen_text", key,
                      nlohmann::json({{"pairs", cached_pairs},
                                      {"stats", stats.to_json()}})
                          .dump());
            slot.pairs[strategy] = std::move(pairs);
            slot.stats.merge(stats);
        }
    });

    std::map<Strategy, std::vector<nlohmann::json>> files;
    GenStats total;
    int cache_hits = 0;
    for (const auto& slot : results) {
        for (const auto& [strategy, pairs] : slot.pairs) {
            for (const auto& p : pairs) files[strategy].push_back(pair_to_json(p));
        }
        total.merge(slot.stats);
        cache_hits += slot.cache_hits;
    }
    for (Strategy strategy : enabled) {
        fs::path file = out_root / "pairs" /
                        ("pairs_" + std::string(to_string(strategy)) + ".jsonl");
        write_jsonl(file, files[strategy]);
        log.event({{"event", "pairs_written"},
                   {"strategy", std::string(to_string(strategy))},
                   {"count", files[strategy].size()}});
    }
    log.event({{"event", "summary"},
               {"stats", total.to_json()},
               {"cache_hits", cache_hits},
               {"samples", samples.size()}});
    std::cout << "gen-text: " << total.emitted << " pairs emitted, "
              << total.dropped_equal << " dropped (equal), " << total.retries
              << " retries\ncache hits: " << cache_hits << "\n";
}

void cmd_gen_triplets(const PipelineConfig& config, bool mock,
                      const GenTripletsOptions& options) {
    config.validate(true);
    auto backend = make_text_backend(config, mock);
    fs::path out_root(config.out_dir);
    EventLog log(out_root / "logs" / "gen_triplets.jsonl");
    GenOptions opts = gen_options(config);
    GenStats stats;

    if (options.bootstrap_stage == 1 || options.bootstrap_stage == 2) {
        std::vector<TripletSample> seeds;
        if (options.bootstrap_stage == 1) {
            if (config.seed_triplets.empty()) {
                throw ValidationError(
                    "gen_triplets.seed_triplets is required for bootstrap stage 1");
            }
            for (const auto& j : read_jsonl(config.resolve(config.seed_triplets))) {
                seeds.push_back(triplet_from_json(j));
            }
        } else {
            fs::path reviewed = options.reviewed_file.empty()
                                    ? out_root / "triplets" / "stage1_reviewed.jsonl"
                                    : fs::path(options.reviewed_file);
            if (!fs::exists(reviewed)) {
                throw ValidationError("review file required for bootstrap stage 2: " +
                                      reviewed.string());
            }
            for (const auto& j : read_jsonl(reviewed)) {
                seeds.push_back(triplet_from_json(j));
            }
        }
        int count =
            options.bootstrap_stage == 1 ? config.stage1_size : config.stage2_size;
        auto triplets = bootstrap_generate(seeds, count, config.bootstrap_k, *backend,
                                           opts, stats);
        std::vector<nlohmann::json> rows;
        for (const auto& t : triplets) rows.push_back(triplet_to_json(t));
        fs::path file = out_root / "triplets" /
                        ("bootstrap_stage" + std::to_string(options.bootstrap_stage) +
                         ".jsonl");
        write_jsonl(file, rows);
        log.event({{"event", "bootstrap"},
                   {"stage", options.bootstrap_stage},
                   {"seeds", seeds.size()},
                   {"generated", triplets.size()},
                   {"stats", stats.to_json()}});
        std::cout << "gen-triplets: bootstrap stage " << options.bootstrap_stage
                  << " wrote " << triplets.size() << " triplets to " << file.string()
                  << "\n";
        if (options.bootstrap_stage == 1) {
            std::cout << "review the file, then rerun with --bootstrap-stage 2 "
                         "--reviewed <file>\n";
        }
        return;
    }

    auto samples = load_samples(config);
    Cache cache(config.cache_dir.empty() ? fs::path{}
                                         : fs::path(config.cache_dir));
    nlohmann::json cfg_slice = text_config_slice(config, backend->id());

    struct SampleResult {
        std::vector<TripletSample> triplets;
        GenStats stats;
        int cache_hits = 0;
    };
    std::vector<SampleResult> results(samples.size());
    parallel_for(samples.size(), config.max_inflight, [&](size_t i) {
        const GroundingSample& sample = samples[i];
        SampleResult& slot = results[i];
        GenOptions sample_opts = gen_options(config);
        for (const SpanGroup& group : span_groups(sample)) {
            int first = group.region_indices.front();
            nlohmann::json key_json = {{"sample", sample_to_json(sample)},
                                       {"region", first},
                                       {"cfg", cfg_slice}};
            std::string key = cache.key("gen_triplets", key_json);
            if (auto hit = cache.get("gen_triplets", key)) {
                nlohmann::json cached = nlohmann::json::parse(*hit);
                if (!cached.is_null()) {
                    slot.triplets.push_back(triplet_from_json(cached));
                }
                ++slot.cache_hits;
                continue;
            }
            auto [masked, mask_span] = mask_phrase(sample, static_cast<size_t>(first));
            sample_opts.seed = derive_seed(config.seed, "triplet", sample.id,
                                           static_cast<uint64_t>(first));
            auto triplet =
                fill_mask(sample.caption, masked, *backend, sample_opts, slot.stats);
            if (triplet) {
                triplet->region_index = first;
                triplet->sample_id = sample.id;
                cache.put("gen_triplets", key, triplet_to_json(*triplet).dump());
                slot.triplets.push_back(std::move(*triplet));
            } else {
                cache.put("gen_triplets", key, "null");
            }
        }
    });

    std::vector<nlohmann::json> rows;
    std::vector<nlohmann::json> pair_rows;
    GenStats total;
    int cache_hits = 0;
    for (const auto& slot : results) {
        for (const auto& t : slot.triplets) {
            rows.push_back(triplet_to_json(t));
            NegativePair p{t.positive, t.negative, Strategy::mask_fill,
                           std::nullopt, t.sample_id};
            // the changed concept is the phrase that was masked out
            size_t mpos = t.masked.find(kMaskToken);
            size_t suffix_len = t.masked.size() - mpos - kMaskToken.size();
            p.changed_concept =
                t.positive.substr(mpos, t.positive.size() - mpos - suffix_len);
            pair_rows.push_back(pair_to_json(p));
        }
        total.merge(slot.stats);
        cache_hits += slot.cache_hits;
    }
    write_jsonl(out_root / "triplets" / "triplets.jsonl", rows);
    write_jsonl(out_root / "pairs" / "pairs_mask_fill.jsonl", pair_rows);
    log.event({{"event", "summary"},
               {"triplets", rows.size()},
               {"stats", total.to_json()},
               {"cache_hits", cache_hits}});
    std::cout << "gen-triplets: " << rows.size() << " triplets ("
              << total.skipped << " skipped)\ncache hits: " << cache_hits << "\n";
}

namespace {

std::vector<GeneratedImageRecord> load_records(const fs::path& file) {
    std::vector<GeneratedImageRecord> records;
    for (const auto& j : read_jsonl(file)) records.push_back(record_from_json(j));
    return records;
}

void store_records(const fs::path& file,
                   const std::vector<GeneratedImageRecord>& records) {
    std::vector<nlohmann::json> rows;
    for (const auto& r : records) rows.push_back(record_to_json(r));
    write_jsonl(file, rows);
}

FilterConfig filter_config(const PipelineConfig& config,
                           const GenImagesOptions& options) {
    FilterConfig fc;
    fc.image_threshold = config.image_threshold;
    fc.region_threshold = config.region_threshold;
    fc.crop_factor = config.crop_factor;
    fc.skip_image = options.skip_image_filter;
    fc.skip_region = options.skip_region_filter;
    return fc;
}

}  // namespace

void cmd_gen_images(const PipelineConfig& config, bool mock,
                    const GenImagesOptions& options) {
    config.validate(true);
    auto samples = load_samples(config);
    fs::path out_root(config.out_dir);
    EventLog log(out_root / "logs" / "gen_images.jsonl");

    // triplets: reuse gen-triplets output when present, otherwise fill inline
    std::map<std::pair<std::string, int>, TripletSample> triplets;
    fs::path triplet_file = out_root / "triplets" / "triplets.jsonl";
    if (fs::exists(triplet_file)) {
        for (const auto& j : read_jsonl(triplet_file)) {
            TripletSample t = triplet_from_json(j);
            triplets[{t.sample_id, t.region_index}] = t;
        }
        log.event({{"event", "triplets_loaded"}, {"count", triplets.size()}});
    } else {
        auto backend = make_text_backend(config, mock);
        GenStats stats;
        GenOptions opts = gen_options(config);
        for (const auto& sample : samples) {
            for (const SpanGroup& group : span_groups(sample)) {
                int first = group.region_indices.front();
                auto [masked, span] = mask_phrase(sample, static_cast<size_t>(first));
                opts.seed = derive_seed(config.seed, "triplet", sample.id,
                                        static_cast<uint64_t>(first));
                auto t = fill_mask(sample.caption, masked, *backend, opts, stats);
                if (t) {
                    t->region_index = first;
                    t->sample_id = sample.id;
                    triplets[{sample.id, first}] = *t;
                }
            }
        }
        log.event({{"event", "triplets_inline"},
                   {"count", triplets.size()},
                   {"stats", stats.to_json()}});
    }

    auto image_backend = make_image_backend(config, mock);
    Cache cache(config.cache_dir.empty() ? fs::path{}
                                         : fs::path(config.cache_dir));

    // build one record per editable span that has a triplet
    std::vector<GeneratedImageRecord> records;
    int no_triplet = 0;
    for (const auto& sample : samples) {
        auto editable = box_filter(sample, config.box_threshold);
        std::set<size_t> editable_set(editable.begin(), editable.end());
        for (const SpanGroup& group : span_groups(sample)) {
            int first = group.region_indices.front();
            auto it = triplets.find({sample.id, first});
            if (it == triplets.end()) {
                ++no_triplet;
                continue;
            }
            const TripletSample& t = it->second;
            size_t mpos = t.masked.find(kMaskToken);
            size_t suffix_len = t.masked.size() - mpos - kMaskToken.size();
            std::string edited_phrase =
                t.negative.substr(mpos, t.negative.size() - mpos - suffix_len);

            GeneratedImageRecord record;
            record.sample_id = sample.id;
            record.original_caption = sample.caption;
            record.original_phrase =
                std::string(span_text(sample, static_cast<size_t>(first)));
            record.region_indices = group.region_indices;
            record.edited_span = {static_cast<int>(mpos),
                                  static_cast<int>(mpos + edited_phrase.size())};
            record.request.source_image = sample.image.path;
            record.request.width = sample.image.width;
            record.request.height = sample.image.height;
            record.request.target_box = sample.regions[static_cast<size_t>(first)].box;
            record.request.edited_caption = t.negative;
            record.request.edited_phrase = edited_phrase;
            for (size_t k = 0; k < sample.regions.size(); ++k) {
                bool in_group =
                    std::find(group.region_indices.begin(), group.region_indices.end(),
                              static_cast<int>(k)) != group.region_indices.end();
                record.request.layout.push_back(
                    {sample.regions[k].box,
                     in_group ? edited_phrase
                              : std::string(span_text(sample, k))});
            }
            record.request.seed = derive_seed(config.seed, "inpaint", sample.id,
                                              static_cast<uint64_t>(first));

            bool all_editable = std::all_of(
                group.region_indices.begin(), group.region_indices.end(),
                [&](int idx) { return editable_set.count(static_cast<size_t>(idx)); });
            if (!all_editable) {
                record.status = RecordStatus::dropped_box_filter;
            }
            records.push_back(std::move(record));
        }
    }

    // inpainting with per-record caching
    int cache_hits = 0;
    std::atomic<int> cache_hits_atomic{0};
    parallel_for(records.size(), config.max_inflight, [&](size_t i) {
        GeneratedImageRecord& record = records[i];
        if (record.status != RecordStatus::pending) return;
        nlohmann::json key_json = record_to_json(record);
        key_json["backend"] = image_backend->id();
        std::string key = cache.key("inpaint", key_json);
        if (auto hit = cache.get("inpaint", key)) {
            GeneratedImageRecord cached =
                record_from_json(nlohmann::json::parse(*hit));
            if (cached.status != RecordStatus::backend_failed &&
                fs::exists(fs::path(config.out_dir) / cached.output_image)) {
                record = std::move(cached);
                ++cache_hits_atomic;
                return;
            }
        }
        record = request_inpaint(std::move(record), *image_backend, config.out_dir);
        cache.put("inpaint", key, record_to_json(record).dump());
    });
    cache_hits = cache_hits_atomic.load();

    fs::path records_file = out_root / "records" / "records.jsonl";
    store_records(records_file, records);  // persisted before filtering

    auto scorer = make_scorer(config, mock);
    auto [filtered, report] =
        run_filters(std::move(records), *scorer, filter_config(config, options),
                    config.out_dir);
    store_records(records_file, filtered);
    write_text_file(out_root / "records" / "filter_report.json",
                    report.to_json().dump(2) + "\n");

    log.event({{"event", "summary"},
               {"records", filtered.size()},
               {"no_triplet", no_triplet},
               {"cache_hits", cache_hits},
               {"report", report.to_json()}});
    std::cout << "gen-images: " << filtered.size() << " records, retention "
              << report.retention << "\ncache hits: " << cache_hits << "\n";
}

void cmd_filter_images(const PipelineConfig& config, bool mock,
                       const GenImagesOptions& options) {
    config.validate(true);
    fs::path out_root(config.out_dir);
    fs::path records_file = out_root / "records" / "records.jsonl";
    if (!fs::exists(records_file)) {
        throw ValidationError("no records found at " + records_file.string() +
                              "; run gen-images first");
    }
    auto records = load_records(records_file);
    // score-stage verdicts are recomputed from thresholds; box-filter and
    // backend outcomes stand
    for (auto& r : records) {
        if (r.status == RecordStatus::kept ||
            r.status == RecordStatus::dropped_image_score ||
            r.status == RecordStatus::dropped_region_score) {
            r.status = RecordStatus::pending;
            r.error_note.clear();
        }
    }
    auto scorer = make_scorer(config, mock);
    auto [filtered, report] =
        run_filters(std::move(records), *scorer, filter_config(config, options),
                    config.out_dir);
    store_records(records_file, filtered);
    write_text_file(out_root / "records" / "filter_report.json",
                    report.to_json().dump(2) + "\n");
    EventLog log(out_root / "logs" / "filter_images.jsonl");
    log.event({{"event", "summary"}, {"report", report.to_json()}});
    std::cout << "filter-images: retention " << report.retention << "\n";
}

namespace {

Image load_image_for(const PipelineConfig& config, const std::string& stored_path,
                     int width, int height, bool out_relative) {
    fs::path resolved;
    if (out_relative) {
        resolved = fs::path(config.out_dir) / stored_path;
    } else {
        fs::path images_root = config.images_root.empty()
                                   ? config.resolve(config.dataset_path).parent_path()
                                   : config.resolve(config.images_root);
        resolved = images_root / stored_path;
    }
    if (fs::exists(resolved) && png_dimensions(resolved)) {
        return load_png(resolved);
    }
    // placeholder keyed on the stored (relative) path, never the resolved
    // root, so synthesized pixels match across machines
    return synth_background(stored_path, width, height);
}

}  // namespace

void cmd_assemble(const PipelineConfig& config, bool mock) {
    config.validate(true);
    auto samples = load_samples(config);
    fs::path out_root(config.out_dir);
    EventLog log(out_root / "logs" / "assemble.jsonl");
    DefaultTokenizer tokenizer;

    // pool every pairs file present under out/pairs
    std::map<std::string, std::vector<NegativePair>> pools;
    fs::path pairs_dir = out_root / "pairs";
    size_t total_pairs = 0;
    if (fs::exists(pairs_dir)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(pairs_dir)) {
            if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            for (const auto& j : read_jsonl(file)) {
                NegativePair p = pair_from_json(j);
                pools[p.sample_id].push_back(std::move(p));
                ++total_pairs;
            }
        }
    }

    std::vector<GeneratedImageRecord> kept_records;
    fs::path records_file = out_root / "records" / "records.jsonl";
    if (config.neg_image_mode != "off" && fs::exists(records_file)) {
        for (auto& r : load_records(records_file)) {
            if (r.status == RecordStatus::kept) kept_records.push_back(std::move(r));
        }
    }

    std::vector<TrainingSample> training;
    int shortfall_total = 0;
    int zero_negative_samples = 0;
    for (const auto& sample : samples) {
        const auto& pool = pools[sample.id];
        SampledNegatives sampled =
            sample_negatives(pool.size(), config.k_negatives,
                             derive_seed(config.seed, "sample-negs", sample.id));
        shortfall_total += sampled.shortfall;
        if (pool.empty()) ++zero_negative_samples;
        std::vector<ChosenNegative> negatives;
        for (size_t idx : sampled.indices) {
            negatives.push_back({pool[idx].negative, pool[idx].strategy});
        }
        training.push_back(make_text_sample(
            sample, negatives, config.separator,
            derive_seed(config.seed, "concat", sample.id), tokenizer));
    }

    std::map<std::string, const GroundingSample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;
    int composites = 0;
    for (const auto& record : kept_records) {
        auto it = by_id.find(record.sample_id);
        if (it == by_id.end()) {
            throw ValidationError("record references unknown sample '" +
                                  record.sample_id + "'");
        }
        const GroundingSample& sample = *it->second;
        if (config.neg_image_mode == "grounding" || config.neg_image_mode == "both") {
            training.push_back(make_negative_grounding_sample(
                sample, record, config.separator,
                derive_seed(config.seed, "negimg", record.sample_id,
                            static_cast<uint64_t>(record.region_indices.front())),
                tokenizer));
        }
        if (config.neg_image_mode == "pair" || config.neg_image_mode == "both") {
            TrainingSample packed = pack_pair_sample(
                sample, record, config.separator,
                derive_seed(config.seed, "pair", record.sample_id,
                            static_cast<uint64_t>(record.region_indices.front())),
                tokenizer);

            // composite the canvas; the first-listed image sits at the origin
            bool horizontal = packed.canvas_w > sample.image.width;
            bool generated_first = packed.images[0].path == record.output_image;
            Image first = load_image_for(
                config, packed.images[0].path, sample.image.width,
                sample.image.height, generated_first);
            Image second = load_image_for(
                config, packed.images[1].path, sample.image.width,
                sample.image.height, !generated_first);
            Image canvas = composite_pair(first, second, horizontal);
            std::string flat = packed.id;
            std::replace(flat.begin(), flat.end(), '/', '_');
            save_png(out_root / "composites" / (flat + ".png"), canvas);
            ++composites;
            training.push_back(std::move(packed));
        }
    }

    Manifest manifest =
        emit_training_set(training, out_root / "training" / "training.jsonl");
    nlohmann::json manifest_json = manifest.to_json();
    manifest_json["shortfall"] = shortfall_total;
    manifest_json["samples_without_negatives"] = zero_negative_samples;
    manifest_json["composites"] = composites;
    write_text_file(out_root / "training" / "manifest.json",
                    manifest_json.dump(2) + "\n");
    log.event({{"event", "summary"},
               {"training_samples", training.size()},
               {"pairs_pooled", total_pairs},
               {"manifest", manifest_json}});
    std::cout << "assemble: " << training.size() << " training samples, hash "
              << manifest.content_hash.substr(0, 16) << "\n";
}

void cmd_analyze(const PipelineConfig& config) {
    config.validate(true);
    fs::path out_root(config.out_dir);
    fs::path reports = out_root / "reports";
    EventLog log(out_root / "logs" / "analyze.jsonl");

    auto samples = load_samples(config);
    VocabularyIndex vocab = build_vocabulary(samples);
    LexiconTagger tagger;
    if (!config.pos_lexicon.empty()) {
        tagger = LexiconTagger::load(config.resolve(config.pos_lexicon));
    }

    std::map<std::string, std::vector<NegativePair>> per_strategy;
    fs::path pairs_dir = out_root / "pairs";
    if (fs::exists(pairs_dir)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(pairs_dir)) {
            if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            for (const auto& j : read_jsonl(file)) {
                NegativePair p = pair_from_json(j);
                per_strategy[std::string(to_string(p.strategy))].push_back(
                    std::move(p));
            }
        }
    }
    if (per_strategy.empty()) {
        throw ValidationError("no pairs found under " + pairs_dir.string() +
                              "; run gen-text first");
    }

    std::map<std::string, Histogram> lengths;
    std::map<std::string, Histogram> changed;
    std::map<std::string, ExtraWordRates> extra;
    nlohmann::json diversity = nlohmann::json::array();
    for (const auto& [strategy, pairs] : per_strategy) {
        DiversityReport report = analyze_strategy(strategy, pairs, vocab, tagger);
        lengths[strategy] = report.lengths;
        changed[strategy] = report.changed;
        extra[strategy] = report.extra;
        diversity.push_back(report.to_json());
    }
    write_lengths_csv(reports / "fig5_lengths.csv", lengths);
    write_changed_csv(reports / "fig6_changed.csv", changed);
    write_extra_words_csv(reports / "fig7_extra_words.csv", extra);
    write_text_file(reports / "diversity.json", diversity.dump(2) + "\n");

    fs::path report_file = out_root / "records" / "filter_report.json";
    if (fs::exists(report_file)) {
        FilterReport fr = FilterReport::from_json(
            nlohmann::json::parse(read_text_file(report_file)));
        write_retention_csv(reports / "fig9_retention.csv", staged_retention(fr));
    }
    log.event({{"event", "summary"}, {"strategies", per_strategy.size()}});
    std::cout << "analyze: " << per_strategy.size() << " strategies reported\n";
}

void cmd_loss_check(const PipelineConfig& config,
                    const std::string& predictions_path) {
    config.validate(false);
    fs::path out_root(config.out_dir);
    fs::path training_file = out_root / "training" / "training.jsonl";
    if (!fs::exists(training_file)) {
        throw ValidationError("no training set at " + training_file.string() +
                              "; run assemble first");
    }
    if (!fs::exists(predictions_path)) {
        throw ValidationError("predictions file not found: " + predictions_path);
    }

    std::map<std::string, std::vector<Prediction>> preds;
    for (const auto& j : read_jsonl(predictions_path)) {
        std::vector<Prediction>& list = preds[j.at("sample_id").get<std::string>()];
        for (const auto& pj : j.at("preds")) {
            Prediction p;
            const auto& b = pj.at("box");
            p.box = {b.at(0).get<double>(), b.at(1).get<double>(),
                     b.at(2).get<double>(), b.at(3).get<double>()};
            auto logits = pj.at("logits").get<std::vector<double>>();
            p.logits = Eigen::Map<Eigen::VectorXd>(logits.data(),
                                                   static_cast<Eigen::Index>(logits.size()));
            list.push_back(std::move(p));
        }
    }

    FocalParams params;
    nlohmann::json rows = nlohmann::json::array();
    Rng rng(derive_seed(config.seed, "loss-check"));
    int failures = 0;
    for (const auto& j : read_jsonl(training_file)) {
        TrainingSample sample = training_sample_from_json(j);
        auto it = preds.find(sample.id);
        std::vector<Prediction> plist =
            it == preds.end() ? std::vector<Prediction>{} : it->second;
        LossResult res = grounding_loss(plist, sample, params);

        // spot-check the analytic gradient against central differences
        double max_rel = 0.0;
        int checked = 0;
        for (int c = 0; c < 8 && !plist.empty(); ++c) {
            size_t i = rng.below(plist.size());
            if (sample.matrix.cols == 0) break;
            Eigen::Index t = static_cast<Eigen::Index>(
                rng.below(static_cast<size_t>(sample.matrix.cols)));
            const double h = 1e-5;
            auto eval = [&](double delta) {
                std::vector<Prediction> perturbed = plist;
                perturbed[i].logits[t] += delta;
                return grounding_loss(perturbed, sample, params).loss;
            };
            double fd = (eval(h) - eval(-h)) / (2 * h);
            double analytic = res.gradients(static_cast<Eigen::Index>(i), t);
            double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
            max_rel = std::max(max_rel, std::abs(analytic - fd) / denom);
            ++checked;
        }
        bool pass = max_rel <= 1e-5;
        if (!pass) ++failures;
        rows.push_back({{"id", sample.id},
                        {"loss", res.loss},
                        {"assignment", res.assignment},
                        {"predictions", plist.size()},
                        {"grad_check",
                         {{"checked", checked}, {"max_rel_err", max_rel}, {"pass", pass}}}});
    }
    write_text_file(out_root / "reports" / "loss_check.json", rows.dump(2) + "\n");
    std::cout << "loss-check: " << rows.size() << " samples, "
              << (failures == 0 ? "all gradient checks passed"
                                : std::to_string(failures) + " gradient checks FAILED")
              << "\n";
    if (failures > 0) throw ValidationError("gradient checks failed");
}

void cmd_sample_report(const PipelineConfig& config) {
    config.validate(false);
    fs::path out_root(config.out_dir);
    fs::path records_file = out_root / "records" / "records.jsonl";
    if (!fs::exists(records_file)) {
        throw ValidationError("no records at " + records_file.string() +
                              "; run gen-images first");
    }
    auto records = load_records(records_file);
    write_review_bundle(out_root / "review", records,
                        static_cast<size_t>(config.review_sample_size),
                        derive_seed(config.seed, "review"));
    std::cout << "sample-report: review bundle at "
              << (out_root / "review" / "index.html").string() << "\n";
}

void cmd_validate_config(const PipelineConfig& config) {
    auto warnings = config.validate(true);
    std::cout << config.to_json().dump(2) << "\n";
    for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
}

}  // namespace neggen

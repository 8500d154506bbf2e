#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "neggen/backend.hpp"
#include "neggen/types.hpp"

namespace neggen {

inline constexpr std::string_view kMaskToken = "[Mask]";

enum class Strategy {
    rule_foil,
    llm_foil,
    recombination,
    incontext_summary,
    mask_fill,
};

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);
std::vector<Strategy> text_strategies();  // the four caption-level strategies

// A phrase found in a caption. Backends may paraphrase; phrases that do not
// occur verbatim (case-insensitive) in the source caption are kept but
// flagged unanchored.
struct ConceptPhrase {
    std::string text;
    bool unanchored = false;
};

struct ConceptSet {
    std::vector<ConceptPhrase> objects;
    std::vector<ConceptPhrase> attributes;
    std::vector<ConceptPhrase> relationships;

    bool empty() const {
        return objects.empty() && attributes.empty() && relationships.empty();
    }
    // Visiting order for foils: objects, then attributes, then relationships,
    // each in order of appearance.
    std::vector<std::string> ordered_phrases() const;
    std::vector<std::string> object_phrases() const;
};

struct NegativePair {
    std::string positive;
    std::string negative;
    Strategy strategy = Strategy::rule_foil;
    std::optional<std::string> changed_concept;
    std::string sample_id;
};

struct TripletSample {
    std::string positive;
    std::string masked;  // positive with exactly one span replaced by [Mask]
    std::string negative;
    int region_index = -1;  // -1 for corpus-level bootstrap triplets
    std::string sample_id;
};

struct SummaryContext {
    std::string summary;
    std::vector<NegativePair> exemplars;
};

// word -> candidate replacements, loaded from a flat JSON object file.
struct SubstitutionTable {
    std::map<std::string, std::vector<std::string>> entries;

    const std::vector<std::string>* find(std::string_view word) const;
    static SubstitutionTable load(const std::filesystem::path& path);
};

struct GenOptions {
    int retry_limit = 3;
    double temperature = 0.7;
    int max_tokens = 512;
    int per_concept_count = 2;
    uint64_t seed = 0;
};

// Counters for the generation bookkeeping invariant: emitted equals parsed
// candidates minus recorded drops and skips.
struct GenStats {
    int candidates = 0;      // well-formed candidates parsed from replies
    int emitted = 0;         // pairs/triplets that passed all checks
    int dropped_equal = 0;   // negative == positive after normalization
    int malformed = 0;       // reply items that failed parsing/structure
    int retries = 0;
    int backend_failures = 0;
    int skipped = 0;         // items abandoned after retry exhaustion

    void merge(const GenStats& o);
    nlohmann::json to_json() const;
};

// Collapses whitespace runs and trims; used for the negative != positive
// check.
std::string normalize_whitespace(std::string_view text);

// ---- concept extraction ----

// LLM path: prompts the backend and parses its JSON reply (one repair pass
// for near-JSON, then retries up to options.retry_limit).
ConceptSet extract_concepts(const std::string& caption, TextBackend& backend,
                            const GenOptions& options, GenStats& stats);

// Rule path: the built-in pattern parser. Produces object phrases only
// (non-stopword tokens); attributes and relationships stay empty.
ConceptSet extract_concepts_rule(const std::string& caption);

// ---- caption-level strategies ----

std::vector<NegativePair> rule_foil(const std::string& caption,
                                    const std::string& sample_id,
                                    const ConceptSet& concepts,
                                    const SubstitutionTable& table, uint64_t seed,
                                    GenStats& stats);

std::vector<NegativePair> llm_foil(const std::string& caption,
                                   const std::string& sample_id,
                                   const ConceptSet& concepts, TextBackend& backend,
                                   const GenOptions& options, GenStats& stats);

std::vector<NegativePair> recombine(const std::string& caption,
                                    const std::string& sample_id,
                                    const std::vector<std::string>& objects,
                                    TextBackend& backend, int count,
                                    const GenOptions& options, GenStats& stats);

SummaryContext summarize_pairs(const std::vector<NegativePair>& seed_pairs,
                               TextBackend& backend, const GenOptions& options);

// Free-standing pair generation from a summary plus k exemplars, parsed from
// a numbered Input/Negative completion.
std::vector<NegativePair> generate_from_summary(const SummaryContext& context,
                                                int k, TextBackend& backend,
                                                int count, const GenOptions& options,
                                                GenStats& stats);

// Same machinery pointed at one dataset caption: the completion is seeded
// with the caption as the next numbered input and the backend supplies only
// the negative line.
std::vector<NegativePair> incontext_negatives(const std::string& caption,
                                              const std::string& sample_id,
                                              const SummaryContext& context, int k,
                                              TextBackend& backend, int count,
                                              const GenOptions& options,
                                              GenStats& stats);

// ---- mask-and-fill ----

// Replaces the region's span with [Mask]; returns the new caption and the
// span of the mask token within it.
std::pair<std::string, PhraseSpan> mask_phrase(const GroundingSample& sample,
                                               size_t region_index);

// Fills [Mask] through the backend. The reply must keep every non-mask
// character of the template intact and the fill must differ from the
// original span text; offending replies are retried, then skipped.
std::optional<TripletSample> fill_mask(const std::string& positive,
                                       const std::string& masked,
                                       TextBackend& backend,
                                       const GenOptions& options, GenStats& stats);

// One bootstrap stage: summarize exemplar triplets, then generate `count` new
// ones from the summary plus k exemplars.
std::vector<TripletSample> bootstrap_generate(
    const std::vector<TripletSample>& exemplars, int count, int k,
    TextBackend& backend, const GenOptions& options, GenStats& stats);

// ---- reply plumbing shared with tests ----

// Lenient-then-strict JSON: strips code fences and trailing commas, trims to
// the outermost braces, then parses. Returns discarded JSON on failure.
nlohmann::json parse_json_reply(const std::string& reply);

struct ParsedPairItems {
    std::vector<std::pair<std::string, std::string>> pairs;
    int skipped = 0;
};
// Parses "N. Input: ... / N. Negative: ..." items from a completion that
// continues item `first_index`. Stops after `count` good items or at the
// first malformed item beyond them.
ParsedPairItems parse_pair_completion(const std::string& completion,
                                      int first_index, int count);

struct ParsedTripletItems {
    std::vector<TripletSample> triplets;
    int skipped = 0;
};
ParsedTripletItems parse_triplet_completion(const std::string& completion,
                                            int first_index, int count);

// JSONL round trip for pairs and triplets.
nlohmann::json pair_to_json(const NegativePair& p);
NegativePair pair_from_json(const nlohmann::json& j);
nlohmann::json triplet_to_json(const TripletSample& t);
TripletSample triplet_from_json(const nlohmann::json& j);

}  // namespace neggen

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "neggen/dataset.hpp"
#include "neggen/negimage.hpp"
#include "neggen/negtext.hpp"

namespace neggen {

enum class PosGroup { VERB, NOUN, ADP_ADJ, OTHER };
std::string_view to_string(PosGroup g);

// Total mapping: unknown tokens fall back to OTHER.
class PosTagger {
  public:
    virtual ~PosTagger() = default;
    virtual PosGroup tag(const std::string& folded_token) const = 0;
};

class LexiconTagger : public PosTagger {
  public:
    static LexiconTagger load(const std::filesystem::path& path);
    PosGroup tag(const std::string& folded_token) const override;
    void add(const std::string& folded_token, PosGroup group);

  private:
    std::map<std::string, PosGroup> lexicon_;
};

using Histogram = std::map<int, double>;  // bucket -> fraction

// Whitespace-word counts of negatives for one strategy, normalized.
Histogram word_count_histogram(const std::vector<NegativePair>& pairs);

// One-sided multiset difference: case-folded tokens of the negative not
// matched by tokens of the positive.
int changed_word_count(const std::string& positive, const std::string& negative);

Histogram changed_word_histogram(const std::vector<NegativePair>& pairs);

struct ExtraWordRates {
    double verb = 0;
    double noun = 0;
    double adp_adj = 0;
    double other = 0;

    double& for_group(PosGroup g);
    double for_group(PosGroup g) const;
};

// Unique case-folded tokens appearing in negatives but absent from the
// dataset vocabulary, counted once each, grouped by POS, scaled to `per`
// negatives.
ExtraWordRates extra_unique_words_per_k(const std::vector<NegativePair>& pairs,
                                        const VocabularyIndex& vocab,
                                        const PosTagger& tagger, int per = 1000);

struct DiversityReport {
    std::string strategy;
    Histogram lengths;
    Histogram changed;
    ExtraWordRates extra;

    nlohmann::json to_json() const;
};

DiversityReport analyze_strategy(const std::string& strategy,
                                 const std::vector<NegativePair>& pairs,
                                 const VocabularyIndex& vocab,
                                 const PosTagger& tagger);

struct RetentionRow {
    std::string stage;
    int kept = 0;
    int total = 0;
    double fraction = 0;
};

// Kept fraction per report, one row per pipeline stage.
std::vector<RetentionRow> filter_retention_stats(
    const std::vector<FilterReport>& reports);

// Retention after each internal stage of a single filter run, derived from
// its status counts.
std::vector<RetentionRow> staged_retention(const FilterReport& report);

// ---- CSV / report emission ----

void write_lengths_csv(const std::filesystem::path& path,
                       const std::map<std::string, Histogram>& per_strategy);
void write_changed_csv(const std::filesystem::path& path,
                       const std::map<std::string, Histogram>& per_strategy);
void write_extra_words_csv(const std::filesystem::path& path,
                           const std::map<std::string, ExtraWordRates>& per_strategy);
void write_retention_csv(const std::filesystem::path& path,
                         const std::vector<RetentionRow>& rows);

// Seeded sample of records with an HTML index listing image paths and caption
// pairs, for offline human review.
void write_review_bundle(const std::filesystem::path& dir,
                         const std::vector<GeneratedImageRecord>& records,
                         size_t sample_size, uint64_t seed);

}  // namespace neggen

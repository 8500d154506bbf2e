#pragma once

#include <string>
#include <vector>

#include "neggen/backend.hpp"
#include "neggen/negtext.hpp"

namespace neggen {

// Deterministic stand-in for a text-generation model. Replies are pure
// functions of (prompt, seed): foils come from the substitution table,
// summaries are sorted-token digests, mask fills are table lookups keyed on
// the masked words. Fault injection is hash-gated per request so concurrent
// callers still see reproducible behavior.
struct MockBackendOptions {
    SubstitutionTable table;
    std::vector<std::string> attribute_words;
    std::vector<std::string> relationship_words = {"with", "beside", "under",
                                                   "over", "near"};
    // Probability that a reply echoes the positive text as its negative.
    double fault_echo_rate = 0.0;
    // Probability that a JSON-format reply comes back as unstructured prose.
    double fault_nonjson_rate = 0.0;
    uint64_t fault_salt = 0;
};

class MockTextBackend : public TextBackend {
  public:
    explicit MockTextBackend(MockBackendOptions options);

    GenerationResponse generate(const GenerationRequest& request) override;
    std::string id() const override { return "mock"; }

  private:
    MockBackendOptions opt_;

    bool fault_fires(const GenerationRequest& request, std::string_view kind,
                     double rate) const;
    std::string reply_concepts(const GenerationRequest& request) const;
    std::string reply_foil(const GenerationRequest& request) const;
    std::string reply_recombine(const GenerationRequest& request) const;
    std::string reply_summary(const GenerationRequest& request) const;
    std::string reply_pairs(const GenerationRequest& request) const;
    std::string reply_triplets(const GenerationRequest& request) const;
    std::string reply_fill(const GenerationRequest& request) const;
};

// Swaps the first and last alphanumeric tokens; appends " again" when the
// text is too short to swap. Used by the mock for swap-style negatives.
std::string swap_edge_tokens(const std::string& text);

// Replaces the first case-insensitive occurrence of `word` with `candidate`,
// matching the original token's capitalization. Returns the input unchanged
// when the word does not occur.
std::string substitute_word(const std::string& text, const std::string& word,
                            const std::string& candidate);

}  // namespace neggen

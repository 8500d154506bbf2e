#pragma once

#include <string>
#include <vector>

#include "neggen/negtext.hpp"

namespace neggen::prompts {

// Anchor fragments used by the mock backend to recognize which template a
// prompt was rendered from. Conformance tests assert the rendered prompts
// contain them verbatim.
inline constexpr std::string_view kExtractAnchor =
    "Find objects, attributes of objects, and relationships";
inline constexpr std::string_view kFoilAnchor =
    "replace each of phrases with other words";
inline constexpr std::string_view kRecombineAnchor =
    "keep at least one phrase intact";
inline constexpr std::string_view kSummaryAnchor =
    "Summarize the features of those pairs";
inline constexpr std::string_view kPairGenAnchor =
    "pairs of input and hard negative";
inline constexpr std::string_view kTripletGenAnchor = "such examples";
inline constexpr std::string_view kFillAnchor = "by replacing [Mask] in";

std::string extract_concepts(const std::string& text);

std::string foil(const std::string& text, const std::vector<std::string>& phrases,
                 int negatives_per_phrase);

std::string recombine(const std::string& text,
                      const std::vector<std::string>& phrases, int count);

std::string summarize_pairs(const std::vector<NegativePair>& pairs);

// Completion-style prompt: summary, instruction to generate `count` pairs,
// then the exemplars numbered 1..k with the bare "k+1. Input:" line at the
// end for the backend to continue.
std::string pair_completion(const std::string& summary,
                            const std::vector<NegativePair>& exemplars, int count);

// Variant that pins the next input to a given caption; the completion starts
// right after "k+1. Negative:".
std::string pair_completion_for(const std::string& summary,
                                const std::vector<NegativePair>& exemplars,
                                const std::string& next_input, int count);

std::string summarize_triplets(const std::vector<TripletSample>& triplets);

std::string triplet_completion(const std::string& summary,
                               const std::vector<TripletSample>& exemplars,
                               int count);

std::string fill_mask(const std::string& masked, const std::string& positive);

}  // namespace neggen::prompts

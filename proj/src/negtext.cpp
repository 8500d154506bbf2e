#include "neggen/negtext.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "neggen/errors.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/prompts.hpp"
#include "neggen/rng.hpp"
#include "neggen/strutil.hpp"

namespace neggen {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::rule_foil: return "rule_foil";
        case Strategy::llm_foil: return "llm_foil";
        case Strategy::recombination: return "recombination";
        case Strategy::incontext_summary: return "incontext_summary";
        case Strategy::mask_fill: return "mask_fill";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
    for (Strategy s : {Strategy::rule_foil, Strategy::llm_foil, Strategy::recombination,
                       Strategy::incontext_summary, Strategy::mask_fill}) {
        if (to_string(s) == name) return s;
    }
    throw UsageError("unknown strategy '" + std::string(name) +
                     "' (valid: rule_foil, llm_foil, recombination, "
                     "incontext_summary, mask_fill)");
}

std::vector<Strategy> text_strategies() {
    return {Strategy::rule_foil, Strategy::llm_foil, Strategy::recombination,
            Strategy::incontext_summary};
}

std::vector<std::string> ConceptSet::ordered_phrases() const {
    std::vector<std::string> out;
    for (const auto* list : {&objects, &attributes, &relationships}) {
        for (const auto& c : *list) out.push_back(c.text);
    }
    return out;
}

std::vector<std::string> ConceptSet::object_phrases() const {
    std::vector<std::string> out;
    for (const auto& c : objects) out.push_back(c.text);
    return out;
}

const std::vector<std::string>* SubstitutionTable::find(std::string_view word) const {
    auto it = entries.find(std::string(word));
    return it == entries.end() ? nullptr : &it->second;
}

SubstitutionTable SubstitutionTable::load(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("substitution table must be a JSON object: " + path.string());
    }
    SubstitutionTable table;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::vector<std::string> cands;
        for (const auto& c : it.value()) cands.push_back(c.get<std::string>());
        table.entries[to_lower(it.key())] = std::move(cands);
    }
    return table;
}

void GenStats::merge(const GenStats& o) {
    candidates += o.candidates;
    emitted += o.emitted;
    dropped_equal += o.dropped_equal;
    malformed += o.malformed;
    retries += o.retries;
    backend_failures += o.backend_failures;
    skipped += o.skipped;
}

nlohmann::json GenStats::to_json() const {
    return {{"candidates", candidates},   {"emitted", emitted},
            {"dropped_equal", dropped_equal}, {"malformed", malformed},
            {"retries", retries},         {"backend_failures", backend_failures},
            {"skipped", skipped}};
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool in_space = true;  // trims leading whitespace
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            out.push_back(static_cast<char>(c));
            in_space = false;
        }
    }
    return out;
}

nlohmann::json parse_json_reply(const std::string& reply) {
    auto attempt = [](const std::string& text) {
        return nlohmann::json::parse(text, nullptr, false);
    };
    nlohmann::json j = attempt(reply);
    if (!j.is_discarded()) return j;

    // repair pass: drop code fences, trim to outermost braces, remove
    // trailing commas
    std::string s = reply;
    size_t fence = s.find("```");
    while (fence != std::string::npos) {
        size_t eol = s.find('\n', fence);
        s.erase(fence, eol == std::string::npos ? s.size() - fence : eol - fence + 1);
        fence = s.find("```");
    }
    size_t open = s.find('{');
    size_t close = s.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        return nlohmann::json(nlohmann::json::value_t::discarded);
    }
    s = s.substr(open, close - open + 1);
    std::string cleaned;
    cleaned.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == ',') {
            size_t k = i + 1;
            while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
            if (k < s.size() && (s[k] == '}' || s[k] == ']')) continue;
        }
        cleaned.push_back(s[i]);
    }
    return attempt(cleaned);
}

namespace {

// Retries a backend call whose reply must parse as JSON. Returns discarded
// JSON when every attempt failed.
nlohmann::json generate_json(TextBackend& backend, const std::string& prompt,
                             const GenOptions& options, std::string_view tag,
                             std::string_view key, GenStats& stats) {
    for (int attempt = 0; attempt <= options.retry_limit; ++attempt) {
        if (attempt > 0) ++stats.retries;
        GenerationRequest req{prompt, options.max_tokens, options.temperature,
                              derive_seed(options.seed, tag, key,
                                          static_cast<uint64_t>(attempt))};
        GenerationResponse resp = backend.generate(req);
        nlohmann::json j = parse_json_reply(resp.text);
        if (!j.is_discarded()) return j;
    }
    return nlohmann::json(nlohmann::json::value_t::discarded);
}

bool occurs_ci(const std::string& caption, const std::string& phrase) {
    return find_ci(caption, phrase) != std::string_view::npos;
}

std::vector<ConceptPhrase> read_phrase_list(const nlohmann::json& j,
                                            const char* field,
                                            const std::string& caption) {
    std::vector<ConceptPhrase> out;
    if (!j.contains(field) || !j.at(field).is_array()) return out;
    for (const auto& item : j.at(field)) {
        if (!item.is_string()) continue;
        std::string text = item.get<std::string>();
        if (text.empty()) continue;
        out.push_back({text, !occurs_ci(caption, text)});
    }
    return out;
}

// First word-boundary, case-insensitive occurrence of the phrase.
size_t find_phrase(const std::string& text, const std::string& phrase) {
    size_t pos = find_ci(text, phrase);
    while (pos != std::string::npos) {
        bool left_ok =
            pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
        size_t end = pos + phrase.size();
        bool right_ok = end >= text.size() ||
                        !std::isalnum(static_cast<unsigned char>(text[end]));
        if (left_ok && right_ok) return pos;
        pos = find_ci(text, phrase, pos + 1);
    }
    return std::string::npos;
}

}  // namespace

ConceptSet extract_concepts(const std::string& caption, TextBackend& backend,
                            const GenOptions& options, GenStats& stats) {
    if (caption.empty()) throw ValidationError("caption is empty");
    nlohmann::json reply;
    try {
        reply = generate_json(backend, prompts::extract_concepts(caption), options,
                              "extract", caption, stats);
    } catch (const BackendError&) {
        ++stats.backend_failures;
        return {};
    }
    if (reply.is_discarded()) {
        ++stats.skipped;
        return {};
    }
    ConceptSet set;
    set.objects = read_phrase_list(reply, "objects", caption);
    set.attributes = read_phrase_list(reply, "attributes", caption);
    set.relationships = read_phrase_list(reply, "relationships", caption);
    return set;
}

namespace {

const std::vector<std::string>& stopwords() {
    static const std::vector<std::string> kStop = {
        "a",  "an", "the", "is",  "are", "was", "were", "and", "or",  "of",
        "to", "in", "on",  "at",  "by",  "for", "with", "his", "her", "its",
        "their", "this", "that", "who", "which", "while", "as", "be"};
    return kStop;
}

}  // namespace

ConceptSet extract_concepts_rule(const std::string& caption) {
    ConceptSet set;
    const auto& stop = stopwords();
    std::vector<std::string> seen;
    for (const auto& tok : alnum_tokens(caption)) {
        std::string folded = to_lower(tok.text);
        if (std::find(stop.begin(), stop.end(), folded) != stop.end()) continue;
        if (std::find(seen.begin(), seen.end(), folded) != seen.end()) continue;
        seen.push_back(folded);
        set.objects.push_back({tok.text, false});
    }
    return set;
}

std::vector<NegativePair> rule_foil(const std::string& caption,
                                    const std::string& sample_id,
                                    const ConceptSet& concepts,
                                    const SubstitutionTable& table, uint64_t seed,
                                    GenStats& stats) {
    std::vector<NegativePair> out;
    for (const std::string& phrase : concepts.ordered_phrases()) {
        const auto* cands = table.find(to_lower(phrase));
        if (!cands || cands->empty()) continue;  // no candidate, concept skipped
        size_t pos = find_phrase(caption, phrase);
        if (pos == std::string::npos) continue;
        ++stats.candidates;
        Rng rng(derive_seed(seed, "rule_foil", phrase));
        const std::string& cand = (*cands)[rng.below(cands->size())];
        std::string repl =
            starts_with_upper(std::string_view(caption).substr(pos, phrase.size()))
                ? capitalize(cand)
                : cand;
        std::string negative = caption;
        negative.replace(pos, phrase.size(), repl);
        if (normalize_whitespace(negative) == normalize_whitespace(caption)) {
            ++stats.dropped_equal;
            continue;
        }
        out.push_back({caption, negative, Strategy::rule_foil, phrase, sample_id});
        ++stats.emitted;
    }
    return out;
}

std::vector<NegativePair> llm_foil(const std::string& caption,
                                   const std::string& sample_id,
                                   const ConceptSet& concepts, TextBackend& backend,
                                   const GenOptions& options, GenStats& stats) {
    std::vector<std::string> phrases = concepts.ordered_phrases();
    if (phrases.empty()) throw ValidationError("llm_foil requires extracted concepts");
    std::vector<NegativePair> out;
    nlohmann::json reply;
    try {
        reply = generate_json(backend,
                              prompts::foil(caption, phrases, options.per_concept_count),
                              options, "foil", sample_id + "|" + caption, stats);
    } catch (const BackendError&) {
        stats.backend_failures += static_cast<int>(phrases.size());
        return out;
    }
    if (reply.is_discarded() || !reply.contains("results") ||
        !reply.at("results").is_array()) {
        stats.malformed += static_cast<int>(phrases.size());
        return out;
    }
    for (const auto& item : reply.at("results")) {
        if (!item.contains("phrase") || !item.contains("negative_texts") ||
            !item.at("negative_texts").is_array()) {
            ++stats.malformed;
            continue;
        }
        std::string phrase = item.at("phrase").get<std::string>();
        for (const auto& neg : item.at("negative_texts")) {
            if (!neg.is_string()) {
                ++stats.malformed;
                continue;
            }
            std::string negative = neg.get<std::string>();
            ++stats.candidates;
            if (normalize_whitespace(negative) == normalize_whitespace(caption)) {
                ++stats.dropped_equal;
                continue;
            }
            out.push_back({caption, negative, Strategy::llm_foil, phrase, sample_id});
            ++stats.emitted;
        }
    }
    return out;
}

std::vector<NegativePair> recombine(const std::string& caption,
                                    const std::string& sample_id,
                                    const std::vector<std::string>& objects,
                                    TextBackend& backend, int count,
                                    const GenOptions& options, GenStats& stats) {
    std::vector<NegativePair> out;
    nlohmann::json reply;
    try {
        reply = generate_json(backend, prompts::recombine(caption, objects, count),
                              options, "recombine", sample_id + "|" + caption, stats);
    } catch (const BackendError&) {
        ++stats.backend_failures;
        return out;
    }
    if (reply.is_discarded() || !reply.contains("generated") ||
        !reply.at("generated").is_array()) {
        ++stats.malformed;
        return out;
    }
    for (const auto& item : reply.at("generated")) {
        if (static_cast<int>(out.size()) >= count) break;
        if (!item.is_string()) {
            ++stats.malformed;
            continue;
        }
        std::string negative = item.get<std::string>();
        ++stats.candidates;
        if (normalize_whitespace(negative) == normalize_whitespace(caption)) {
            ++stats.dropped_equal;
            continue;
        }
        out.push_back({caption, negative, Strategy::recombination, std::nullopt,
                       sample_id});
        ++stats.emitted;
    }
    return out;
}

SummaryContext summarize_pairs(const std::vector<NegativePair>& seed_pairs,
                               TextBackend& backend, const GenOptions& options) {
    if (seed_pairs.empty()) {
        throw ValidationError("summarize_pairs requires at least one seed pair");
    }
    GenerationRequest req{prompts::summarize_pairs(seed_pairs), options.max_tokens,
                          options.temperature, derive_seed(options.seed, "summary")};
    GenerationResponse resp = backend.generate(req);
    if (resp.text.empty()) throw BackendError("empty summary reply");
    return {resp.text, seed_pairs};
}

namespace {

std::vector<NegativePair> pick_exemplars(const std::vector<NegativePair>& pool,
                                         int k, uint64_t seed) {
    Rng rng(seed);
    size_t want = std::min<size_t>(static_cast<size_t>(k), pool.size());
    std::vector<NegativePair> out;
    for (size_t idx : rng.sample_indices(pool.size(), want)) out.push_back(pool[idx]);
    return out;
}

}  // namespace

std::vector<NegativePair> generate_from_summary(const SummaryContext& context,
                                                int k, TextBackend& backend,
                                                int count, const GenOptions& options,
                                                GenStats& stats) {
    if (k < 1) throw ValidationError("in-context k must be >= 1");
    if (context.summary.empty() || context.exemplars.empty()) {
        throw ValidationError("summary context is empty");
    }
    auto exemplars = pick_exemplars(context.exemplars, k,
                                    derive_seed(options.seed, "exemplars"));
    GenerationRequest req{prompts::pair_completion(context.summary, exemplars, count),
                          options.max_tokens, options.temperature,
                          derive_seed(options.seed, "pairgen")};
    GenerationResponse resp = backend.generate(req);
    ParsedPairItems parsed = parse_pair_completion(
        resp.text, static_cast<int>(exemplars.size()) + 1, count);
    stats.malformed += parsed.skipped;
    std::vector<NegativePair> out;
    for (auto& [pos, neg] : parsed.pairs) {
        ++stats.candidates;
        if (normalize_whitespace(neg) == normalize_whitespace(pos) || pos.empty()) {
            ++stats.dropped_equal;
            continue;
        }
        out.push_back({pos, neg, Strategy::incontext_summary, std::nullopt, ""});
        ++stats.emitted;
    }
    return out;
}

std::vector<NegativePair> incontext_negatives(const std::string& caption,
                                              const std::string& sample_id,
                                              const SummaryContext& context, int k,
                                              TextBackend& backend, int count,
                                              const GenOptions& options,
                                              GenStats& stats) {
    if (k < 1) throw ValidationError("in-context k must be >= 1");
    std::vector<NegativePair> out;
    for (int j = 0; j < count; ++j) {
        auto exemplars = pick_exemplars(
            context.exemplars, k,
            derive_seed(options.seed, "ictx-ex", sample_id, static_cast<uint64_t>(j)));
        GenerationRequest req{
            prompts::pair_completion_for(context.summary, exemplars, caption, count),
            options.max_tokens, options.temperature,
            derive_seed(options.seed, "ictx", sample_id + "|" + caption,
                        static_cast<uint64_t>(j))};
        GenerationResponse resp;
        try {
            resp = backend.generate(req);
        } catch (const BackendError&) {
            ++stats.backend_failures;
            continue;
        }
        std::string negative = normalize_whitespace(resp.text);
        // the completion may run past the first line; keep only it
        size_t nl = resp.text.find('\n');
        if (nl != std::string::npos) {
            negative = normalize_whitespace(resp.text.substr(0, nl));
        }
        ++stats.candidates;
        if (negative.empty()) {
            ++stats.malformed;
            continue;
        }
        if (negative == normalize_whitespace(caption)) {
            ++stats.dropped_equal;
            continue;
        }
        out.push_back({caption, negative, Strategy::incontext_summary, std::nullopt,
                       sample_id});
        ++stats.emitted;
    }
    return out;
}

std::pair<std::string, PhraseSpan> mask_phrase(const GroundingSample& sample,
                                               size_t region_index) {
    if (region_index >= sample.regions.size()) {
        throw ValidationError("sample '" + sample.id + "': region index " +
                              std::to_string(region_index) + " out of range");
    }
    const PhraseSpan span = sample.regions[region_index].span;
    std::string masked = sample.caption.substr(0, span.start);
    masked += kMaskToken;
    masked += sample.caption.substr(span.end);
    return {masked, PhraseSpan{span.start,
                               span.start + static_cast<int>(kMaskToken.size())}};
}

std::optional<TripletSample> fill_mask(const std::string& positive,
                                       const std::string& masked,
                                       TextBackend& backend,
                                       const GenOptions& options, GenStats& stats) {
    size_t mpos = masked.find(kMaskToken);
    if (mpos == std::string::npos ||
        masked.find(kMaskToken, mpos + 1) != std::string::npos) {
        throw ValidationError("masked text must contain exactly one " +
                              std::string(kMaskToken));
    }
    const std::string prefix = masked.substr(0, mpos);
    const std::string suffix = masked.substr(mpos + kMaskToken.size());
    if (positive.size() < prefix.size() + suffix.size() ||
        positive.compare(0, prefix.size(), prefix) != 0 ||
        positive.compare(positive.size() - suffix.size(), suffix.size(), suffix) != 0) {
        throw ValidationError("masked text does not align with the positive text");
    }
    const std::string original_fill =
        positive.substr(prefix.size(), positive.size() - prefix.size() - suffix.size());

    for (int attempt = 0; attempt <= options.retry_limit; ++attempt) {
        if (attempt > 0) ++stats.retries;
        GenerationRequest req{prompts::fill_mask(masked, positive), options.max_tokens,
                              options.temperature,
                              derive_seed(options.seed, "fill", masked,
                                          static_cast<uint64_t>(attempt))};
        GenerationResponse resp;
        try {
            resp = backend.generate(req);
        } catch (const BackendError&) {
            ++stats.backend_failures;
            continue;
        }
        const std::string& reply = resp.text;
        ++stats.candidates;
        bool structural =
            reply.size() >= prefix.size() + suffix.size() &&
            reply.compare(0, prefix.size(), prefix) == 0 &&
            reply.compare(reply.size() - suffix.size(), suffix.size(), suffix) == 0;
        if (!structural) {
            ++stats.malformed;
            continue;
        }
        std::string fill =
            reply.substr(prefix.size(), reply.size() - prefix.size() - suffix.size());
        if (normalize_whitespace(fill) == normalize_whitespace(original_fill) ||
            normalize_whitespace(fill).empty()) {
            ++stats.dropped_equal;
            continue;
        }
        ++stats.emitted;
        return TripletSample{positive, masked, reply, -1, ""};
    }
    ++stats.skipped;
    return std::nullopt;
}

std::vector<TripletSample> bootstrap_generate(
    const std::vector<TripletSample>& exemplars, int count, int k,
    TextBackend& backend, const GenOptions& options, GenStats& stats) {
    if (exemplars.empty()) {
        throw ValidationError("bootstrap requires at least one exemplar triplet");
    }
    GenerationRequest sreq{prompts::summarize_triplets(exemplars), options.max_tokens,
                           options.temperature,
                           derive_seed(options.seed, "triplet-summary")};
    GenerationResponse summary = backend.generate(sreq);
    if (summary.text.empty()) throw BackendError("empty triplet summary reply");

    std::vector<TripletSample> out;
    int batch_index = 0;
    while (static_cast<int>(out.size()) < count && batch_index < count + 8) {
        size_t want = std::min<size_t>(static_cast<size_t>(k), exemplars.size());
        Rng rng(derive_seed(options.seed, "triplet-ex", "",
                            static_cast<uint64_t>(batch_index)));
        std::vector<TripletSample> chosen;
        for (size_t idx : rng.sample_indices(exemplars.size(), want)) {
            chosen.push_back(exemplars[idx]);
        }
        int remaining = count - static_cast<int>(out.size());
        GenerationRequest req{
            prompts::triplet_completion(summary.text, chosen, remaining),
            options.max_tokens, options.temperature,
            derive_seed(options.seed, "triplet-gen", "",
                        static_cast<uint64_t>(batch_index))};
        GenerationResponse resp = backend.generate(req);
        ParsedTripletItems parsed = parse_triplet_completion(
            resp.text, static_cast<int>(chosen.size()) + 1, remaining);
        stats.malformed += parsed.skipped;
        bool progressed = false;
        for (auto& t : parsed.triplets) {
            ++stats.candidates;
            size_t mpos = t.masked.find(kMaskToken);
            bool one_mask = mpos != std::string::npos &&
                            t.masked.find(kMaskToken, mpos + 1) == std::string::npos;
            if (!one_mask) {
                ++stats.malformed;
                continue;
            }
            if (normalize_whitespace(t.negative) == normalize_whitespace(t.positive)) {
                ++stats.dropped_equal;
                continue;
            }
            out.push_back(std::move(t));
            ++stats.emitted;
            progressed = true;
            if (static_cast<int>(out.size()) >= count) break;
        }
        ++batch_index;
        if (!progressed && parsed.triplets.empty()) break;
    }
    return out;
}

ParsedPairItems parse_pair_completion(const std::string& completion,
                                      int first_index, int count) {
    ParsedPairItems result;
    std::string full = std::to_string(first_index) + ". Input:" + completion;
    std::istringstream in(full);
    std::string line;
    std::optional<std::string> open_input;
    auto close_open_as_skip = [&]() {
        if (open_input) {
            ++result.skipped;
            open_input.reset();
        }
    };
    while (std::getline(in, line)) {
        if (static_cast<int>(result.pairs.size()) >= count) return result;
        while (!line.empty() && (line.back() == '\r')) line.pop_back();
        size_t dot = line.find(". ");
        if (dot == std::string::npos || dot == 0 ||
            line.find_first_not_of("0123456789") != dot) {
            continue;  // separators and prose between items
        }
        std::string rest = line.substr(dot + 2);
        if (rest.rfind("Input:", 0) == 0) {
            close_open_as_skip();
            std::string text = rest.substr(6);
            if (!text.empty() && text.front() == ' ') text.erase(0, 1);
            open_input = text;
        } else if (rest.rfind("Negative:", 0) == 0) {
            std::string text = rest.substr(9);
            if (!text.empty() && text.front() == ' ') text.erase(0, 1);
            if (open_input && !open_input->empty() && !text.empty()) {
                result.pairs.emplace_back(*open_input, text);
            } else {
                ++result.skipped;
            }
            open_input.reset();
        }
    }
    close_open_as_skip();
    return result;
}

ParsedTripletItems parse_triplet_completion(const std::string& completion,
                                            int first_index, int count) {
    ParsedTripletItems result;
    std::string full = std::to_string(first_index) + ". Input:" + completion;
    std::istringstream in(full);
    std::string line;
    std::optional<std::string> open_input;
    std::optional<std::string> open_masked;
    auto close_open_as_skip = [&]() {
        if (open_input || open_masked) ++result.skipped;
        open_input.reset();
        open_masked.reset();
    };
    while (std::getline(in, line)) {
        if (static_cast<int>(result.triplets.size()) >= count) return result;
        while (!line.empty() && line.back() == '\r') line.pop_back();
        size_t dot = line.find(". ");
        if (dot == std::string::npos || dot == 0 ||
            line.find_first_not_of("0123456789") != dot) {
            continue;
        }
        std::string rest = line.substr(dot + 2);
        auto take = [&](size_t label_len) {
            std::string text = rest.substr(label_len);
            if (!text.empty() && text.front() == ' ') text.erase(0, 1);
            return text;
        };
        if (rest.rfind("Input:", 0) == 0) {
            close_open_as_skip();
            open_input = take(6);
        } else if (rest.rfind("Masked input:", 0) == 0) {
            open_masked = take(13);
        } else if (rest.rfind("Output:", 0) == 0) {
            std::string neg = take(7);
            if (open_input && open_masked && !open_input->empty() &&
                !open_masked->empty() && !neg.empty()) {
                result.triplets.push_back(
                    TripletSample{*open_input, *open_masked, neg, -1, ""});
            } else {
                ++result.skipped;
            }
            open_input.reset();
            open_masked.reset();
        }
    }
    close_open_as_skip();
    return result;
}

nlohmann::json pair_to_json(const NegativePair& p) {
    return {{"sample_id", p.sample_id},
            {"positive", p.positive},
            {"negative", p.negative},
            {"strategy", std::string(to_string(p.strategy))},
            {"changed_concept",
             p.changed_concept ? nlohmann::json(*p.changed_concept)
                               : nlohmann::json(nullptr)}};
}

NegativePair pair_from_json(const nlohmann::json& j) {
    NegativePair p;
    p.sample_id = j.at("sample_id").get<std::string>();
    p.positive = j.at("positive").get<std::string>();
    p.negative = j.at("negative").get<std::string>();
    p.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    if (j.contains("changed_concept") && !j.at("changed_concept").is_null()) {
        p.changed_concept = j.at("changed_concept").get<std::string>();
    }
    return p;
}

nlohmann::json triplet_to_json(const TripletSample& t) {
    return {{"positive", t.positive},
            {"masked", t.masked},
            {"negative", t.negative},
            {"region", t.region_index},
            {"sample_id", t.sample_id}};
}

TripletSample triplet_from_json(const nlohmann::json& j) {
    TripletSample t;
    t.positive = j.at("positive").get<std::string>();
    t.masked = j.at("masked").get<std::string>();
    t.negative = j.at("negative").get<std::string>();
    t.region_index = j.at("region").get<int>();
    t.sample_id = j.at("sample_id").get<std::string>();
    return t;
}

}  // namespace neggen

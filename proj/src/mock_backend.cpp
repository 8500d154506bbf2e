#include "neggen/mock_backend.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "neggen/dataset.hpp"
#include "neggen/prompts.hpp"
#include "neggen/rng.hpp"
#include "neggen/strutil.hpp"

namespace neggen {

namespace {

const std::vector<std::string> kFallbackWords = {"umbrella", "lantern", "marble",
                                                 "violin", "kettle"};

std::string slice_between(const std::string& text, std::string_view from,
                          std::string_view to) {
    size_t a = text.find(from);
    if (a == std::string::npos) return {};
    a += from.size();
    size_t b = to.empty() ? std::string::npos : text.find(to, a);
    if (b == std::string::npos) return text.substr(a);
    return text.substr(a, b - a);
}

int int_after(const std::string& text, std::string_view marker, int fallback) {
    size_t a = text.find(marker);
    if (a == std::string::npos) return fallback;
    a += marker.size();
    int value = 0;
    bool any = false;
    while (a < text.size() && std::isdigit(static_cast<unsigned char>(text[a]))) {
        value = value * 10 + (text[a] - '0');
        ++a;
        any = true;
    }
    return any ? value : fallback;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i <= text.size()) {
        size_t j = text.find(", ", i);
        std::string item =
            j == std::string::npos ? text.substr(i) : text.substr(i, j - i);
        while (!item.empty() && (item.back() == '\n' || item.back() == '\r'))
            item.pop_back();
        if (!item.empty()) out.push_back(item);
        if (j == std::string::npos) break;
        i = j + 2;
    }
    return out;
}

// Exemplar lines of the form "<n>. <label>: <text>".
std::vector<std::string> labeled_lines(const std::string& text,
                                       std::string_view label) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    std::string want = std::string(". ") + std::string(label) + ": ";
    while (std::getline(in, line)) {
        size_t p = line.find(want);
        if (p == std::string::npos) continue;
        // require digits right before ". <label>: "
        if (p == 0 || !std::isdigit(static_cast<unsigned char>(line[p - 1]))) continue;
        out.push_back(line.substr(p + want.size()));
    }
    return out;
}

std::vector<std::string> plain_labeled_lines(const std::string& text,
                                             std::string_view label) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    std::string want = std::string(label) + ": ";
    while (std::getline(in, line)) {
        if (line.rfind(want, 0) == 0) out.push_back(line.substr(want.size()));
    }
    return out;
}

}  // namespace

std::string swap_edge_tokens(const std::string& text) {
    auto toks = alnum_tokens(text);
    if (toks.size() >= 2) {
        size_t last = toks.size() - 1;
        // find a pair with different text so the swap actually changes it
        size_t first = 0;
        while (first < last && to_lower(toks[first].text) == to_lower(toks[last].text))
            ++first;
        if (first < last) {
            const auto& a = toks[first];
            const auto& b = toks[last];
            std::string out;
            out.append(text, 0, a.start);
            out.append(b.text);
            out.append(text, a.end, b.start - a.end);
            out.append(a.text);
            out.append(text, b.end, text.size() - b.end);
            return out;
        }
    }
    return text + " again";
}

std::string substitute_word(const std::string& text, const std::string& word,
                            const std::string& candidate) {
    size_t pos = find_ci(text, word);
    while (pos != std::string::npos) {
        bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
        size_t end = pos + word.size();
        bool right_ok =
            end >= text.size() || !std::isalnum(static_cast<unsigned char>(text[end]));
        if (left_ok && right_ok) break;
        pos = find_ci(text, word, pos + 1);
    }
    if (pos == std::string::npos) return text;
    std::string repl = starts_with_upper(std::string_view(text).substr(pos, word.size()))
                           ? capitalize(candidate)
                           : candidate;
    std::string out = text;
    out.replace(pos, word.size(), repl);
    return out;
}

MockTextBackend::MockTextBackend(MockBackendOptions options)
    : opt_(std::move(options)) {}

bool MockTextBackend::fault_fires(const GenerationRequest& request,
                                  std::string_view kind, double rate) const {
    if (rate <= 0.0) return false;
    uint64_t h = derive_seed(opt_.fault_salt ^ request.seed, kind, request.prompt);
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return u < rate;
}

GenerationResponse MockTextBackend::generate(const GenerationRequest& request) {
    const std::string& p = request.prompt;
    std::string text;
    bool json_reply = p.find(prompts::kExtractAnchor) != std::string::npos ||
                      p.find(prompts::kFoilAnchor) != std::string::npos ||
                      p.find(prompts::kRecombineAnchor) != std::string::npos;
    if (json_reply && fault_fires(request, "nonjson", opt_.fault_nonjson_rate)) {
        return {"I'm sorry, I cannot produce structured output right now.", id()};
    }
    if (p.find(prompts::kExtractAnchor) != std::string::npos) {
        text = reply_concepts(request);
    } else if (p.find(prompts::kFoilAnchor) != std::string::npos) {
        text = reply_foil(request);
    } else if (p.find(prompts::kRecombineAnchor) != std::string::npos) {
        text = reply_recombine(request);
    } else if (p.find(prompts::kSummaryAnchor) != std::string::npos ||
               p.find("Summarize the features of those examples") != std::string::npos) {
        text = reply_summary(request);
    } else if (p.find(prompts::kPairGenAnchor) != std::string::npos) {
        text = reply_pairs(request);
    } else if (p.find(prompts::kTripletGenAnchor) != std::string::npos) {
        text = reply_triplets(request);
    } else if (p.find(prompts::kFillAnchor) != std::string::npos) {
        text = reply_fill(request);
    } else {
        text = "UNRECOGNIZED PROMPT";
    }
    return {text, id()};
}

namespace {

// First table hit among the phrase's tokens, as (matched token, candidate).
std::optional<std::pair<std::string, std::string>> candidate_in(
    const SubstitutionTable& table, const std::string& phrase, size_t rank) {
    for (const auto& tok : alnum_tokens(phrase)) {
        const auto* cands = table.find(to_lower(tok.text));
        if (cands && !cands->empty()) {
            return std::make_pair(tok.text, (*cands)[rank % cands->size()]);
        }
    }
    return std::nullopt;
}

}  // namespace

std::string MockTextBackend::reply_concepts(const GenerationRequest& request) const {
    std::string caption = slice_between(request.prompt, "Given text: ", "");
    nlohmann::json objects = nlohmann::json::array();
    nlohmann::json attributes = nlohmann::json::array();
    nlohmann::json relationships = nlohmann::json::array();
    std::set<std::string> seen;
    for (const auto& tok : alnum_tokens(caption)) {
        std::string folded = to_lower(tok.text);
        if (!seen.insert(folded).second) continue;
        if (opt_.table.find(folded)) {
            objects.push_back(tok.text);
        } else if (std::find(opt_.attribute_words.begin(), opt_.attribute_words.end(),
                             folded) != opt_.attribute_words.end()) {
            attributes.push_back(tok.text);
        } else if (std::find(opt_.relationship_words.begin(),
                             opt_.relationship_words.end(),
                             folded) != opt_.relationship_words.end()) {
            relationships.push_back(tok.text);
        }
    }
    nlohmann::json reply = {{"text", caption},
                            {"objects", objects},
                            {"attributes", attributes},
                            {"relationships", relationships}};
    return reply.dump();
}

std::string MockTextBackend::reply_foil(const GenerationRequest& request) const {
    std::string caption =
        slice_between(request.prompt, "The input text: ", "\nPhrase list: ");
    auto phrases = split_list(slice_between(request.prompt, "Phrase list: ", ""));
    int per_phrase = int_after(request.prompt, "generate at least ", 2);
    bool echo = fault_fires(request, "echo", opt_.fault_echo_rate);

    nlohmann::json results = nlohmann::json::array();
    for (size_t pi = 0; pi < phrases.size(); ++pi) {
        nlohmann::json negs = nlohmann::json::array();
        for (int j = 0; j < per_phrase; ++j) {
            if (echo && pi == 0 && j == 0) {
                negs.push_back(caption);
                continue;
            }
            std::string neg;
            auto hit = candidate_in(opt_.table, phrases[pi], static_cast<size_t>(j));
            if (hit) {
                neg = substitute_word(caption, hit->first, hit->second);
            } else {
                neg = substitute_word(
                    caption, phrases[pi],
                    kFallbackWords[(pi + static_cast<size_t>(j)) % kFallbackWords.size()]);
            }
            if (neg == caption) neg = caption + " indeed";
            negs.push_back(neg);
        }
        results.push_back({{"phrase", phrases[pi]}, {"negative_texts", negs}});
    }
    nlohmann::json reply = {{"positive_text", caption}, {"results", results}};
    return reply.dump();
}

std::string MockTextBackend::reply_recombine(const GenerationRequest& request) const {
    std::string caption =
        slice_between(request.prompt, "Main sentence: ", "\nText phrase list: ");
    auto phrases = split_list(slice_between(request.prompt, "Text phrase list: ", ""));
    int count = int_after(request.prompt, "You are asked to generate ", 10);
    bool echo = fault_fires(request, "echo", opt_.fault_echo_rate);

    nlohmann::json generated = nlohmann::json::array();
    for (int i = 0; i < count; ++i) {
        if (echo && i == 0) {
            generated.push_back(caption);
            continue;
        }
        std::string sentence;
        if (phrases.empty()) {
            sentence = "Something with a " +
                       kFallbackWords[static_cast<size_t>(i) % kFallbackWords.size()] +
                       " appears.";
        } else {
            const std::string& change = phrases[static_cast<size_t>(i) % phrases.size()];
            const std::string& keep =
                phrases[static_cast<size_t>(i + 1) % phrases.size()];
            auto hit = candidate_in(opt_.table, change, static_cast<size_t>(i));
            std::string cand =
                hit ? hit->second
                    : kFallbackWords[static_cast<size_t>(i) % kFallbackWords.size()];
            switch (i % 3) {
                case 0: sentence = "The " + cand + " is resting next to the " + keep + "."; break;
                case 1: sentence = "A " + cand + " stands near the " + keep + "."; break;
                default: sentence = "The " + keep + " is behind a " + cand + "."; break;
            }
        }
        generated.push_back(sentence);
    }
    nlohmann::json reply = {{"main", caption}, {"generated", generated}};
    return reply.dump();
}

std::string MockTextBackend::reply_summary(const GenerationRequest& request) const {
    std::set<std::string> tokens;
    size_t pair_count = 0;
    for (const char* label : {"Input text", "hard negative", "Masked input", "Output"}) {
        auto lines = plain_labeled_lines(request.prompt, label);
        if (std::string_view(label) == "Input text") pair_count = lines.size();
        for (const auto& line : lines) {
            for (auto& t : fold_tokens(line)) tokens.insert(t);
        }
    }
    std::ostringstream out;
    out << "The " << pair_count
        << " examples keep sentence structure while altering one element. "
           "Recurring vocabulary:";
    size_t shown = 0;
    for (const auto& t : tokens) {
        if (shown >= 30) break;
        out << (shown ? ", " : " ") << t;
        ++shown;
    }
    out << ".";
    return out.str();
}

std::string MockTextBackend::reply_pairs(const GenerationRequest& request) const {
    const std::string& p = request.prompt;
    auto inputs = labeled_lines(p, "Input");
    bool pinned = p.size() >= 11 && p.rfind(". Negative:") == p.size() - 11;
    bool echo = fault_fires(request, "echo", opt_.fault_echo_rate);

    if (pinned) {
        // the last numbered input is the caption awaiting its negative
        std::string caption = inputs.empty() ? "" : inputs.back();
        std::string neg;
        if (echo) {
            neg = caption;
        } else {
            switch (request.seed % 3) {
                case 0: neg = swap_edge_tokens(caption); break;
                case 1: {
                    auto hit = candidate_in(opt_.table, caption,
                                            static_cast<size_t>(request.seed / 3));
                    neg = hit ? substitute_word(caption, hit->first, hit->second)
                              : swap_edge_tokens(caption);
                    break;
                }
                default: neg = "It is not true that " + caption; break;
            }
        }
        return " " + neg;
    }

    // free generation: continue the numbered list
    auto exemplar_negs = labeled_lines(p, "Negative");
    size_t k = std::min(inputs.size(), exemplar_negs.size());
    int count = int_after(p, "Generate ", 20);
    int first = static_cast<int>(k) + 1;
    std::ostringstream out;
    for (int i = 0; i < count; ++i) {
        std::string base = k ? inputs[static_cast<size_t>(i) % k] : "a planter sits by a door";
        std::string input;
        auto hit = candidate_in(opt_.table, base, static_cast<size_t>(i));
        if (hit) {
            input = substitute_word(base, hit->first, hit->second);
        } else {
            input = base + (i % 2 ? " in the morning" : " at night");
        }
        std::string neg = (echo && i == 0) ? input : swap_edge_tokens(input);
        int n = first + i;
        if (i == 0) {
            out << " " << input << "\n" << n << ". Negative: " << neg << "\n";
        } else {
            out << "###\n" << n << ". Input: " << input << "\n" << n
                << ". Negative: " << neg << "\n";
        }
    }
    return out.str();
}

std::string MockTextBackend::reply_triplets(const GenerationRequest& request) const {
    const std::string& p = request.prompt;
    auto inputs = labeled_lines(p, "Input");
    auto maskeds = labeled_lines(p, "Masked input");
    auto outputs = labeled_lines(p, "Output");
    size_t k = std::min({inputs.size(), maskeds.size(), outputs.size()});
    int count = int_after(p, "Generate ", 20);
    int first = static_cast<int>(k) + 1;

    std::ostringstream out;
    for (int i = 0; i < count; ++i) {
        std::string pos = k ? inputs[static_cast<size_t>(i) % k] : "A crow sits on a wire.";
        std::string masked =
            k ? maskeds[static_cast<size_t>(i) % k] : "A crow sits on [Mask].";
        size_t mpos = masked.find(kMaskToken);
        std::string neg;
        if (mpos != std::string::npos) {
            std::string prefix = masked.substr(0, mpos);
            std::string suffix = masked.substr(mpos + kMaskToken.size());
            std::string fill = "thing";
            if (pos.size() >= prefix.size() + suffix.size() &&
                pos.compare(0, prefix.size(), prefix) == 0) {
                fill = pos.substr(prefix.size(), pos.size() - prefix.size() - suffix.size());
            }
            auto hit = candidate_in(opt_.table, fill, static_cast<size_t>(i));
            std::string new_fill =
                hit ? substitute_word(fill, hit->first, hit->second)
                    : kFallbackWords[static_cast<size_t>(i) % kFallbackWords.size()];
            if (new_fill == fill) new_fill = kFallbackWords[static_cast<size_t>(i + 1) % kFallbackWords.size()];
            neg = prefix + new_fill + suffix;
        } else {
            neg = swap_edge_tokens(pos);
        }
        int n = first + i;
        if (i == 0) {
            out << " " << pos << "\n" << n << ". Masked input: " << masked << "\n" << n
                << ". Output: " << neg << "\n";
        } else {
            out << "###\n" << n << ". Input: " << pos << "\n" << n
                << ". Masked input: " << masked << "\n" << n << ". Output: " << neg
                << "\n";
        }
    }
    return out.str();
}

std::string MockTextBackend::reply_fill(const GenerationRequest& request) const {
    const std::string& p = request.prompt;
    std::string masked =
        slice_between(p, "by replacing [Mask] in \"", "\". The generated sentence");
    std::string positive = slice_between(p, "should be different from \"", "\"");
    size_t mpos = masked.find(kMaskToken);
    if (mpos == std::string::npos) return "UNRECOGNIZED PROMPT";
    std::string prefix = masked.substr(0, mpos);
    std::string suffix = masked.substr(mpos + kMaskToken.size());

    if (fault_fires(request, "echo", opt_.fault_echo_rate)) return positive;

    std::string fill;
    if (positive.size() >= prefix.size() + suffix.size() &&
        positive.compare(0, prefix.size(), prefix) == 0 &&
        positive.compare(positive.size() - suffix.size(), suffix.size(), suffix) == 0) {
        fill = positive.substr(prefix.size(), positive.size() - prefix.size() - suffix.size());
    }
    size_t rank = static_cast<size_t>(request.seed % 7);
    auto hit = candidate_in(opt_.table, fill, rank);
    std::string new_fill;
    if (hit) {
        new_fill = substitute_word(fill, hit->first, hit->second);
    } else {
        new_fill = kFallbackWords[rank % kFallbackWords.size()];
        if (starts_with_upper(fill)) new_fill = capitalize(new_fill);
    }
    if (!fill.empty() && new_fill == fill) {
        new_fill = kFallbackWords[(rank + 1) % kFallbackWords.size()];
    }
    return prefix + new_fill + suffix;
}

}  // namespace neggen

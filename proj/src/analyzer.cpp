#include "neggen/analyzer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "neggen/errors.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/rng.hpp"
#include "neggen/strutil.hpp"

namespace neggen {

std::string_view to_string(PosGroup g) {
    switch (g) {
        case PosGroup::VERB: return "VERB";
        case PosGroup::NOUN: return "NOUN";
        case PosGroup::ADP_ADJ: return "ADP/ADJ";
        case PosGroup::OTHER: return "OTHER";
    }
    return "OTHER";
}

LexiconTagger LexiconTagger::load(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("POS lexicon must be a JSON object: " + path.string());
    }
    LexiconTagger tagger;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string group = it.value().get<std::string>();
        PosGroup g = PosGroup::OTHER;
        if (group == "VERB") g = PosGroup::VERB;
        else if (group == "NOUN") g = PosGroup::NOUN;
        else if (group == "ADP/ADJ" || group == "ADP_ADJ") g = PosGroup::ADP_ADJ;
        else if (group == "OTHER") g = PosGroup::OTHER;
        else throw ParseError("POS lexicon: unknown group '" + group + "'");
        tagger.lexicon_[to_lower(it.key())] = g;
    }
    return tagger;
}

PosGroup LexiconTagger::tag(const std::string& folded_token) const {
    auto it = lexicon_.find(folded_token);
    return it == lexicon_.end() ? PosGroup::OTHER : it->second;
}

void LexiconTagger::add(const std::string& folded_token, PosGroup group) {
    lexicon_[to_lower(folded_token)] = group;
}

Histogram word_count_histogram(const std::vector<NegativePair>& pairs) {
    if (pairs.empty()) throw ValidationError("no pairs for strategy");
    std::map<int, int> counts;
    for (const auto& p : pairs) {
        ++counts[static_cast<int>(whitespace_tokens(p.negative).size())];
    }
    Histogram out;
    for (const auto& [bucket, n] : counts) {
        out[bucket] = static_cast<double>(n) / static_cast<double>(pairs.size());
    }
    return out;
}

int changed_word_count(const std::string& positive, const std::string& negative) {
    std::map<std::string, int> pos_counts;
    for (auto& t : fold_tokens(positive)) ++pos_counts[t];
    int changed = 0;
    for (auto& t : fold_tokens(negative)) {
        auto it = pos_counts.find(t);
        if (it != pos_counts.end() && it->second > 0) {
            --it->second;
        } else {
            ++changed;
        }
    }
    return changed;
}

Histogram changed_word_histogram(const std::vector<NegativePair>& pairs) {
    if (pairs.empty()) throw ValidationError("no pairs for strategy");
    std::map<int, int> counts;
    for (const auto& p : pairs) ++counts[changed_word_count(p.positive, p.negative)];
    Histogram out;
    for (const auto& [bucket, n] : counts) {
        out[bucket] = static_cast<double>(n) / static_cast<double>(pairs.size());
    }
    return out;
}

double& ExtraWordRates::for_group(PosGroup g) {
    switch (g) {
        case PosGroup::VERB: return verb;
        case PosGroup::NOUN: return noun;
        case PosGroup::ADP_ADJ: return adp_adj;
        case PosGroup::OTHER: return other;
    }
    return other;
}

double ExtraWordRates::for_group(PosGroup g) const {
    return const_cast<ExtraWordRates*>(this)->for_group(g);
}

ExtraWordRates extra_unique_words_per_k(const std::vector<NegativePair>& pairs,
                                        const VocabularyIndex& vocab,
                                        const PosTagger& tagger, int per) {
    ExtraWordRates rates;
    if (pairs.empty()) return rates;
    std::set<std::string> seen;
    for (const auto& p : pairs) {
        for (auto& tok : fold_tokens(p.negative)) {
            if (vocab.contains(tok)) continue;
            if (!seen.insert(tok).second) continue;
            rates.for_group(tagger.tag(tok)) += 1.0;
        }
    }
    double scale = static_cast<double>(per) / static_cast<double>(pairs.size());
    rates.verb *= scale;
    rates.noun *= scale;
    rates.adp_adj *= scale;
    rates.other *= scale;
    return rates;
}

nlohmann::json DiversityReport::to_json() const {
    auto histogram_json = [](const Histogram& h) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [bucket, fraction] : h) {
            out[std::to_string(bucket)] = fraction;
        }
        return out;
    };
    return {{"strategy", strategy},
            {"length_histogram", histogram_json(lengths)},
            {"changed_word_histogram", histogram_json(changed)},
            {"extra_unique_words_per_1000",
             {{"VERB", extra.verb},
              {"NOUN", extra.noun},
              {"ADP/ADJ", extra.adp_adj},
              {"OTHER", extra.other}}},
            {"metrics",
             {{"length", "whitespace-token count of the negative text"},
              {"changed_words",
               "one-sided multiset difference: case-folded tokens of the negative "
               "not present in the positive"},
              {"extra_unique_words",
               "unique case-folded tokens absent from the dataset vocabulary, "
               "counted once, scaled per 1000 negatives"}}}};
}

DiversityReport analyze_strategy(const std::string& strategy,
                                 const std::vector<NegativePair>& pairs,
                                 const VocabularyIndex& vocab,
                                 const PosTagger& tagger) {
    if (pairs.empty()) throw ValidationError("no pairs for strategy " + strategy);
    DiversityReport report;
    report.strategy = strategy;
    report.lengths = word_count_histogram(pairs);
    report.changed = changed_word_histogram(pairs);
    report.extra = extra_unique_words_per_k(pairs, vocab, tagger);
    return report;
}

std::vector<RetentionRow> filter_retention_stats(
    const std::vector<FilterReport>& reports) {
    std::vector<RetentionRow> rows;
    for (const auto& r : reports) {
        RetentionRow row;
        row.stage = r.stage;
        row.total = r.input;
        auto it = r.status_counts.find("kept");
        row.kept = it == r.status_counts.end() ? 0 : it->second;
        row.fraction = r.input == 0 ? 0.0
                                    : static_cast<double>(row.kept) /
                                          static_cast<double>(r.input);
        rows.push_back(row);
    }
    return rows;
}

std::vector<RetentionRow> staged_retention(const FilterReport& report) {
    auto count = [&](const char* status) {
        auto it = report.status_counts.find(status);
        return it == report.status_counts.end() ? 0 : it->second;
    };
    int total = report.input;
    int after_box = total - count("dropped_box_filter") - count("backend_failed");
    int after_image = after_box - count("dropped_image_score");
    int after_region = after_image - count("dropped_region_score");
    std::vector<RetentionRow> rows;
    auto push = [&](const std::string& stage, int kept) {
        rows.push_back({stage, kept, total,
                        total == 0 ? 0.0
                                   : static_cast<double>(kept) /
                                         static_cast<double>(total)});
    };
    push("generated", total);
    push("box_filter", after_box);
    push("image_filter", after_image);
    push("region_filter", after_region);
    return rows;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    if (!path.parent_path().empty()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string format_fraction(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

}  // namespace

void write_lengths_csv(const std::filesystem::path& path,
                       const std::map<std::string, Histogram>& per_strategy) {
    auto out = open_csv(path);
    out << "strategy,word_count,fraction\n";
    for (const auto& [strategy, hist] : per_strategy) {
        for (const auto& [bucket, fraction] : hist) {
            out << strategy << ',' << bucket << ',' << format_fraction(fraction)
                << '\n';
        }
    }
}

void write_changed_csv(const std::filesystem::path& path,
                       const std::map<std::string, Histogram>& per_strategy) {
    auto out = open_csv(path);
    out << "strategy,changed_words,fraction\n";
    for (const auto& [strategy, hist] : per_strategy) {
        for (const auto& [bucket, fraction] : hist) {
            out << strategy << ',' << bucket << ',' << format_fraction(fraction)
                << '\n';
        }
    }
}

void write_extra_words_csv(const std::filesystem::path& path,
                           const std::map<std::string, ExtraWordRates>& per_strategy) {
    auto out = open_csv(path);
    out << "strategy,pos_group,extra_unique_words_per_1000\n";
    for (const auto& [strategy, rates] : per_strategy) {
        for (PosGroup g : {PosGroup::VERB, PosGroup::NOUN, PosGroup::ADP_ADJ,
                           PosGroup::OTHER}) {
            out << strategy << ',' << to_string(g) << ','
                << format_fraction(rates.for_group(g)) << '\n';
        }
    }
}

void write_retention_csv(const std::filesystem::path& path,
                         const std::vector<RetentionRow>& rows) {
    auto out = open_csv(path);
    out << "stage,kept,total,fraction\n";
    for (const auto& row : rows) {
        out << row.stage << ',' << row.kept << ',' << row.total << ','
            << format_fraction(row.fraction) << '\n';
    }
}

void write_review_bundle(const std::filesystem::path& dir,
                         const std::vector<GeneratedImageRecord>& records,
                         size_t sample_size, uint64_t seed) {
    std::filesystem::create_directories(dir);
    Rng rng(seed);
    size_t want = std::min(sample_size, records.size());
    std::vector<size_t> picked = rng.sample_indices(records.size(), want);
    std::sort(picked.begin(), picked.end());

    std::vector<nlohmann::json> rows;
    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
         << "<title>review bundle</title></head>\n<body>\n<h1>Generated-image "
            "review ("
         << want << " of " << records.size() << ")</h1>\n<table border=\"1\">\n"
         << "<tr><th>#</th><th>sample</th><th>status</th><th>original caption</th>"
         << "<th>edited caption</th><th>image</th><th>image score</th>"
         << "<th>region score</th></tr>\n";
    size_t row_no = 0;
    for (size_t idx : picked) {
        const auto& r = records[idx];
        rows.push_back(record_to_json(r));
        html << "<tr><td>" << ++row_no << "</td><td>" << r.sample_id << "</td><td>"
             << to_string(r.status) << "</td><td>" << r.original_caption
             << "</td><td>" << r.request.edited_caption << "</td><td>"
             << (r.output_image.empty() ? std::string("-") : r.output_image)
             << "</td><td>"
             << (r.image_level_score ? format_fraction(*r.image_level_score) : "-")
             << "</td><td>"
             << (r.region_level_score ? format_fraction(*r.region_level_score) : "-")
             << "</td></tr>\n";
    }
    html << "</table>\n</body></html>\n";
    write_jsonl(dir / "records.jsonl", rows);
    write_text_file(dir / "index.html", html.str());
}

}  // namespace neggen

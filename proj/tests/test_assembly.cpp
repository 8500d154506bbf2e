#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "neggen/assembly.hpp"
#include "neggen/dataset.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/rng.hpp"

using namespace neggen;

namespace {

const DefaultTokenizer kTokenizer;

GroundingSample tiny_sample() {
    GroundingSample s;
    s.id = "t1";
    s.caption = "a dog";
    s.image = {"t1.png", 100, 100};
    s.regions = {{{10, 10, 50, 50}, {2, 5}}};
    return s;
}

GeneratedImageRecord kept_record_for(const GroundingSample& s, int region,
                                     const std::string& edited_phrase) {
    GeneratedImageRecord r;
    r.sample_id = s.id;
    r.original_caption = s.caption;
    const PhraseSpan span = s.regions[static_cast<size_t>(region)].span;
    r.original_phrase = s.caption.substr(static_cast<size_t>(span.start),
                                         static_cast<size_t>(span.length()));
    r.region_indices = {region};
    r.request.source_image = s.image.path;
    r.request.width = s.image.width;
    r.request.height = s.image.height;
    r.request.target_box = s.regions[static_cast<size_t>(region)].box;
    r.request.edited_caption = s.caption.substr(0, static_cast<size_t>(span.start)) +
                               edited_phrase +
                               s.caption.substr(static_cast<size_t>(span.end));
    r.request.edited_phrase = edited_phrase;
    for (size_t k = 0; k < s.regions.size(); ++k) {
        const PhraseSpan sp = s.regions[k].span;
        std::string phrase =
            static_cast<int>(k) == region
                ? edited_phrase
                : s.caption.substr(static_cast<size_t>(sp.start),
                                   static_cast<size_t>(sp.length()));
        r.request.layout.push_back({s.regions[k].box, phrase});
    }
    r.edited_span = {span.start,
                     span.start + static_cast<int>(edited_phrase.size())};
    r.output_image = "images/generated/" + s.id + ".png";
    r.status = RecordStatus::kept;
    return r;
}

}  // namespace

TEST_CASE("sample_negatives draws distinct entries deterministically") {
    auto a = sample_negatives(5, 2, 77);
    auto b = sample_negatives(5, 2, 77);
    CHECK(a.indices == b.indices);
    CHECK(a.indices.size() == 2);
    CHECK(a.shortfall == 0);
    std::set<size_t> unique(a.indices.begin(), a.indices.end());
    CHECK(unique.size() == 2);

    auto short_pool = sample_negatives(1, 3, 5);
    CHECK(short_pool.indices.size() == 1);
    CHECK(short_pool.shortfall == 2);

    auto empty_pool = sample_negatives(0, 2, 5);
    CHECK(empty_pool.indices.empty());
    CHECK(empty_pool.shortfall == 2);

    CHECK_THROWS_AS(sample_negatives(5, 0, 1), ValidationError);
}

TEST_CASE("shuffle_and_concat remaps spans by segment offsets") {
    std::vector<SegmentInput> segments;
    segments.push_back({"positive", "a dog", {{{1, 1, 2, 2}, {2, 5}}}, 0});
    segments.push_back({"negative(rule_foil)", "a cat", {}, 0});

    // find a seed that puts the negative first to match the worked example
    uint64_t seed = 0;
    ConcatResult result;
    for (; seed < 64; ++seed) {
        result = shuffle_and_concat(segments, ". ", seed);
        if (result.order[0] == 1) break;
    }
    REQUIRE(result.order[0] == 1);
    CHECK(result.text == "a cat. a dog");
    REQUIRE(result.regions.size() == 1);
    CHECK(result.regions[0].span == PhraseSpan{9, 12});
    CHECK(result.text.substr(9, 3) == "dog");
}

TEST_CASE("single segment concatenation is the identity") {
    std::vector<SegmentInput> segments;
    segments.push_back({"positive", "a dog", {{{1, 1, 2, 2}, {2, 5}}}, 0});
    auto result = shuffle_and_concat(segments, ". ", 123);
    CHECK(result.text == "a dog");
    CHECK(result.regions[0].span == PhraseSpan{2, 5});
}

TEST_CASE("separators containing the mask token are rejected") {
    std::vector<SegmentInput> segments;
    segments.push_back({"positive", "a dog", {}, 0});
    CHECK_THROWS_AS(shuffle_and_concat(segments, " [Mask] ", 1), ValidationError);
}

TEST_CASE("span extraction survives 1000 randomized shuffles") {
    Rng rng(31337);
    const std::vector<std::string> words = {"red",  "dog",  "cat", "runs", "sits",
                                            "park", "ball", "tall", "boy", "girl"};
    int failures = 0;
    for (int t = 0; t < 1000; ++t) {
        int n_segments = 2 + static_cast<int>(rng.below(4));
        std::vector<SegmentInput> segments;
        std::vector<std::pair<size_t, std::string>> expected;  // (region idx, text)
        size_t region_count = 0;
        for (int s = 0; s < n_segments; ++s) {
            int n_words = 2 + static_cast<int>(rng.below(5));
            std::vector<std::pair<int, int>> word_spans;
            std::string text;
            for (int w = 0; w < n_words; ++w) {
                if (w) text += ' ';
                int start = static_cast<int>(text.size());
                text += words[rng.below(words.size())];
                word_spans.emplace_back(start, static_cast<int>(text.size()));
            }
            SegmentInput seg{"positive", text, {}, 0};
            if (s == 0) {
                int n_regions = 1 + static_cast<int>(rng.below(2));
                for (int r = 0; r < n_regions; ++r) {
                    size_t w0 = rng.below(word_spans.size());
                    size_t w1 = std::min(word_spans.size() - 1,
                                         w0 + rng.below(2));
                    PhraseSpan span{word_spans[w0].first, word_spans[w1].second};
                    seg.regions.push_back({{1, 1, 2, 2}, span});
                    expected.emplace_back(
                        region_count++,
                        text.substr(static_cast<size_t>(span.start),
                                    static_cast<size_t>(span.length())));
                }
            }
            segments.push_back(std::move(seg));
        }
        auto result = shuffle_and_concat(segments, ". ", rng.next());
        for (const auto& [idx, phrase] : expected) {
            const auto& span = result.regions[idx].span;
            if (result.text.substr(static_cast<size_t>(span.start),
                                   static_cast<size_t>(span.length())) != phrase) {
                ++failures;
            }
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("build_assignment_matrix marks intersecting tokens") {
    SUBCASE("single-token region row") {
        std::vector<TrainingRegion> regions = {{{1, 1, 2, 2}, {2, 5}, 0}};
        auto m = build_assignment_matrix("A boy runs", regions, kTokenizer);
        CHECK(m.rows == 1);
        CHECK(m.cols == 3);
        CHECK(m.at(0, 1));
        CHECK_FALSE(m.at(0, 0));
        CHECK_FALSE(m.at(0, 2));
    }
    SUBCASE("two-token span has two ones") {
        std::vector<TrainingRegion> regions = {{{1, 1, 2, 2}, {22, 29}, 0}};
        auto m = build_assignment_matrix("A boy is playing with his dog", regions,
                                         kTokenizer);
        int row_sum = 0;
        for (auto [l, j] : m.ones) row_sum += (l == 0);
        CHECK(row_sum == 2);
    }
    SUBCASE("shared span yields identical rows") {
        std::vector<TrainingRegion> regions = {{{1, 1, 2, 2}, {2, 5}, 0},
                                               {{3, 3, 4, 4}, {2, 5}, 0}};
        auto m = build_assignment_matrix("A boy runs", regions, kTokenizer);
        std::set<int> row0, row1;
        for (auto [l, j] : m.ones) (l == 0 ? row0 : row1).insert(j);
        CHECK(row0 == row1);
    }
    SUBCASE("region matching no token is a hard error") {
        std::vector<TrainingRegion> regions = {{{1, 1, 2, 2}, {1, 2}, 0}};
        CHECK_THROWS_AS(
            build_assignment_matrix(". . .", regions, kTokenizer),
            ValidationError);
    }
}

TEST_CASE("tokenizer suffix stability under the default separator") {
    const std::string a = "A boy runs fast";
    const std::string b = "His dog naps";
    const std::string joined = a + ". " + b;
    auto tokens_a = kTokenizer.tokenize(a);
    auto tokens_b = kTokenizer.tokenize(b);
    auto tokens_joined = kTokenizer.tokenize(joined);
    REQUIRE(tokens_joined.size() == tokens_a.size() + tokens_b.size());
    int offset = static_cast<int>(a.size()) + 2;
    for (size_t i = 0; i < tokens_b.size(); ++i) {
        const auto& t = tokens_joined[tokens_a.size() + i];
        CHECK(t.text == tokens_b[i].text);
        CHECK(t.span.start == tokens_b[i].span.start + offset);
    }
}

TEST_CASE("make_text_sample glues positive and negatives with valid matrix") {
    auto samples = load_dataset(test::fixture_dir() / "dataset20.jsonl").samples;
    const GroundingSample& s = samples[0];
    std::vector<ChosenNegative> negatives = {
        {"A girl is playing with his dog", Strategy::rule_foil},
        {"A boy is playing with his cat", Strategy::mask_fill},
        {"The dog and the park", Strategy::recombination}};
    TrainingSample t = make_text_sample(s, negatives, ". ", 5, kTokenizer);
    CHECK(t.segments.size() == 4);
    int positives = 0;
    for (const auto& seg : t.segments) {
        if (seg.source == "positive") ++positives;
        CHECK(t.text.substr(static_cast<size_t>(seg.range.start),
                            static_cast<size_t>(seg.range.length()))
                  .size() == static_cast<size_t>(seg.range.length()));
    }
    CHECK(positives == 1);
    CHECK(t.regions.size() == s.regions.size());
    for (size_t r = 0; r < t.regions.size(); ++r) {
        auto text = t.text.substr(static_cast<size_t>(t.regions[r].span.start),
                                  static_cast<size_t>(t.regions[r].span.length()));
        CHECK(text == std::string(span_text(s, r)));
    }
    CHECK(t.matrix.rows == static_cast<int>(t.regions.size()));
}

TEST_CASE("assignment semantics are shuffle-invariant") {
    // the (region -> token-text multiset) map must not depend on the order
    // the segments landed in
    Rng rng(2024);
    auto samples = load_dataset(test::fixture_dir() / "dataset20.jsonl").samples;
    for (int t = 0; t < 200; ++t) {
        const GroundingSample& s = samples[rng.below(samples.size())];
        std::vector<ChosenNegative> negatives = {
            {"word" + std::to_string(rng.below(100)) + " filler text",
             Strategy::llm_foil},
            {"another negative " + std::to_string(rng.below(100)),
             Strategy::recombination}};
        std::map<size_t, std::multiset<std::string>> reference;
        for (int order = 0; order < 5; ++order) {
            TrainingSample sample = make_text_sample(
                s, negatives, ". ", derive_seed(9000 + t, "order", "", order),
                kTokenizer);
            auto tokens = kTokenizer.tokenize(sample.text);
            std::map<size_t, std::multiset<std::string>> mapping;
            for (auto [l, j] : sample.matrix.ones) {
                mapping[static_cast<size_t>(l)].insert(
                    tokens[static_cast<size_t>(j)].text);
            }
            if (order == 0) {
                reference = mapping;
            } else {
                CHECK(mapping == reference);
            }
        }
    }
}

TEST_CASE("pure-negative segments own all-zero matrix columns") {
    auto s = tiny_sample();
    std::vector<ChosenNegative> negatives = {{"a cat naps", Strategy::llm_foil}};
    TrainingSample t = make_text_sample(s, negatives, ". ", 3, kTokenizer);
    auto tokens = kTokenizer.tokenize(t.text);
    PhraseSpan negative_range{0, 0};
    for (const auto& seg : t.segments) {
        if (seg.source != "positive") negative_range = seg.range;
    }
    for (size_t j = 0; j < tokens.size(); ++j) {
        if (spans_intersect(tokens[j].span, negative_range)) {
            for (auto [l, col] : t.matrix.ones) {
                CHECK(col != static_cast<int>(j));
            }
        }
    }
}

TEST_CASE("regions_for_edited_caption shifts and drops spans correctly") {
    GroundingSample s;
    s.id = "shift";
    s.caption = "a red hat near a tall tree";
    s.image = {"x.png", 200, 200};
    s.regions = {{{0, 0, 10, 10}, {2, 9}},     // "red hat"
                 {{20, 20, 40, 40}, {17, 26}}, // "tall tree"
                 {{50, 50, 70, 70}, {6, 12}}}; // "hat ne" (overlaps the edit)
    auto record = kept_record_for(s, 0, "blue and gold cap");
    record.region_indices = {0};
    auto edited = regions_for_edited_caption(s, record);
    REQUIRE(edited.regions.size() == 2);
    CHECK(edited.dropped_overlapping == 1);
    // edited region span covers the new phrase
    CHECK(edited.regions[0].span ==
          PhraseSpan{2, 2 + static_cast<int>(std::string("blue and gold cap").size())});
    // trailing region shifted by the length delta
    int delta = static_cast<int>(std::string("blue and gold cap").size()) - 7;
    CHECK(edited.regions[1].span == PhraseSpan{17 + delta, 26 + delta});
    const std::string& t2 = record.request.edited_caption;
    CHECK(t2.substr(static_cast<size_t>(edited.regions[1].span.start), 9) ==
          "tall tree");
}

TEST_CASE("make_negative_grounding_sample flips t' to positive and t to negative") {
    auto samples = load_dataset(test::fixture_dir() / "dataset20.jsonl").samples;
    const GroundingSample& s = samples[0];  // "A boy is playing with his dog"
    auto record = kept_record_for(s, 1, "a soccer ball");
    TrainingSample t = make_negative_grounding_sample(s, record, ". ", 4, kTokenizer);

    REQUIRE(t.images.size() == 1);
    CHECK(t.images[0].path == record.output_image);
    bool saw_positive = false, saw_negative = false;
    for (const auto& seg : t.segments) {
        std::string text = t.text.substr(static_cast<size_t>(seg.range.start),
                                         static_cast<size_t>(seg.range.length()));
        if (seg.source == "positive") {
            saw_positive = true;
            CHECK(text == record.request.edited_caption);
        }
        if (seg.source == "negative(original)") {
            saw_negative = true;
            CHECK(text == s.caption);
        }
    }
    CHECK(saw_positive);
    CHECK(saw_negative);
    // all regions belong to t' and their spans extract its phrases
    REQUIRE(t.regions.size() == s.regions.size());
    for (const auto& r : t.regions) {
        auto text = t.text.substr(static_cast<size_t>(r.span.start),
                                  static_cast<size_t>(r.span.length()));
        CHECK((text == "A boy" || text == "a soccer ball"));
    }

    GeneratedImageRecord dropped = record;
    dropped.status = RecordStatus::dropped_image_score;
    CHECK_THROWS_AS(make_negative_grounding_sample(s, dropped, ". ", 4, kTokenizer),
                    ValidationError);
}

TEST_CASE("record with two edited regions remaps both") {
    GroundingSample s;
    s.id = "twin";
    s.caption = "a dog chases a dog";
    s.image = {"x.png", 300, 300};
    s.regions = {{{0, 0, 50, 50}, {2, 5}}, {{100, 100, 150, 150}, {15, 18}}};
    // both regions share the phrase text but not the span; edit only region 0
    auto record = kept_record_for(s, 0, "cat");
    TrainingSample t = make_negative_grounding_sample(s, record, ". ", 1, kTokenizer);
    CHECK(t.regions.size() == 2);

    // a true two-region edit: same span via duplicated regions
    GroundingSample shared;
    shared.id = "shared";
    shared.caption = "a dog naps";
    shared.image = {"x.png", 300, 300};
    shared.regions = {{{0, 0, 50, 50}, {2, 5}}, {{60, 60, 120, 120}, {2, 5}}};
    auto record2 = kept_record_for(shared, 0, "cat");
    record2.region_indices = {0, 1};
    TrainingSample t2 =
        make_negative_grounding_sample(shared, record2, ". ", 1, kTokenizer);
    REQUIRE(t2.regions.size() == 2);
    for (const auto& r : t2.regions) {
        CHECK(t2.text.substr(static_cast<size_t>(r.span.start),
                             static_cast<size_t>(r.span.length())) == "cat");
    }
}

TEST_CASE("pair_layout follows the longer-axis rule") {
    // width > height: stack vertically
    PairLayout tall = pair_layout(640, 480, 1);
    CHECK_FALSE(tall.horizontal);
    CHECK(tall.canvas_w == 640);
    CHECK(tall.canvas_h == 960);
    CHECK(tall.second_dy == 480);
    // height >= width: side by side
    PairLayout wide = pair_layout(480, 640, 1);
    CHECK(wide.horizontal);
    CHECK(wide.canvas_w == 960);
    CHECK(wide.canvas_h == 640);
    CHECK(wide.second_dx == 480);
}

TEST_CASE("pack_pair_sample keeps boxes inside their placement rectangles") {
    auto samples = load_dataset(test::fixture_dir() / "dataset20.jsonl").samples;
    for (const auto& s : samples) {
        if (s.regions.empty()) continue;
        auto record = kept_record_for(s, 0, "something else entirely");
        for (uint64_t seed = 0; seed < 4; ++seed) {
            TrainingSample t = pack_pair_sample(s, record, ". ", seed, kTokenizer);
            bool horizontal = s.image.height >= s.image.width;
            CHECK(t.canvas_w ==
                  (horizontal ? 2.0 * s.image.width : 1.0 * s.image.width));
            CHECK(t.canvas_h ==
                  (horizontal ? 1.0 * s.image.height : 2.0 * s.image.height));
            REQUIRE(t.images.size() == 2);
            for (const auto& region : t.regions) {
                const auto& placed = t.images[static_cast<size_t>(region.image_index)];
                CHECK(region.box.x1 >= placed.x - 1e-9);
                CHECK(region.box.y1 >= placed.y - 1e-9);
                CHECK(region.box.x2 <= placed.x + s.image.width + 1e-9);
                CHECK(region.box.y2 <= placed.y + s.image.height + 1e-9);
            }
            // captions never align to the other image's boxes
            auto tokens = kTokenizer.tokenize(t.text);
            for (auto [l, j] : t.matrix.ones) {
                const auto& region = t.regions[static_cast<size_t>(l)];
                const auto& token = tokens[static_cast<size_t>(j)];
                size_t seg_of_token = 0;
                for (size_t g = 0; g < t.segments.size(); ++g) {
                    if (token.span.start >= t.segments[g].range.start &&
                        token.span.end <= t.segments[g].range.end) {
                        seg_of_token = g;
                    }
                }
                bool token_in_generated =
                    t.segments[seg_of_token].source == "generated-image-caption";
                bool region_in_generated =
                    t.images[static_cast<size_t>(region.image_index)].path ==
                    record.output_image;
                CHECK(token_in_generated == region_in_generated);
            }
        }
    }
}

TEST_CASE("pack_pair_sample rejects mismatched records") {
    auto s = tiny_sample();
    auto record = kept_record_for(s, 0, "cat");
    record.sample_id = "someone_else";
    CHECK_THROWS_AS(pack_pair_sample(s, record, ". ", 1, kTokenizer),
                    ValidationError);

    auto wrong_dims = kept_record_for(s, 0, "cat");
    wrong_dims.request.width = 999;
    CHECK_THROWS_AS(pack_pair_sample(s, wrong_dims, ". ", 1, kTokenizer),
                    ValidationError);
}

TEST_CASE("shuffled pack places the generated image first eventually") {
    auto s = tiny_sample();
    auto record = kept_record_for(s, 0, "cat");
    bool saw_generated_first = false, saw_original_first = false;
    for (uint64_t seed = 0; seed < 64 && !(saw_generated_first && saw_original_first);
         ++seed) {
        TrainingSample t = pack_pair_sample(s, record, ". ", seed, kTokenizer);
        if (t.images[0].path == record.output_image) {
            saw_generated_first = true;
            // original caption segment sits after t' plus separator
            CHECK(t.segments[0].source == "generated-image-caption");
            CHECK(t.segments[1].range.start ==
                  static_cast<int>(record.request.edited_caption.size()) + 2);
            // and the original image's boxes carry the spatial offset
            for (const auto& region : t.regions) {
                if (region.image_index == 1) {
                    CHECK(region.box.x1 >= t.images[1].x);
                    CHECK(region.box.y1 >= t.images[1].y);
                }
            }
        } else {
            saw_original_first = true;
        }
    }
    CHECK(saw_generated_first);
    CHECK(saw_original_first);
}

TEST_CASE("emit_training_set writes a stable manifest") {
    test::TempDir tmp("emit");
    auto samples = load_dataset(test::fixture_dir() / "dataset20.jsonl").samples;
    std::vector<TrainingSample> training;
    for (const auto& s : samples) {
        training.push_back(make_text_sample(
            s, {{"negative text one", Strategy::llm_foil}}, ". ",
            derive_seed(7, "emit", s.id), kTokenizer));
    }
    Manifest m1 = emit_training_set(training, tmp.path() / "a.jsonl");
    Manifest m2 = emit_training_set(training, tmp.path() / "b.jsonl");
    CHECK(m1.count == 20);
    CHECK(m1.content_hash == m2.content_hash);
    CHECK(m1.segment_counts.at("positive") == 20);
    CHECK(m1.segment_counts.at("negative(llm_foil)") == 20);

    Manifest empty = emit_training_set({}, tmp.path() / "c.jsonl");
    CHECK(empty.count == 0);

    // training sample JSON round trip
    auto rows = read_jsonl(tmp.path() / "a.jsonl");
    REQUIRE(rows.size() == 20);
    TrainingSample back = training_sample_from_json(rows[0]);
    CHECK(training_sample_to_json(back).dump() ==
          training_sample_to_json(training[0]).dump());
}

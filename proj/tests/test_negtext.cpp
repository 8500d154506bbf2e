#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "neggen/dataset.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/negtext.hpp"
#include "neggen/prompts.hpp"
#include "neggen/strutil.hpp"

using namespace neggen;

namespace {

ConceptSet objects_only(std::vector<std::string> phrases) {
    ConceptSet set;
    for (auto& p : phrases) set.objects.push_back({std::move(p), false});
    return set;
}

}  // namespace

TEST_CASE("extract_concepts via the mock backend finds table objects") {
    auto backend = test::make_mock();
    GenStats stats;
    ConceptSet set = extract_concepts("a dog", backend, {}, stats);
    REQUIRE(set.objects.size() == 1);
    CHECK(set.objects[0].text == "dog");
    CHECK_FALSE(set.objects[0].unanchored);
    CHECK(set.attributes.empty());
    CHECK(set.relationships.empty());
}

TEST_CASE("participle attributes are surfaced where the rule parser stays silent") {
    const std::string caption =
        "A transportation vehicle is carrying a crowd of people who are sitting "
        "and standing.";
    auto backend = test::make_mock();
    GenStats stats;
    ConceptSet set = extract_concepts(caption, backend, {}, stats);
    std::vector<std::string> attrs;
    for (const auto& a : set.attributes) attrs.push_back(to_lower(a.text));
    CHECK(std::count(attrs.begin(), attrs.end(), "sitting") == 1);
    CHECK(std::count(attrs.begin(), attrs.end(), "standing") == 1);

    ConceptSet rule = extract_concepts_rule(caption);
    CHECK(rule.attributes.empty());  // the pattern parser has no attribute notion
}

TEST_CASE("non-JSON replies are retried up to the limit") {
    test::ScriptedBackend backend(
        {"no structure here", "still prose",
         R"({"text":"a dog","objects":["dog"],"attributes":[],"relationships":[]})"});
    GenStats stats;
    GenOptions options;
    options.retry_limit = 3;
    ConceptSet set = extract_concepts("a dog", backend, options, stats);
    CHECK(set.objects.size() == 1);
    CHECK(stats.retries == 2);
    CHECK(stats.skipped == 0);

    test::ScriptedBackend hopeless({"nope", "nope", "nope", "nope"});
    GenStats stats2;
    ConceptSet empty = extract_concepts("a dog", hopeless, options, stats2);
    CHECK(empty.empty());
    CHECK(stats2.skipped == 1);
}

TEST_CASE("json repair pass strips fences and trailing commas") {
    CHECK(parse_json_reply("```json\n{\"a\": 1,}\n```").at("a") == 1);
    CHECK(parse_json_reply("Sure! Here you go: {\"a\": [1, 2,]} Enjoy.").at("a")[1] ==
          2);
    CHECK(parse_json_reply("total nonsense").is_discarded());
}

TEST_CASE("phrases the backend paraphrased are kept but flagged unanchored") {
    test::ScriptedBackend backend(
        {R"({"text":"a dog","objects":["puppy"],"attributes":[],"relationships":[]})"});
    GenStats stats;
    ConceptSet set = extract_concepts("a dog", backend, {}, stats);
    REQUIRE(set.objects.size() == 1);
    CHECK(set.objects[0].unanchored);
}

TEST_CASE("rule_foil swaps exactly one concept occurrence") {
    SubstitutionTable table;
    table.entries["boy"] = {"girl"};
    GenStats stats;
    auto pairs = rule_foil("A boy is playing with a dog", "s", objects_only({"boy"}),
                           table, 7, stats);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].negative == "A girl is playing with a dog");
    CHECK(pairs[0].changed_concept == "boy");
    CHECK(pairs[0].strategy == Strategy::rule_foil);
    CHECK(stats.emitted == 1);
}

TEST_CASE("rule_foil with no table hits yields nothing") {
    SubstitutionTable table;
    GenStats stats;
    auto pairs =
        rule_foil("A boy is playing", "s", objects_only({"boy"}), table, 7, stats);
    CHECK(pairs.empty());
    CHECK(stats.candidates == 0);
}

TEST_CASE("rule_foil candidate choice is seed-deterministic") {
    SubstitutionTable table;
    table.entries["dog"] = {"cat", "wolf"};
    GenStats s1, s2;
    auto a = rule_foil("the dog barks", "s", objects_only({"dog"}), table, 99, s1);
    auto b = rule_foil("the dog barks", "s", objects_only({"dog"}), table, 99, s2);
    REQUIRE(a.size() == 1);
    REQUIRE(b.size() == 1);
    CHECK(a[0].negative == b[0].negative);
}

TEST_CASE("rule_foil output differs in exactly one contiguous substring") {
    SubstitutionTable table = test::small_table();
    const std::string caption = "A boy is playing with his dog";
    GenStats stats;
    auto pairs =
        rule_foil(caption, "s", objects_only({"boy", "dog"}), table, 3, stats);
    REQUIRE(pairs.size() == 2);
    for (const auto& p : pairs) {
        size_t prefix = 0;
        while (prefix < p.negative.size() && prefix < caption.size() &&
               p.negative[prefix] == caption[prefix]) {
            ++prefix;
        }
        size_t suffix = 0;
        while (suffix < p.negative.size() - prefix &&
               suffix < caption.size() - prefix &&
               p.negative[p.negative.size() - 1 - suffix] ==
                   caption[caption.size() - 1 - suffix]) {
            ++suffix;
        }
        std::string removed = caption.substr(prefix, caption.size() - prefix - suffix);
        CHECK(removed.find(' ') == std::string::npos);  // single token replaced
        CHECK(p.negative.size() - prefix - suffix > 0);
    }
}

TEST_CASE("llm_foil parses the per-phrase reply into provenance-tagged pairs") {
    test::ScriptedBackend backend({R"({
        "positive_text": "Rows of adults taking in a lecture in a classroom.",
        "results": [
          {"phrase": "adults",
           "negative_texts": ["Groups of children taking in a lecture in a classroom."]},
          {"phrase": "lecture",
           "negative_texts": ["Rows of adults participating in a discussion in a classroom."]}
        ]})"});
    GenStats stats;
    auto pairs = llm_foil("Rows of adults taking in a lecture in a classroom.", "s",
                          objects_only({"adults", "lecture"}), backend, {}, stats);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].negative ==
          "Groups of children taking in a lecture in a classroom.");
    CHECK(pairs[0].changed_concept == "adults");
    CHECK(pairs[1].negative ==
          "Rows of adults participating in a discussion in a classroom.");
    CHECK(pairs[1].changed_concept == "lecture");
    CHECK(stats.emitted == 2);
    // phrases travel in list order: objects, then attributes, then relationships
    CHECK(backend.prompts.size() == 1);
    CHECK(backend.prompts[0].find("adults, lecture") != std::string::npos);
}

TEST_CASE("llm_foil drops echoes of the positive and counts them") {
    const std::string caption = "A boy eats lunch";
    test::ScriptedBackend backend({R"({
        "positive_text": "A boy eats lunch",
        "results": [
          {"phrase": "boy",
           "negative_texts": ["A boy eats lunch", "A girl eats lunch"]}
        ]})"});
    GenStats stats;
    auto pairs = llm_foil(caption, "s", objects_only({"boy"}), backend, {}, stats);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].negative == "A girl eats lunch");
    CHECK(stats.dropped_equal == 1);
    CHECK(stats.candidates == 2);
    CHECK(stats.emitted == 1);
}

TEST_CASE("llm_foil survives a backend failure by recording it") {
    test::FailingBackend backend;
    GenStats stats;
    auto pairs = llm_foil("a dog runs", "s", objects_only({"dog"}), backend, {}, stats);
    CHECK(pairs.empty());
    CHECK(stats.backend_failures == 1);
}

TEST_CASE("recombine parses generated sentences and caps at count") {
    test::ScriptedBackend backend({R"({
        "main": "A boy is playing with his dog",
        "generated": ["The girl and her dog are playing fetch in the park",
                      "A cat watches the boy",
                      "A boy is playing with his dog"]})"});
    GenStats stats;
    auto pairs = recombine("A boy is playing with his dog", "s", {"boy", "dog"},
                           backend, 2, {}, stats);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].negative == "The girl and her dog are playing fetch in the park");
    CHECK(pairs[0].strategy == Strategy::recombination);
    CHECK_FALSE(pairs[0].changed_concept.has_value());
}

TEST_CASE("recombine handles multi-phrase captions") {
    test::ScriptedBackend backend({R"({
        "main": "A man wearing a green striped shirt while jumping up onto a mountain.",
        "generated": ["A woman wearing a blue polka dot shirt while climbing down from a mountain."]})"});
    GenStats stats;
    auto pairs = recombine(
        "A man wearing a green striped shirt while jumping up onto a mountain.", "s",
        {"man", "shirt", "mountain"}, backend, 10, {}, stats);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].negative ==
          "A woman wearing a blue polka dot shirt while climbing down from a "
          "mountain.");
    CHECK(backend.prompts[0].find("man, shirt, mountain") != std::string::npos);
}

TEST_CASE("role-swap pairs parse cleanly from completions") {
    std::string completion =
        " the cake is bigger than the plate it's on\n"
        "4. Negative: the plate is bigger than the cake that's on it\n";
    ParsedPairItems parsed = parse_pair_completion(completion, 4, 1);
    REQUIRE(parsed.pairs.size() == 1);
    CHECK(parsed.pairs[0].first == "the cake is bigger than the plate it's on");
    CHECK(parsed.pairs[0].second == "the plate is bigger than the cake that's on it");
}

TEST_CASE("recombine with the mock is a pure function of inputs") {
    auto backend = test::make_mock();
    GenStats s1, s2;
    GenOptions options;
    options.seed = 5;
    auto a = recombine("A boy is playing with his dog", "s", {"boy", "dog"}, backend,
                       4, options, s1);
    auto b = recombine("A boy is playing with his dog", "s", {"boy", "dog"}, backend,
                       4, options, s2);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].negative == b[i].negative);
}

TEST_CASE("summarize_pairs requires seeds and aborts on backend failure") {
    auto backend = test::make_mock();
    CHECK_THROWS_AS(summarize_pairs({}, backend, {}), ValidationError);

    NegativePair p{"a cat naps", "a dog naps", Strategy::incontext_summary,
                   std::nullopt, ""};
    SummaryContext ctx = summarize_pairs({p}, backend, {});
    CHECK_FALSE(ctx.summary.empty());
    CHECK(ctx.exemplars.size() == 1);
    SummaryContext again = summarize_pairs({p}, backend, {});
    CHECK(ctx.summary == again.summary);

    test::FailingBackend down;
    CHECK_THROWS_AS(summarize_pairs({p}, down, {}), BackendError);
}

TEST_CASE("generate_from_summary parses numbered continuations") {
    auto backend = test::make_mock();
    std::vector<NegativePair> seeds;
    for (int i = 0; i < 5; ++i) {
        seeds.push_back({"the plate " + std::to_string(i) + " holds a cake",
                         "the cake " + std::to_string(i) + " holds a plate",
                         Strategy::incontext_summary, std::nullopt, ""});
    }
    SummaryContext ctx = summarize_pairs(seeds, backend, {});
    GenStats stats;
    auto pairs = generate_from_summary(ctx, 3, backend, 20, {}, stats);
    CHECK(pairs.size() == 20);
    for (const auto& p : pairs) {
        CHECK(normalize_whitespace(p.positive) != normalize_whitespace(p.negative));
        CHECK(p.strategy == Strategy::incontext_summary);
    }
}

TEST_CASE("pair completion parser skips items missing their negative line") {
    // completion continues item 4; item 7 lacks its Negative line
    std::string completion = " first input\n4. Negative: first negative\n";
    for (int n = 5; n <= 23; ++n) {
        completion +=
            "###\n" + std::to_string(n) + ". Input: input " + std::to_string(n) + "\n";
        if (n != 7) {
            completion +=
                std::to_string(n) + ". Negative: negative " + std::to_string(n) + "\n";
        }
    }
    ParsedPairItems parsed = parse_pair_completion(completion, 4, 20);
    CHECK(parsed.pairs.size() == 19);
    CHECK(parsed.skipped == 1);
}

TEST_CASE("mask_phrase replaces the span and reports the mask span") {
    GroundingSample s;
    s.id = "m";
    s.caption = "A boy is playing with his dog";
    s.image = {"m.png", 640, 480};
    s.regions = {{{1, 1, 5, 5}, {22, 29}}, {{2, 2, 6, 6}, {0, 29}}};

    auto [masked, span] = mask_phrase(s, 0);
    CHECK(masked == "A boy is playing with [Mask]");
    CHECK(masked.substr(static_cast<size_t>(span.start),
                        static_cast<size_t>(span.length())) == "[Mask]");

    auto [all_masked, all_span] = mask_phrase(s, 1);
    CHECK(all_masked == "[Mask]");
    CHECK(all_span == PhraseSpan{0, 6});

    CHECK_THROWS_AS(mask_phrase(s, 2), ValidationError);
}

TEST_CASE("mask_phrase matches the word-level example") {
    GroundingSample s;
    s.id = "m2";
    s.caption = "The cat purrs contentedly on the windowsill.";
    s.image = {"m.png", 640, 480};
    int start = static_cast<int>(s.caption.find("cat"));
    s.regions = {{{1, 1, 5, 5}, {start, start + 3}}};
    auto [masked, span] = mask_phrase(s, 0);
    CHECK(masked == "The [Mask] purrs contentedly on the windowsill.");
}

TEST_CASE("fill_mask keeps the template fixed and swaps only the fill") {
    test::ScriptedBackend backend(
        {"A group of adults laugh and play on the playground."});
    GenStats stats;
    auto triplet = fill_mask("A group of children laugh and play on the playground.",
                             "A group of [Mask] and play on the playground.", backend,
                             {}, stats);
    REQUIRE(triplet.has_value());
    CHECK(triplet->negative == "A group of adults laugh and play on the playground.");
    CHECK(stats.emitted == 1);
}

TEST_CASE("fill_mask rejects echoes and structural violations, then skips") {
    GenOptions options;
    options.retry_limit = 2;
    SUBCASE("echo of the original fill") {
        test::ScriptedBackend backend({"A boy is playing with his dog",
                                       "A boy is playing with his dog",
                                       "A boy is playing with his dog"});
        GenStats stats;
        auto t = fill_mask("A boy is playing with his dog",
                           "A boy is playing with [Mask]", backend, options, stats);
        CHECK_FALSE(t.has_value());
        CHECK(stats.dropped_equal == 3);
        CHECK(stats.skipped == 1);
    }
    SUBCASE("prefix tampering fails the structural check") {
        test::ScriptedBackend backend({"One boy is playing with a ball",
                                       "A boy is playing with a ball"});
        GenStats stats;
        auto t = fill_mask("A boy is playing with his dog",
                           "A boy is playing with [Mask]", backend, options, stats);
        REQUIRE(t.has_value());
        CHECK(t->negative == "A boy is playing with a ball");
        CHECK(stats.malformed == 1);
        CHECK(stats.retries == 1);
    }
}

TEST_CASE("fill_mask preconditions: exactly one mask, aligned template") {
    auto backend = test::make_mock();
    GenStats stats;
    CHECK_THROWS_AS(fill_mask("a b", "[Mask] [Mask]", backend, {}, stats),
                    ValidationError);
    CHECK_THROWS_AS(fill_mask("a b", "no mask here", backend, {}, stats),
                    ValidationError);
    CHECK_THROWS_AS(
        fill_mask("completely different", "a [Mask] b", backend, {}, stats),
        ValidationError);
}

TEST_CASE("fill_mask excision property: template chars are untouched") {
    auto backend = test::make_mock();
    auto samples = load_dataset(test::fixture_dir() / "dataset20.jsonl").samples;
    GenOptions options;
    int checked = 0;
    for (const auto& s : samples) {
        for (size_t r = 0; r < s.regions.size(); ++r) {
            auto [masked, span] = mask_phrase(s, r);
            GenStats stats;
            options.seed = static_cast<uint64_t>(11 + checked);
            auto t = fill_mask(s.caption, masked, backend, options, stats);
            if (!t) continue;
            ++checked;
            size_t mpos = masked.find(kMaskToken);
            std::string prefix = masked.substr(0, mpos);
            std::string suffix = masked.substr(mpos + kMaskToken.size());
            REQUIRE(t->negative.size() >= prefix.size() + suffix.size());
            CHECK(t->negative.compare(0, prefix.size(), prefix) == 0);
            CHECK(t->negative.compare(t->negative.size() - suffix.size(),
                                      suffix.size(), suffix) == 0);
        }
    }
    CHECK(checked > 30);
}

TEST_CASE("bootstrap_generate grows triplets from seeds deterministically") {
    auto backend = test::make_mock();
    std::vector<TripletSample> seeds;
    for (const auto& j : read_jsonl(test::fixture_dir() / "seed_triplets.jsonl")) {
        seeds.push_back(triplet_from_json(j));
    }
    REQUIRE(seeds.size() == 5);
    GenStats stats;
    auto stage1 = bootstrap_generate(seeds, 100, 3, backend, {}, stats);
    CHECK(stage1.size() == 100);
    for (const auto& t : stage1) {
        size_t mpos = t.masked.find(kMaskToken);
        REQUIRE(mpos != std::string::npos);
        CHECK(t.masked.find(kMaskToken, mpos + 1) == std::string::npos);
        CHECK(normalize_whitespace(t.positive) != normalize_whitespace(t.negative));
    }

    GenStats stats2;
    auto again = bootstrap_generate(seeds, 100, 3, backend, {}, stats2);
    REQUIRE(again.size() == stage1.size());
    for (size_t i = 0; i < stage1.size(); ++i) {
        CHECK(triplet_to_json(stage1[i]).dump() == triplet_to_json(again[i]).dump());
    }

    CHECK_THROWS_AS(bootstrap_generate({}, 10, 3, backend, {}, stats),
                    ValidationError);
}

TEST_CASE("inequality invariant holds under echo fault injection") {
    auto backend = test::make_mock(/*echo_rate=*/0.4);
    auto samples = load_dataset(test::fixture_dir() / "dataset20.jsonl").samples;
    GenStats stats;
    int emitted = 0;
    for (const auto& s : samples) {
        ConceptSet set = extract_concepts(s.caption, backend, {}, stats);
        if (set.empty()) continue;
        auto pairs = llm_foil(s.caption, s.id, set, backend, {}, stats);
        for (const auto& p : pairs) {
            CHECK(normalize_whitespace(p.positive) !=
                  normalize_whitespace(p.negative));
            ++emitted;
        }
    }
    CHECK(stats.dropped_equal > 0);  // the fault actually fired
    CHECK(emitted == stats.emitted);
    CHECK(stats.emitted == stats.candidates - stats.dropped_equal - stats.malformed);
}

TEST_CASE("strategy bookkeeping reconciles per-strategy counts") {
    auto backend = test::make_mock();
    auto samples = load_dataset(test::fixture_dir() / "dataset20.jsonl").samples;
    SubstitutionTable table =
        SubstitutionTable::load(test::fixture_dir() / "substitutions.json");
    GenStats rule_stats, foil_stats;
    size_t rule_pairs = 0, foil_pairs = 0;
    for (const auto& s : samples) {
        rule_pairs += rule_foil(s.caption, s.id, extract_concepts_rule(s.caption),
                                table, 3, rule_stats)
                          .size();
        GenStats tmp;
        ConceptSet set = extract_concepts(s.caption, backend, {}, tmp);
        if (set.empty()) continue;
        foil_pairs += llm_foil(s.caption, s.id, set, backend, {}, foil_stats).size();
    }
    CHECK(rule_pairs == static_cast<size_t>(rule_stats.emitted));
    CHECK(foil_pairs == static_cast<size_t>(foil_stats.emitted));
    CHECK(rule_stats.emitted == rule_stats.candidates - rule_stats.dropped_equal);
    CHECK(foil_stats.emitted ==
          foil_stats.candidates - foil_stats.dropped_equal - foil_stats.malformed);
}

TEST_CASE("prompt catalog carries its anchor phrases verbatim") {
    CHECK(prompts::extract_concepts("x").find(
              "Find objects, attributes of objects, and relationships") !=
          std::string::npos);
    CHECK(prompts::foil("x", {"a"}, 2).find("replace each of phrases with other words") !=
          std::string::npos);
    CHECK(prompts::recombine("x", {"a"}, 10).find("keep at least one phrase intact") !=
          std::string::npos);
    NegativePair p{"a", "b", Strategy::incontext_summary, std::nullopt, ""};
    CHECK(prompts::summarize_pairs({p}).find(
              "Summarize the features of those pairs") != std::string::npos);
    CHECK(prompts::pair_completion("s", {p}, 20)
              .find("Generate 20 pairs of input and hard negative") !=
          std::string::npos);
    CHECK(prompts::fill_mask("a [Mask]", "a b").find("by replacing [Mask] in") !=
          std::string::npos);
}

#include "neggen/assembly.hpp"

#include <algorithm>
#include <cctype>

#include "neggen/errors.hpp"
#include "neggen/hash.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/rng.hpp"
#include "neggen/strutil.hpp"

namespace neggen {

std::vector<Token> DefaultTokenizer::tokenize(std::string_view text) const {
    std::vector<Token> out;
    for (const auto& t : alnum_tokens(text)) {
        out.push_back({t.text, {t.start, t.end}});
    }
    return out;
}

bool AssignmentMatrix::at(int l, int j) const {
    return std::find(ones.begin(), ones.end(), std::make_pair(l, j)) != ones.end();
}

SampledNegatives sample_negatives(size_t pool_size, int k, uint64_t seed) {
    if (k < 1) throw ValidationError("K must be >= 1");
    SampledNegatives result;
    size_t want = static_cast<size_t>(k);
    if (pool_size < want) {
        result.shortfall = static_cast<int>(want - pool_size);
        want = pool_size;
    }
    Rng rng(seed);
    result.indices = rng.sample_indices(pool_size, want);
    return result;
}

ConcatResult shuffle_and_concat(const std::vector<SegmentInput>& segments,
                                const std::string& separator, uint64_t seed) {
    if (separator.find(kMaskToken) != std::string::npos) {
        throw ValidationError("separator must not contain the mask token");
    }
    ConcatResult result;
    result.order.resize(segments.size());
    for (size_t i = 0; i < segments.size(); ++i) result.order[i] = i;
    Rng rng(seed);
    rng.shuffle(result.order);

    std::vector<int> offsets(segments.size(), 0);
    for (size_t pos = 0; pos < result.order.size(); ++pos) {
        size_t idx = result.order[pos];
        if (pos > 0) result.text += separator;
        offsets[idx] = static_cast<int>(result.text.size());
        result.text += segments[idx].text;
        result.segments.push_back(
            {segments[idx].source,
             {offsets[idx], offsets[idx] + static_cast<int>(segments[idx].text.size())}});
    }
    // regions stay in input-segment order so their identity is stable across
    // shuffles; only the span offsets move
    for (size_t idx = 0; idx < segments.size(); ++idx) {
        for (const Region& r : segments[idx].regions) {
            result.regions.push_back({r.box,
                                      {r.span.start + offsets[idx],
                                       r.span.end + offsets[idx]},
                                      segments[idx].image_index});
        }
    }
    return result;
}

AssignmentMatrix build_assignment_matrix(std::string_view text,
                                         const std::vector<TrainingRegion>& regions,
                                         const Tokenizer& tokenizer) {
    std::vector<Token> tokens = tokenizer.tokenize(text);
    AssignmentMatrix m;
    m.rows = static_cast<int>(regions.size());
    m.cols = static_cast<int>(tokens.size());
    for (int l = 0; l < m.rows; ++l) {
        bool any = false;
        for (int j = 0; j < m.cols; ++j) {
            if (spans_intersect(regions[static_cast<size_t>(l)].span,
                                tokens[static_cast<size_t>(j)].span)) {
                m.ones.emplace_back(l, j);
                any = true;
            }
        }
        if (!any) {
            throw ValidationError(
                "region " + std::to_string(l) +
                " intersects no token; separator or tokenizer misconfigured");
        }
    }
    return m;
}

TrainingSample make_text_sample(const GroundingSample& sample,
                                const std::vector<ChosenNegative>& negatives,
                                const std::string& separator, uint64_t seed,
                                const Tokenizer& tokenizer) {
    std::vector<SegmentInput> segments;
    segments.push_back({"positive", sample.caption, sample.regions, 0});
    for (const auto& neg : negatives) {
        segments.push_back({"negative(" + std::string(to_string(neg.strategy)) + ")",
                            neg.text,
                            {},
                            0});
    }
    ConcatResult concat = shuffle_and_concat(segments, separator, seed);

    TrainingSample out;
    out.id = sample.id + "/text";
    out.images.push_back({sample.image.path, 0, 0});
    out.canvas_w = sample.image.width;
    out.canvas_h = sample.image.height;
    out.text = std::move(concat.text);
    out.segments = std::move(concat.segments);
    out.regions = std::move(concat.regions);
    out.matrix = build_assignment_matrix(out.text, out.regions, tokenizer);
    return out;
}

EditedCaptionRegions regions_for_edited_caption(const GroundingSample& sample,
                                                const GeneratedImageRecord& record) {
    if (record.sample_id != sample.id) {
        throw ValidationError("record belongs to sample '" + record.sample_id +
                              "', not '" + sample.id + "'");
    }
    if (record.region_indices.empty()) {
        throw ValidationError("record has no edited regions");
    }
    int first = record.region_indices.front();
    if (first < 0 || static_cast<size_t>(first) >= sample.regions.size()) {
        throw ValidationError("record edited-region index out of range");
    }
    const PhraseSpan original_span = sample.regions[static_cast<size_t>(first)].span;
    const int delta =
        static_cast<int>(record.request.edited_phrase.size()) - original_span.length();

    EditedCaptionRegions out;
    for (size_t k = 0; k < sample.regions.size(); ++k) {
        const Region& r = sample.regions[k];
        bool is_edited =
            std::find(record.region_indices.begin(), record.region_indices.end(),
                      static_cast<int>(k)) != record.region_indices.end();
        if (is_edited) {
            out.regions.push_back(
                {r.box,
                 {original_span.start,
                  original_span.start +
                      static_cast<int>(record.request.edited_phrase.size())}});
            out.edited.push_back(true);
        } else if (r.span.end <= original_span.start) {
            out.regions.push_back(r);
            out.edited.push_back(false);
        } else if (r.span.start >= original_span.end) {
            out.regions.push_back({r.box, {r.span.start + delta, r.span.end + delta}});
            out.edited.push_back(false);
        } else {
            // span overlaps the rewritten range; alignment is unrecoverable
            ++out.dropped_overlapping;
        }
    }
    return out;
}

TrainingSample make_negative_grounding_sample(const GroundingSample& sample,
                                              const GeneratedImageRecord& record,
                                              const std::string& separator,
                                              uint64_t seed,
                                              const Tokenizer& tokenizer) {
    if (record.status != RecordStatus::kept) {
        throw ValidationError("record for sample '" + record.sample_id +
                              "' was not kept by the filters");
    }
    EditedCaptionRegions edited = regions_for_edited_caption(sample, record);

    std::vector<SegmentInput> segments;
    segments.push_back(
        {"positive", record.request.edited_caption, edited.regions, 0});
    segments.push_back({"negative(original)", sample.caption, {}, 0});
    ConcatResult concat = shuffle_and_concat(segments, separator, seed);

    TrainingSample out;
    out.id = sample.id + "/negimg" + std::to_string(record.region_indices.front());
    out.images.push_back({record.output_image, 0, 0});
    out.canvas_w = record.request.width;
    out.canvas_h = record.request.height;
    out.text = std::move(concat.text);
    out.segments = std::move(concat.segments);
    out.regions = std::move(concat.regions);
    out.matrix = build_assignment_matrix(out.text, out.regions, tokenizer);
    return out;
}

PairLayout pair_layout(int width, int height, uint64_t seed) {
    PairLayout layout;
    layout.horizontal = height >= width;
    layout.generated_first = Rng(seed).below(2) == 1;
    if (layout.horizontal) {
        layout.canvas_w = 2.0 * width;
        layout.canvas_h = height;
        layout.second_dx = width;
        layout.second_dy = 0;
    } else {
        layout.canvas_w = width;
        layout.canvas_h = 2.0 * height;
        layout.second_dx = 0;
        layout.second_dy = height;
    }
    return layout;
}

TrainingSample pack_pair_sample(const GroundingSample& sample,
                                const GeneratedImageRecord& record,
                                const std::string& separator, uint64_t seed,
                                const Tokenizer& tokenizer) {
    if (record.status != RecordStatus::kept) {
        throw ValidationError("record for sample '" + record.sample_id +
                              "' was not kept by the filters");
    }
    if (record.request.width != sample.image.width ||
        record.request.height != sample.image.height) {
        throw ValidationError(
            "pair packing rejected: images have different dimensions");
    }
    EditedCaptionRegions edited = regions_for_edited_caption(sample, record);
    PairLayout layout = pair_layout(sample.image.width, sample.image.height,
                                    derive_seed(seed, "pack", sample.id));

    // image 0 is first-placed; its boxes stay put, the second image's boxes
    // take the spatial offset
    SegmentInput original{"positive", sample.caption, sample.regions, 0};
    SegmentInput generated{"generated-image-caption", record.request.edited_caption,
                           edited.regions, 1};
    auto offset_boxes = [&](SegmentInput& seg) {
        for (Region& r : seg.regions) {
            r.box.x1 += layout.second_dx;
            r.box.x2 += layout.second_dx;
            r.box.y1 += layout.second_dy;
            r.box.y2 += layout.second_dy;
        }
        seg.image_index = 1;
    };

    TrainingSample out;
    std::vector<SegmentInput> segments;
    if (layout.generated_first) {
        generated.image_index = 0;
        offset_boxes(original);
        out.images.push_back({record.output_image, 0, 0});
        out.images.push_back({sample.image.path, layout.second_dx, layout.second_dy});
        segments = {std::move(generated), std::move(original)};
    } else {
        offset_boxes(generated);
        out.images.push_back({sample.image.path, 0, 0});
        out.images.push_back({record.output_image, layout.second_dx, layout.second_dy});
        segments = {std::move(original), std::move(generated)};
    }

    // texts concatenate in the same order the images were placed
    std::string text;
    std::vector<int> offsets(segments.size(), 0);
    for (size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) text += separator;
        offsets[i] = static_cast<int>(text.size());
        text += segments[i].text;
        out.segments.push_back(
            {segments[i].source,
             {offsets[i], offsets[i] + static_cast<int>(segments[i].text.size())}});
    }
    for (size_t i = 0; i < segments.size(); ++i) {
        for (const Region& r : segments[i].regions) {
            out.regions.push_back({r.box,
                                   {r.span.start + offsets[i], r.span.end + offsets[i]},
                                   segments[i].image_index});
        }
    }
    out.id = sample.id + "/pair" + std::to_string(record.region_indices.front());
    out.canvas_w = layout.canvas_w;
    out.canvas_h = layout.canvas_h;
    out.text = std::move(text);
    out.matrix = build_assignment_matrix(out.text, out.regions, tokenizer);
    return out;
}

nlohmann::json training_sample_to_json(const TrainingSample& s) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& im : s.images) {
        images.push_back({{"path", im.path}, {"placement", {im.x, im.y}}});
    }
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& seg : s.segments) {
        segments.push_back(
            {{"source", seg.source}, {"range", {seg.range.start, seg.range.end}}});
    }
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& r : s.regions) {
        regions.push_back({{"box", {r.box.x1, r.box.y1, r.box.x2, r.box.y2}},
                           {"span", {r.span.start, r.span.end}},
                           {"image", r.image_index}});
    }
    nlohmann::json ones = nlohmann::json::array();
    for (const auto& [l, j] : s.matrix.ones) ones.push_back({l, j});
    return {{"id", s.id},
            {"images", images},
            {"canvas", {s.canvas_w, s.canvas_h}},
            {"text", s.text},
            {"segments", segments},
            {"regions", regions},
            {"matrix", {{"rows", s.matrix.rows}, {"cols", s.matrix.cols}, {"ones", ones}}}};
}

TrainingSample training_sample_from_json(const nlohmann::json& j) {
    TrainingSample s;
    s.id = j.value("id", "");
    for (const auto& im : j.at("images")) {
        s.images.push_back({im.at("path").get<std::string>(),
                            im.at("placement").at(0).get<double>(),
                            im.at("placement").at(1).get<double>()});
    }
    s.canvas_w = j.at("canvas").at(0).get<double>();
    s.canvas_h = j.at("canvas").at(1).get<double>();
    s.text = j.at("text").get<std::string>();
    for (const auto& seg : j.at("segments")) {
        s.segments.push_back({seg.at("source").get<std::string>(),
                              {seg.at("range").at(0).get<int>(),
                               seg.at("range").at(1).get<int>()}});
    }
    for (const auto& r : j.at("regions")) {
        s.regions.push_back({{r.at("box").at(0).get<double>(),
                              r.at("box").at(1).get<double>(),
                              r.at("box").at(2).get<double>(),
                              r.at("box").at(3).get<double>()},
                             {r.at("span").at(0).get<int>(),
                              r.at("span").at(1).get<int>()},
                             r.at("image").get<int>()});
    }
    const auto& m = j.at("matrix");
    s.matrix.rows = m.at("rows").get<int>();
    s.matrix.cols = m.at("cols").get<int>();
    for (const auto& one : m.at("ones")) {
        s.matrix.ones.emplace_back(one.at(0).get<int>(), one.at(1).get<int>());
    }
    return s;
}

nlohmann::json Manifest::to_json() const {
    return {{"count", count},
            {"segment_counts", segment_counts},
            {"content_hash", content_hash}};
}

Manifest emit_training_set(const std::vector<TrainingSample>& samples,
                           const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    rows.reserve(samples.size());
    Manifest manifest;
    for (const auto& s : samples) {
        rows.push_back(training_sample_to_json(s));
        for (const auto& seg : s.segments) ++manifest.segment_counts[seg.source];
    }
    write_jsonl(path, rows);
    manifest.count = static_cast<int>(samples.size());
    manifest.content_hash = sha256_file_hex(path);
    return manifest;
}

}  // namespace neggen

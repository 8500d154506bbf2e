#pragma once

#include <string>
#include <vector>

namespace neggen {

// Axis-aligned pixel box, origin top-left. x1 < x2 and y1 < y2 are enforced
// by dataset validation.
struct BoundingBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    bool operator==(const BoundingBox&) const = default;
};

// Half-open [start, end) character span into a caption, byte-indexed over the
// caption exactly as stored.
struct PhraseSpan {
    int start = 0;
    int end = 0;

    int length() const { return end - start; }
    bool operator==(const PhraseSpan&) const = default;
};

inline bool spans_intersect(const PhraseSpan& a, const PhraseSpan& b) {
    return std::max(a.start, b.start) < std::min(a.end, b.end);
}

// One box linked to one caption span. Several regions may carry the same span.
struct Region {
    BoundingBox box;
    PhraseSpan span;
};

struct ImageInfo {
    std::string path;
    int width = 0;
    int height = 0;
};

struct GroundingSample {
    std::string id;
    ImageInfo image;
    std::string caption;
    std::vector<Region> regions;
};

}  // namespace neggen

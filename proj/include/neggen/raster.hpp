#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "neggen/types.hpp"

namespace neggen {

// 8-bit RGB raster.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb;  // 3 * width * height, row-major

    uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (y * width + x); }
    const uint8_t* pixel(int x, int y) const {
        return rgb.data() + 3 * (y * width + x);
    }
};

Image load_png(const std::filesystem::path& path);

// Written with fixed zlib level 0 (stored blocks) and filter NONE so the same
// pixels always produce the same bytes, independent of the zlib build.
void save_png(const std::filesystem::path& path, const Image& image);

// Width/height from the PNG header without decoding the pixels.
std::optional<std::pair<int, int>> png_dimensions(const std::filesystem::path& path);

std::array<uint8_t, 3> color_for_key(std::string_view key);

// Deterministic placeholder raster keyed on `key`; stands in for source
// images that are not materialized in mock runs.
Image synth_background(std::string_view key, int width, int height);

// Loads the file when it is a readable PNG, otherwise synthesizes a
// placeholder of the requested size.
Image load_or_synth(const std::filesystem::path& path, int width, int height);

void fill_box(Image& image, const BoundingBox& box, std::array<uint8_t, 3> color);

// Places `first` at the origin and `second` to its right (horizontal) or
// below it (vertical). Dimensions must match along the shared edge.
Image composite_pair(const Image& first, const Image& second, bool horizontal);

}  // namespace neggen

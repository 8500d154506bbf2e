#include "neggen/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "neggen/errors.hpp"
#include "neggen/rng.hpp"

namespace neggen {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

Image load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw ValidationError("cannot open image: " + path.string());

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ValidationError("not a decodable PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_png(png, info,
                 PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA |
                     PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_GRAY_TO_RGB,
                 nullptr);

    Image img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.rgb.resize(static_cast<size_t>(3) * img.width * img.height);
    png_bytepp rows = png_get_rows(png, info);
    size_t rowbytes = png_get_rowbytes(png, info);
    if (rowbytes != static_cast<size_t>(3 * img.width)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ValidationError("unsupported PNG layout: " + path.string());
    }
    for (int y = 0; y < img.height; ++y) {
        std::memcpy(img.rgb.data() + static_cast<size_t>(3) * img.width * y, rows[y],
                    rowbytes);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_png(const std::filesystem::path& path, const Image& image) {
    if (image.width <= 0 || image.height <= 0 ||
        image.rgb.size() != static_cast<size_t>(3) * image.width * image.height) {
        throw std::runtime_error("save_png: malformed image buffer");
    }
    if (!path.parent_path().empty()) {
        std::filesystem::create_directories(path.parent_path());
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write image: " + path.string());

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG write failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 0);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(image.rgb.data() +
                                                 static_cast<size_t>(3) * image.width * y));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::optional<std::pair<int, int>> png_dimensions(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) return std::nullopt;
    unsigned char header[24];
    if (std::fread(header, 1, sizeof(header), fp.get()) != sizeof(header)) {
        return std::nullopt;
    }
    static const unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (std::memcmp(header, kSig, 8) != 0) return std::nullopt;
    auto be32 = [&](int off) {
        return (static_cast<uint32_t>(header[off]) << 24) |
               (static_cast<uint32_t>(header[off + 1]) << 16) |
               (static_cast<uint32_t>(header[off + 2]) << 8) |
               static_cast<uint32_t>(header[off + 3]);
    };
    return std::make_pair(static_cast<int>(be32(16)), static_cast<int>(be32(20)));
}

std::array<uint8_t, 3> color_for_key(std::string_view key) {
    uint64_t h = derive_seed(0x9d5f, "color", key);
    // keep channels away from pure black/white so filled boxes stay visible
    return {static_cast<uint8_t>(32 + (h & 0xff) % 192),
            static_cast<uint8_t>(32 + ((h >> 8) & 0xff) % 192),
            static_cast<uint8_t>(32 + ((h >> 16) & 0xff) % 192)};
}

Image synth_background(std::string_view key, int width, int height) {
    Image img;
    img.width = width;
    img.height = height;
    img.rgb.assign(static_cast<size_t>(3) * width * height, 0);
    auto base = color_for_key(key);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            uint8_t* p = img.pixel(x, y);
            // faint diagonal banding so crops from different places differ
            uint8_t band = static_cast<uint8_t>(((x + y) / 16) % 2 ? 12 : 0);
            p[0] = static_cast<uint8_t>(std::min(255, base[0] + band));
            p[1] = static_cast<uint8_t>(std::min(255, base[1] + band));
            p[2] = static_cast<uint8_t>(std::min(255, base[2] + band));
        }
    }
    return img;
}

Image load_or_synth(const std::filesystem::path& path, int width, int height) {
    if (std::filesystem::exists(path) && png_dimensions(path)) {
        return load_png(path);
    }
    return synth_background(path.generic_string(), width, height);
}

void fill_box(Image& image, const BoundingBox& box, std::array<uint8_t, 3> color) {
    int x1 = std::clamp(static_cast<int>(box.x1), 0, image.width);
    int x2 = std::clamp(static_cast<int>(box.x2), 0, image.width);
    int y1 = std::clamp(static_cast<int>(box.y1), 0, image.height);
    int y2 = std::clamp(static_cast<int>(box.y2), 0, image.height);
    for (int y = y1; y < y2; ++y) {
        for (int x = x1; x < x2; ++x) {
            uint8_t* p = image.pixel(x, y);
            p[0] = color[0];
            p[1] = color[1];
            p[2] = color[2];
        }
    }
}

Image composite_pair(const Image& first, const Image& second, bool horizontal) {
    if (horizontal ? (first.height != second.height) : (first.width != second.width)) {
        throw ValidationError("composite_pair: images do not share the packed edge");
    }
    Image canvas;
    canvas.width = horizontal ? first.width + second.width : first.width;
    canvas.height = horizontal ? first.height : first.height + second.height;
    canvas.rgb.assign(static_cast<size_t>(3) * canvas.width * canvas.height, 0);
    auto blit = [&](const Image& src, int ox, int oy) {
        for (int y = 0; y < src.height; ++y) {
            std::memcpy(canvas.pixel(ox, oy + y), src.pixel(0, y),
                        static_cast<size_t>(3) * src.width);
        }
    };
    blit(first, 0, 0);
    blit(second, horizontal ? first.width : 0, horizontal ? 0 : first.height);
    return canvas;
}

}  // namespace neggen

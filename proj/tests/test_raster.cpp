#include "doctest.h"
#include "helpers.hpp"
#include "neggen/jsonl.hpp"
#include "neggen/raster.hpp"

using namespace neggen;

TEST_CASE("png write/read round trip preserves pixels") {
    test::TempDir tmp("png");
    Image img = synth_background("key", 37, 23);
    img.pixel(5, 7)[0] = 255;
    img.pixel(5, 7)[1] = 0;
    img.pixel(5, 7)[2] = 128;
    save_png(tmp.path() / "a.png", img);
    Image back = load_png(tmp.path() / "a.png");
    CHECK(back.width == 37);
    CHECK(back.height == 23);
    CHECK(back.rgb == img.rgb);
}

TEST_CASE("png bytes are identical across writes") {
    test::TempDir tmp("pngdet");
    Image img = synth_background("stable", 64, 48);
    save_png(tmp.path() / "a.png", img);
    save_png(tmp.path() / "b.png", img);
    CHECK(read_text_file(tmp.path() / "a.png") == read_text_file(tmp.path() / "b.png"));
}

TEST_CASE("png_dimensions reads the header without decoding") {
    test::TempDir tmp("pngdim");
    save_png(tmp.path() / "a.png", synth_background("x", 31, 17));
    auto dims = png_dimensions(tmp.path() / "a.png");
    REQUIRE(dims.has_value());
    CHECK(dims->first == 31);
    CHECK(dims->second == 17);
    write_text_file(tmp.path() / "not.png", "plain text");
    CHECK_FALSE(png_dimensions(tmp.path() / "not.png").has_value());
    CHECK_FALSE(png_dimensions(tmp.path() / "missing.png").has_value());
}

TEST_CASE("load_or_synth falls back to a deterministic placeholder") {
    Image a = load_or_synth("no/such/file.png", 20, 10);
    Image b = load_or_synth("no/such/file.png", 20, 10);
    CHECK(a.rgb == b.rgb);
    Image c = load_or_synth("other/file.png", 20, 10);
    CHECK(a.rgb != c.rgb);
}

TEST_CASE("fill_box paints exactly the clamped rectangle") {
    Image img = synth_background("bg", 20, 20);
    Image before = img;
    fill_box(img, {5, 5, 10, 10}, {1, 2, 3});
    for (int y = 0; y < 20; ++y) {
        for (int x = 0; x < 20; ++x) {
            bool inside = x >= 5 && x < 10 && y >= 5 && y < 10;
            if (inside) {
                CHECK(img.pixel(x, y)[0] == 1);
                CHECK(img.pixel(x, y)[2] == 3);
            } else {
                CHECK(img.pixel(x, y)[0] == before.pixel(x, y)[0]);
            }
        }
    }
    // clamping: a box past the border must not crash
    fill_box(img, {15, 15, 99, 99}, {9, 9, 9});
    CHECK(img.pixel(19, 19)[0] == 9);
}

TEST_CASE("composite_pair places images along the requested axis") {
    Image left = synth_background("l", 10, 8);
    Image right = synth_background("r", 6, 8);
    Image wide = composite_pair(left, right, true);
    CHECK(wide.width == 16);
    CHECK(wide.height == 8);
    CHECK(wide.pixel(0, 0)[0] == left.pixel(0, 0)[0]);
    CHECK(wide.pixel(10, 0)[0] == right.pixel(0, 0)[0]);

    Image top = synth_background("t", 10, 8);
    Image bottom = synth_background("b", 10, 5);
    Image tall = composite_pair(top, bottom, false);
    CHECK(tall.width == 10);
    CHECK(tall.height == 13);
    CHECK(tall.pixel(0, 8)[0] == bottom.pixel(0, 0)[0]);

    CHECK_THROWS_AS(composite_pair(left, bottom, true), ValidationError);
}

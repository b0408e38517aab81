// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "retguide/dataset.hpp"
#include "retguide/png_io.hpp"
#include "retguide/resize.hpp"
#include "retguide/rng.hpp"

using namespace retguide;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("retguide_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

BinaryMask full_mask(int w, int h) {
    BinaryMask mask(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            mask.set(x, y);
    return mask;
}

} // namespace

TEST_CASE("binary mask basics") {
    BinaryMask mask(5, 4);
    CHECK(mask.popcount() == 0);
    mask.set(2, 1);
    mask.set(4, 3);
    CHECK(mask.popcount() == 2);
    CHECK(mask.get(2, 1));
    CHECK_FALSE(mask.get(2, 2));
    mask.set(2, 1, false);
    CHECK(mask.popcount() == 1);

    auto box = mask.tight_bbox();
    REQUIRE(box.has_value());
    CHECK(*box == Box{4, 3, 1, 1});

    CHECK_THROWS_AS(BinaryMask(0, 3), Error);
}

TEST_CASE("xor popcount matches per-pixel count") {
    Rng rng(11);
    BinaryMask a(37, 23), b(37, 23);
    for (int y = 0; y < 23; ++y)
        for (int x = 0; x < 37; ++x) {
            if (rng.next_below(2))
                a.set(x, y);
            if (rng.next_below(2))
                b.set(x, y);
        }
    uint64_t expected = 0;
    for (int y = 0; y < 23; ++y)
        for (int x = 0; x < 37; ++x)
            expected += a.get(x, y) != b.get(x, y);
    CHECK(xor_popcount(a, b) == expected);
}

TEST_CASE("semantic map validation and one-hot round trip") {
    std::vector<ClassKind> kinds{ClassKind::Background, ClassKind::Foreground};
    CHECK_THROWS_AS(SemanticMap::make(2, 2, 2, {0, 1, 2, 0}, kinds), Error);
    CHECK_THROWS_AS(SemanticMap::make(2, 2, 2, {0, 1, 1}, kinds), Error);
    CHECK_THROWS_AS(SemanticMap::make(2, 2, 1, {0, 0, 0, 0}, kinds), Error);
    CHECK_THROWS_AS(SemanticMap::make(2, 2, 2, {0, 1, 1, 0}, kinds, {1, 0, 0}), Error);

    SemanticMap map = SemanticMap::make(3, 2, 2, {0, 1, 1, 0, 0, 1}, kinds, {0, 7, 7, 0, 0, 9});
    auto hot = map.one_hot();
    SemanticMap back = SemanticMap::from_one_hot(hot, 3, 2, 2, kinds);
    CHECK(back.labels == map.labels);
}

TEST_CASE("rng streams are reproducible and derived streams differ") {
    Rng a(123456), b(123456);
    for (int i = 0; i < 10000; ++i)
        REQUIRE(a.next_u64() == b.next_u64());

    Rng base(99);
    Rng d1 = base.derive(1);
    Rng d2 = base.derive(2);
    CHECK(d1.next_u64() != d2.next_u64());

    Rng open_check(5);
    for (int i = 0; i < 1000; ++i) {
        double v = open_check.next_open(0.5, 1.0);
        CHECK(v > 0.5);
        CHECK(v < 1.0);
    }
}

TEST_CASE("resize_nearest follows the index mapping") {
    // Constant mask stays constant.
    BinaryMask ones = full_mask(4, 4);
    BinaryMask big = resize_nearest(ones, 128, 128);
    CHECK(big.popcount() == 128 * 128);

    // Left-column-ones 2x2 -> left 64 columns at 128x128, checked against the
    // floor index-mapping oracle over every output pixel.
    BinaryMask half(2, 2);
    half.set(0, 0);
    half.set(0, 1);
    BinaryMask out = resize_nearest(half, 128, 128);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) {
            bool expected = half.get(x * 2 / 128, y * 2 / 128);
            REQUIRE(out.get(x, y) == expected);
            REQUIRE(out.get(x, y) == (x < 64));
        }

    // Identity resize.
    BinaryMask same = resize_nearest(half, 2, 2);
    CHECK(same == half);

    // Never invents values: a mask of only zeros resizes to zeros.
    BinaryMask zeros(3, 5);
    CHECK(resize_nearest(zeros, 9, 9).popcount() == 0);

    CHECK_THROWS_AS(resize_nearest(ones, 0, 4), Error);
}

TEST_CASE("resize_nearest signature is invariant to integer upscaling") {
    Rng rng(7);
    BinaryMask mask(13, 9);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 13; ++x)
            if (rng.next_below(3))
                mask.set(x, y);
    for (int factor : {2, 3, 5}) {
        BinaryMask up(13 * factor, 9 * factor);
        for (int y = 0; y < up.height(); ++y)
            for (int x = 0; x < up.width(); ++x)
                if (mask.get(x / factor, y / factor))
                    up.set(x, y);
        CHECK(resize_nearest(mask, 128, 128) == resize_nearest(up, 128, 128));
    }
}

TEST_CASE("resize_bilinear fixtures") {
    // Constant image maps to a constant image.
    RgbImage gray(10, 10, 137);
    RgbImage small = resize_bilinear(gray, 7, 7);
    for (uint8_t v : small.data)
        REQUIRE(v == 137);

    // Identity resize is bit exact.
    Rng rng(3);
    RgbImage noisy(6, 5);
    for (auto& v : noisy.data)
        v = static_cast<uint8_t>(rng.next_below(256));
    CHECK(resize_bilinear(noisy, 6, 5).data == noisy.data);

    // 2x1 [0, 255] -> 4x1: closed-form half-pixel-centre evaluation gives
    // source coords {-0.25, 0.25, 0.75, 1.25} -> values {0, 64, 191, 255}.
    RgbImage two(2, 1);
    two.px(1, 0)[0] = two.px(1, 0)[1] = two.px(1, 0)[2] = 255;
    RgbImage four = resize_bilinear(two, 4, 1);
    std::vector<uint8_t> expected{0, 64, 191, 255};
    for (int x = 0; x < 4; ++x)
        for (int c = 0; c < 3; ++c)
            REQUIRE(four.px(x, 0)[c] == expected[x]);
    for (int x = 1; x < 4; ++x)
        REQUIRE(four.px(x, 0)[0] >= four.px(x - 1, 0)[0]);
}

TEST_CASE("resize_bilinear stays within per-channel input range") {
    Rng rng(17);
    RgbImage img(9, 7);
    for (auto& v : img.data)
        v = static_cast<uint8_t>(40 + rng.next_below(150));
    uint8_t lo[3] = {255, 255, 255}, hi[3] = {0, 0, 0};
    for (size_t i = 0; i < img.data.size(); i += 3)
        for (int c = 0; c < 3; ++c) {
            lo[c] = std::min(lo[c], img.data[i + c]);
            hi[c] = std::max(hi[c], img.data[i + c]);
        }
    RgbImage out = resize_bilinear(img, 23, 31);
    for (size_t i = 0; i < out.data.size(); i += 3)
        for (int c = 0; c < 3; ++c) {
            REQUIRE(out.data[i + c] >= lo[c]);
            REQUIRE(out.data[i + c] <= hi[c]);
        }
}

TEST_CASE("png round trips") {
    fs::path dir = scratch_dir("png");
    Rng rng(21);

    RgbImage img(33, 17);
    for (auto& v : img.data)
        v = static_cast<uint8_t>(rng.next_below(256));
    write_rgb_png(dir / "rgb.png", img);
    RgbImage rgb_back = read_rgb(dir / "rgb.png");
    CHECK(rgb_back.width == 33);
    CHECK(rgb_back.data == img.data);
    CHECK(read_image_dims(dir / "rgb.png") == std::pair{33, 17});

    std::vector<uint8_t> gray(64);
    for (auto& v : gray)
        v = static_cast<uint8_t>(rng.next_below(240));
    write_gray8_png(dir / "gray8.png", gray, 8, 8);
    GrayImage16 g8 = read_gray(dir / "gray8.png");
    for (size_t i = 0; i < gray.size(); ++i)
        REQUIRE(g8.data[i] == gray[i]);

    std::vector<uint16_t> gray16(48);
    for (auto& v : gray16)
        v = static_cast<uint16_t>(rng.next_below(40000));
    write_gray16_png(dir / "gray16.png", gray16, 6, 8);
    GrayImage16 g16 = read_gray(dir / "gray16.png");
    CHECK(g16.data == gray16);

    BinaryMask mask(9, 5);
    mask.set(3, 3);
    mask.set(8, 0);
    write_mask_png(dir / "mask.png", mask);
    CHECK(read_mask_png(dir / "mask.png") == mask);

    CHECK_THROWS_AS(read_rgb(dir / "missing.png"), Error);
    fs::remove_all(dir);
}

TEST_CASE("dataset loading and validation") {
    fs::path dir = scratch_dir("dataset");
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "labels");

    auto put_entry = [&](const std::string& id, int w, int h, int lw, int lh) {
        write_rgb_png(dir / "images" / (id + ".png"), RgbImage(w, h, 100));
        std::vector<uint8_t> labels(static_cast<size_t>(lw) * lh, 1);
        write_gray8_png(dir / "labels" / (id + ".png"), labels, lw, lh);
    };
    put_entry("b", 8, 6, 8, 6);
    put_entry("a", 8, 6, 8, 6);
    put_entry("c", 8, 6, 8, 6);

    auto entries = load_dataset(dir);
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].image_id == "a");
    CHECK(entries[1].image_id == "b");
    CHECK(entries[2].image_id == "c");
    CHECK_FALSE(entries[0].instance_path.has_value());

    SUBCASE("missing label names the image") {
        write_rgb_png(dir / "images" / "d.png", RgbImage(4, 4, 9));
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("d"), Error);
    }
    SUBCASE("dimension mismatch is rejected") {
        put_entry("d", 8, 6, 7, 6);
        CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("mismatch"), Error);
    }
    SUBCASE("manifest overrides the directory scan") {
        std::ofstream manifest(dir / "picked.json");
        manifest << nlohmann::json{
                        {"entries",
                         {{{"image_id", "b"}, {"image", "images/b.png"}, {"label", "labels/b.png"}}}}}
                        .dump();
        manifest.close();
        auto picked = load_dataset(dir, dir / "picked.json");
        REQUIRE(picked.size() == 1);
        CHECK(picked[0].image_id == "b");
    }
    SUBCASE("config parse and hash") {
        DatasetConfig cfg = DatasetConfig::from_json_text(
            R"({"num_classes":2,"class_kinds":["background","foreground"]})");
        CHECK(cfg.num_classes == 2);
        CHECK(cfg.class_kinds[1] == ClassKind::Foreground);
        DatasetConfig other = DatasetConfig::from_json_text(
            R"({"num_classes":2,"class_kinds":["background","background"]})");
        CHECK(cfg.hash() != other.hash());
        CHECK_THROWS_AS(
            DatasetConfig::from_json_text(R"({"num_classes":2,"class_kinds":["background"]})"),
            Error);
    }
    fs::remove_all(dir);
}

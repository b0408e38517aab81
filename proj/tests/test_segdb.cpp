// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "retguide/database.hpp"
#include "retguide/resize.hpp"
#include "retguide/selftest.hpp"

using namespace retguide;
namespace fs = std::filesystem;

namespace {

const std::vector<ClassKind> kKinds{ClassKind::Background, ClassKind::Background,
                                    ClassKind::Foreground};

// 12x8 map: sky (0) on top, ground (1) below, plus foreground class 2.
SemanticMap grid_map(const std::vector<uint16_t>& labels, std::vector<uint32_t> instances = {}) {
    return SemanticMap::make(12, 8, 3, labels, kKinds, std::move(instances));
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("decompose splits instances and keeps the maximal background component") {
    // Two car instances (class 2) over ground, sky strip on top.
    std::vector<uint16_t> labels(96, 1);
    std::vector<uint32_t> instances(96, 0);
    for (int x = 0; x < 12; ++x)
        labels[x] = 0; // one sky row
    auto put = [&](int x, int y, uint16_t cls, uint32_t inst) {
        labels[static_cast<size_t>(y) * 12 + x] = cls;
        instances[static_cast<size_t>(y) * 12 + x] = inst;
    };
    for (int y = 2; y < 5; ++y)
        for (int x = 1; x < 4; ++x)
            put(x, y, 2, 1);
    for (int y = 3; y < 7; ++y)
        for (int x = 6; x < 9; ++x)
            put(x, y, 2, 2);

    RgbImage image(12, 8);
    for (size_t i = 0; i < image.data.size(); ++i)
        image.data[i] = static_cast<uint8_t>(i % 251);

    auto records = decompose(image, grid_map(labels, instances), "img", 1);
    REQUIRE(records.size() == 4); // sky, ground, car1, car2

    CHECK(records[0].category == 0);
    CHECK(records[0].area == 12);
    CHECK(records[1].category == 1);
    CHECK(records[2].category == 2);
    CHECK(records[2].area == 9);
    CHECK(records[3].category == 2);
    CHECK(records[3].area == 12);
    CHECK(records[2].bbox == Box{1, 2, 3, 3});

    for (const auto& rec : records) {
        rec.validate();
        // Pixels outside the mask are zeroed.
        for (int y = 0; y < rec.bbox.h; ++y)
            for (int x = 0; x < rec.bbox.w; ++x) {
                const uint8_t* px = rec.pixels.px(x, y);
                if (rec.mask.get(x, y)) {
                    const uint8_t* src = image.px(rec.bbox.x + x, rec.bbox.y + y);
                    REQUIRE((px[0] == src[0] && px[1] == src[1] && px[2] == src[2]));
                } else {
                    REQUIRE((px[0] == 0 && px[1] == 0 && px[2] == 0));
                }
            }
    }

    // Every instance pixel lands in exactly one record mask.
    std::vector<int> covered(96, 0);
    for (const auto& rec : records) {
        if (rec.category != 2)
            continue;
        for (int y = 0; y < rec.bbox.h; ++y)
            for (int x = 0; x < rec.bbox.w; ++x)
                if (rec.mask.get(x, y))
                    ++covered[static_cast<size_t>(rec.bbox.y + y) * 12 + rec.bbox.x + x];
    }
    for (int i = 0; i < 96; ++i)
        REQUIRE(covered[i] == (labels[i] == 2 && instances[i] != 0 ? 1 : 0));
}

TEST_CASE("background classes keep only the maximal 4-connected component") {
    // Ground split into a big left region (area 35) and small right region
    // (area 10) by a full-height sky column; 8-connected diagonal bridges
    // must not merge them.
    std::vector<uint16_t> labels(96, 1);
    for (int y = 0; y < 8; ++y)
        labels[static_cast<size_t>(y) * 12 + 7] = 0;
    for (int x = 8; x < 12; ++x)
        for (int y = 0; y < 8; ++y)
            labels[static_cast<size_t>(y) * 12 + x] = (y < 2) ? 1 : 0;

    RgbImage image(12, 8, 50);
    auto records = decompose(image, grid_map(labels), "img", 1);

    int ground_records = 0;
    for (const auto& rec : records)
        if (rec.category == 1) {
            ++ground_records;
            CHECK(rec.area == 7 * 8); // the left block
            CHECK(rec.bbox.x == 0);
        }
    CHECK(ground_records == 1);
}

TEST_CASE("equal-area maximal components tie-break on the bbox top-left") {
    // Two disconnected 2x2 ground blocks; everything else sky.
    std::vector<uint16_t> labels(96, 0);
    auto block = [&](int x0, int y0) {
        for (int y = y0; y < y0 + 2; ++y)
            for (int x = x0; x < x0 + 2; ++x)
                labels[static_cast<size_t>(y) * 12 + x] = 1;
    };
    block(8, 2); // later in scan order? top-left (8,2)
    block(1, 5); // top-left (1,5): larger y, smaller x
    RgbImage image(12, 8, 50);
    auto records = decompose(image, grid_map(labels), "img", 1);
    for (const auto& rec : records)
        if (rec.category == 1)
            CHECK(rec.bbox == Box{8, 2, 2, 2}); // (y, x) lexicographic winner
}

TEST_CASE("zero-area classes are skipped and tiny segments filtered") {
    std::vector<uint16_t> labels(96, 0); // sky only
    labels[5] = 1;                       // single ground pixel
    RgbImage image(12, 8, 50);
    auto records = decompose(image, grid_map(labels), "img", 16);
    REQUIRE(records.size() == 1); // ground filtered by min_area, class 2 absent
    CHECK(records[0].category == 0);
}

TEST_CASE("single full-frame class yields one full-frame record") {
    std::vector<uint16_t> labels(96, 1);
    RgbImage image(12, 8, 50);
    auto records = decompose(image, grid_map(labels), "img", 1);
    REQUIRE(records.size() == 1);
    CHECK(records[0].bbox == Box{0, 0, 12, 8});
    CHECK(records[0].area == 96);
}

TEST_CASE("instance ids on a background class are ignored with a warning") {
    std::vector<uint16_t> labels(96, 1);
    std::vector<uint32_t> instances(96, 0);
    // Bogus annotation: ground pixels carrying instance ids.
    for (int i = 0; i < 20; ++i)
        instances[i + 12] = 5;
    RgbImage image(12, 8, 50);
    auto records = decompose(image, grid_map(labels, instances), "img", 1);
    REQUIRE(records.size() == 1); // still a single background record
    CHECK(records[0].category == 1);
    CHECK(records[0].area == 96);
}

TEST_CASE("one record per instance id even when the instance is disconnected") {
    std::vector<uint16_t> labels(96, 1);
    std::vector<uint32_t> instances(96, 0);
    // Instance 3 occluded into two parts.
    for (int y = 2; y < 4; ++y) {
        for (int x = 1; x < 3; ++x) {
            labels[static_cast<size_t>(y) * 12 + x] = 2;
            instances[static_cast<size_t>(y) * 12 + x] = 3;
        }
        for (int x = 7; x < 10; ++x) {
            labels[static_cast<size_t>(y) * 12 + x] = 2;
            instances[static_cast<size_t>(y) * 12 + x] = 3;
        }
    }
    RgbImage image(12, 8, 50);
    auto records = decompose(image, grid_map(labels, instances), "img", 1);
    int fg = 0;
    for (const auto& rec : records)
        if (rec.category == 2) {
            ++fg;
            CHECK(rec.area == 10);
            CHECK(rec.bbox == Box{1, 2, 9, 2}); // spans both parts
        }
    CHECK(fg == 1);
}

TEST_CASE("foreground without instance ids falls back to connected components") {
    std::vector<uint16_t> labels(96, 1);
    for (int y = 1; y < 3; ++y)
        for (int x = 1; x < 4; ++x)
            labels[static_cast<size_t>(y) * 12 + x] = 2;
    for (int y = 5; y < 7; ++y)
        for (int x = 8; x < 11; ++x)
            labels[static_cast<size_t>(y) * 12 + x] = 2;
    RgbImage image(12, 8, 50);
    auto records = decompose(image, grid_map(labels), "img", 1);
    int fg = 0;
    for (const auto& rec : records)
        fg += rec.category == 2;
    CHECK(fg == 2);
}

TEST_CASE("database build, persistence and integrity") {
    fs::path dir = fs::temp_directory_path() / "retguide_test_db";
    fs::remove_all(dir);
    write_toy_dataset(dir / "toy", 2, 5);
    DatasetConfig config = DatasetConfig::load(dir / "toy" / "dataset.json");
    auto entries = load_dataset(dir / "toy");
    SegmentDatabase db = build_database(entries, config, kDefaultMinArea, 2);
    REQUIRE(db.size() == 8); // 4 regions per toy image

    // Deterministic ids in entry order; buckets sorted.
    uint64_t prev = 0;
    for (const auto& rec : db.records()) {
        CHECK(rec.segment_id > prev);
        prev = rec.segment_id;
        rec.validate();
        CHECK(make_signature(rec.mask) == rec.signature);
    }
    CHECK(db.bucket(2).size() == 2);
    CHECK(db.bucket(9).empty());

    fs::path path = dir / "db.segdb";
    save_database(db, path);
    std::string first = read_bytes(path);

    SUBCASE("rebuild is byte identical") {
        SegmentDatabase again = build_database(entries, config, kDefaultMinArea, 1);
        save_database(again, path);
        CHECK(read_bytes(path) == first);
    }
    SUBCASE("round trip is structurally equal") {
        SegmentDatabase loaded = load_database(path);
        REQUIRE(loaded.size() == db.size());
        CHECK(loaded.meta().config_hash == db.meta().config_hash);
        CHECK(loaded.meta().config.num_classes == 4);
        for (size_t i = 0; i < db.size(); ++i) {
            const auto& a = db.records()[i];
            const auto& b = loaded.records()[i];
            REQUIRE(a.segment_id == b.segment_id);
            REQUIRE(a.source_image_id == b.source_image_id);
            REQUIRE(a.category == b.category);
            REQUIRE(a.bbox == b.bbox);
            REQUIRE(a.area == b.area);
            REQUIRE(a.mask == b.mask);
            REQUIRE(a.signature == b.signature);
            REQUIRE(a.pixels.data == b.pixels.data);
        }
    }
    SUBCASE("truncated file fails the checksum") {
        write_bytes(path, first.substr(0, first.size() - 17));
        CHECK_THROWS_WITH_AS(load_database(path), doctest::Contains("checksum"), Error);
    }
    SUBCASE("newer major version is refused with both versions named") {
        std::string bytes = first;
        bytes[8] = 9; // version_major little-endian low byte
        write_bytes(path, bytes);
        try {
            load_database(path);
            FAIL("expected a version error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("9.") != std::string::npos);
            CHECK(std::string(e.what()).find("1.") != std::string::npos);
        }
    }
    SUBCASE("corrupted payload fails the checksum") {
        std::string bytes = first;
        bytes[bytes.size() / 2] ^= 0x40;
        write_bytes(path, bytes);
        CHECK_THROWS_WITH_AS(load_database(path), doctest::Contains("checksum"), Error);
    }
    fs::remove_all(dir);
}

TEST_CASE("build_database aborts naming the offending image") {
    fs::path dir = fs::temp_directory_path() / "retguide_test_badentry";
    fs::remove_all(dir);
    write_toy_dataset(dir, 1, 3);
    DatasetConfig config = DatasetConfig::load(dir / "dataset.json");
    auto entries = load_dataset(dir);
    entries[0].label_path = dir / "labels" / "missing.png";
    CHECK_THROWS_WITH_AS(build_database(entries, config), doctest::Contains("img0"), Error);
    CHECK_THROWS_AS(build_database({}, config), Error);
    fs::remove_all(dir);
}

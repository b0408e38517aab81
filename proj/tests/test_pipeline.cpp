// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "retguide/png_io.hpp"
#include "retguide/selftest.hpp"

using namespace retguide;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("retguide_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("run_pipeline produces validated artifacts and a manifest") {
    fs::path dir = scratch("pipeline");
    write_toy_dataset(dir / "data", 3, 8);
    DatasetConfig config = DatasetConfig::load(dir / "data" / "dataset.json");
    SegmentDatabase db = build_database(load_dataset(dir / "data"), config);
    save_database(db, dir / "toy.segdb");

    PipelineConfig cfg;
    cfg.dataset_root = dir / "data";
    cfg.db_path = dir / "toy.segdb";
    cfg.mode = Mode::Test;
    cfg.seed = 3;
    cfg.out_dir = dir / "out";
    cfg.workers = 2;

    RunManifest manifest = run_pipeline(cfg);
    CHECK(manifest.failure_count() == 0);
    REQUIRE(manifest.images.size() == 3);
    CHECK(manifest.total_regions == 12);
    CHECK(manifest.matched_regions == 12); // test mode finds every own segment
    CHECK(manifest.match_rate == 1.0);
    CHECK(manifest.mean_score == 0.0);

    // Every artifact referenced by the manifest exists and re-validates.
    for (const ImageRecord& rec : manifest.images) {
        REQUIRE(rec.ok);
        RgbImage rgb = read_rgb(cfg.out_dir / rec.guidance_rgb);
        BinaryMask valid = read_mask_png(cfg.out_dir / rec.guidance_valid);
        CHECK(rgb.width == 128);
        CHECK(valid.width() == 128);
        CHECK(rec.distorted_rgb.empty()); // test mode has no distorted pair
        for (const RegionOutcome& region : rec.regions)
            CHECK(region.result.matched());
    }
    CHECK(fs::exists(cfg.out_dir / "manifest.json"));
    json parsed = json::parse(file_bytes(cfg.out_dir / "manifest.json"));
    CHECK(parsed.at("aggregate").at("match_rate") == 1.0);
    CHECK(parsed.at("images").size() == 3);

    SUBCASE("train mode emits distorted pairs") {
        cfg.mode = Mode::Train;
        cfg.out_dir = dir / "out_train";
        RunManifest train = run_pipeline(cfg);
        CHECK(train.failure_count() == 0);
        for (const ImageRecord& rec : train.images) {
            REQUIRE_FALSE(rec.distorted_rgb.empty());
            CHECK(fs::exists(cfg.out_dir / rec.distorted_rgb));
            CHECK(fs::exists(cfg.out_dir / rec.distorted_valid));
        }
    }
    SUBCASE("worker count does not change the artifacts") {
        PipelineConfig one = cfg;
        one.out_dir = dir / "out_w1";
        one.workers = 1;
        PipelineConfig many = cfg;
        many.out_dir = dir / "out_w4";
        many.workers = 4;
        run_pipeline(one);
        run_pipeline(many);
        for (const auto& item : fs::directory_iterator(one.out_dir)) {
            std::string name = item.path().filename().string();
            if (name == "manifest.json")
                continue; // embeds the differing out_dir/workers config
            CHECK(file_bytes(item.path()) == file_bytes(many.out_dir / name));
        }
    }
    SUBCASE("unreadable database fails before processing") {
        PipelineConfig broken = cfg;
        broken.db_path = dir / "missing.segdb";
        broken.out_dir = dir / "out_broken";
        CHECK_THROWS_AS(run_pipeline(broken), Error);
        CHECK_FALSE(fs::exists(broken.out_dir / "manifest.json"));
    }
    SUBCASE("per-image decode failures are recorded, not thrown") {
        // Keep the PNG header (so the up-front dimension scan passes) but
        // truncate the payload; the failure then happens during processing.
        fs::path img1 = dir / "data" / "images" / "img1.png";
        std::string bytes = file_bytes(img1);
        std::ofstream out(img1, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), 64);
        out.close();
        PipelineConfig partial = cfg;
        partial.out_dir = dir / "out_partial";
        RunManifest result = run_pipeline(partial);
        CHECK(result.failure_count() == 1);
        CHECK(fs::exists(partial.out_dir / "manifest.json"));
        int broken = 0;
        for (const ImageRecord& rec : result.images)
            if (!rec.ok) {
                ++broken;
                CHECK(rec.image_id == "img1");
                CHECK_FALSE(rec.error.empty());
            }
        CHECK(broken == 1);
    }
    fs::remove_all(dir);
}

TEST_CASE("pipeline config json round trip") {
    PipelineConfig cfg;
    cfg.dataset_root = "/tmp/data";
    cfg.db_path = "/tmp/db.segdb";
    cfg.out_dir = "/tmp/out";
    cfg.mode = Mode::Train;
    cfg.threshold = 0.25;
    cfg.seed = 17;
    cfg.distortion.shift_magnitude = 0.2;
    PipelineConfig back = PipelineConfig::from_json_text(cfg.to_json_text());
    CHECK(back.dataset_root == cfg.dataset_root);
    CHECK(back.mode == Mode::Train);
    CHECK(back.threshold == 0.25);
    CHECK(back.seed == 17);
    CHECK(back.distortion.shift_magnitude == 0.2);

    CHECK_THROWS_AS(PipelineConfig::from_json_text("{}"), Error);
    PipelineConfig bad = cfg;
    bad.distortion.tau_min = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("bench on a single-record database") {
    SegmentDatabase db = make_synthetic_database(1, 1, 4);
    BenchReport report = bench_retrieval(db, 10, 5);
    CHECK(report.results_equal);
    CHECK(report.db_records == 1);
}

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/pipeline.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "retguide/parallel.hpp"
#include "retguide/png_io.hpp"
#include "retguide/rng.hpp"

namespace retguide {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

json score_json(const RetrievalResult& r) {
    json j;
    j["segment_id"] = r.matched() ? json(r.segment_id) : json(nullptr);
    j["scale_term"] = r.score ? json(r.score->scale_term) : json(nullptr);
    j["shape_term"] = r.score ? json(r.score->shape_term) : json(nullptr);
    j["total"] = r.score ? json(r.score->total) : json(nullptr);
    return j;
}

} // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) try {
    json j = json::parse(text);
    PipelineConfig cfg;
    cfg.dataset_root = j.at("dataset_root").get<std::string>();
    if (j.contains("manifest") && !j["manifest"].is_null())
        cfg.manifest = fs::path(j["manifest"].get<std::string>());
    if (j.contains("dataset_config") && !j["dataset_config"].is_null())
        cfg.dataset_config = fs::path(j["dataset_config"].get<std::string>());
    cfg.db_path = j.at("db").get<std::string>();
    cfg.out_dir = j.at("out_dir").get<std::string>();
    std::string mode = j.value("mode", "test");
    if (mode != "train" && mode != "test")
        throw Error("pipeline config: mode must be 'train' or 'test'");
    cfg.mode = mode == "train" ? Mode::Train : Mode::Test;
    if (j.contains("threshold")) {
        if (j["threshold"].is_null())
            cfg.threshold.reset();
        else
            cfg.threshold = j["threshold"].get<double>();
    }
    cfg.shape_weight = j.value("shape_weight", kDefaultShapeWeight);
    cfg.seed = j.value("seed", uint64_t{0});
    cfg.workers = j.value("workers", 0);
    cfg.min_area = j.value("min_area", kDefaultMinArea);
    if (j.contains("distortion")) {
        const json& d = j["distortion"];
        cfg.distortion.color_enabled = d.value("color", true);
        cfg.distortion.shape_enabled = d.value("shape", true);
        cfg.distortion.resolution_enabled = d.value("resolution", true);
        cfg.distortion.shift_count = d.value("shift_count", 3);
        cfg.distortion.shift_magnitude = d.value("shift_magnitude", 0.1);
        cfg.distortion.tau_min = d.value("tau_min", 0.5);
        cfg.distortion.tau_max = d.value("tau_max", 1.0);
        cfg.distortion.tps_regularization = d.value("tps_regularization", 1e-3);
    }
    cfg.validate();
    return cfg;
} catch (const json::exception& e) {
    throw Error(std::string("pipeline config: ") + e.what());
}

std::string PipelineConfig::to_json_text() const {
    json j;
    j["dataset_root"] = dataset_root.string();
    j["manifest"] = manifest ? json(manifest->string()) : json(nullptr);
    j["dataset_config"] = dataset_config ? json(dataset_config->string()) : json(nullptr);
    j["db"] = db_path.string();
    j["out_dir"] = out_dir.string();
    j["mode"] = mode == Mode::Train ? "train" : "test";
    j["threshold"] = threshold ? json(*threshold) : json(nullptr);
    j["shape_weight"] = shape_weight;
    j["seed"] = seed;
    j["workers"] = workers;
    j["min_area"] = min_area;
    j["distortion"] = {{"color", distortion.color_enabled},
                       {"shape", distortion.shape_enabled},
                       {"resolution", distortion.resolution_enabled},
                       {"shift_count", distortion.shift_count},
                       {"shift_magnitude", distortion.shift_magnitude},
                       {"tau_min", distortion.tau_min},
                       {"tau_max", distortion.tau_max},
                       {"tps_regularization", distortion.tps_regularization}};
    return j.dump();
}

void PipelineConfig::validate() const {
    if (dataset_root.empty() || db_path.empty() || out_dir.empty())
        throw Error("pipeline config: dataset_root, db and out_dir are required");
    if (threshold && *threshold < 0.0)
        throw Error("pipeline config: threshold must be >= 0");
    if (shape_weight <= 0.0)
        throw Error("pipeline config: shape_weight must be > 0");
    if (min_area < 1)
        throw Error("pipeline config: min_area must be >= 1");
    distortion.validate();
}

size_t RunManifest::failure_count() const {
    size_t n = 0;
    for (const auto& img : images)
        n += img.ok ? 0 : 1;
    return n;
}

std::string RunManifest::to_json_text() const {
    json j;
    j["tool_version"] = tool_version;
    j["config"] = json::parse(config_json);
    json imgs = json::array();
    for (const auto& img : images) {
        json rec;
        rec["image_id"] = img.image_id;
        rec["ok"] = img.ok;
        if (!img.ok)
            rec["error"] = img.error;
        json outputs;
        if (!img.guidance_rgb.empty()) {
            outputs["guidance_rgb"] = img.guidance_rgb;
            outputs["guidance_valid"] = img.guidance_valid;
        }
        if (!img.distorted_rgb.empty()) {
            outputs["distorted_rgb"] = img.distorted_rgb;
            outputs["distorted_valid"] = img.distorted_valid;
        }
        rec["outputs"] = outputs;
        json regions = json::array();
        for (const auto& region : img.regions) {
            json r = score_json(region.result);
            r["region_index"] = region.region_index;
            r["category"] = region.category;
            regions.push_back(std::move(r));
        }
        rec["regions"] = regions;
        rec["timing_ms"] = img.timing_ms;
        imgs.push_back(std::move(rec));
    }
    j["images"] = imgs;
    j["aggregate"] = {{"total_regions", total_regions},
                      {"matched_regions", matched_regions},
                      {"match_rate", match_rate},
                      {"mean_score", mean_score},
                      {"wall_time_ms", wall_time_ms}};
    return j.dump(2);
}

RunManifest run_pipeline(const PipelineConfig& config) {
    auto run_start = std::chrono::steady_clock::now();
    config.validate();

    // Fail fast on anything global before touching images.
    SegmentDatabase db = load_database(config.db_path);
    fs::path config_path = config.dataset_config.value_or(config.dataset_root / "dataset.json");
    DatasetConfig dataset_config = DatasetConfig::load(config_path);
    std::vector<DatasetEntry> entries = load_dataset(config.dataset_root, config.manifest);
    fs::create_directories(config.out_dir);

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.config_json = config.to_json_text();
    manifest.images.resize(entries.size());

    parallel_for(entries.size(), config.workers, [&](size_t i) {
        auto start = std::chrono::steady_clock::now();
        ImageRecord& rec = manifest.images[i];
        rec.image_id = entries[i].image_id;
        try {
            LoadedEntry loaded = load_entry(entries[i], dataset_config);
            uint64_t image_seed = config.seed ^ static_cast<uint64_t>(i);

            ComposeOptions opts;
            opts.mode = config.mode;
            opts.threshold = config.threshold;
            opts.shape_weight = config.shape_weight;
            opts.seed = image_seed;
            opts.source_image_id = entries[i].image_id;
            opts.min_area = config.min_area;
            opts.workers = 1; // parallelism lives at the image level here

            CompositionTrace trace;
            GuidanceImage guidance = compose_guidance(loaded.map, db, opts, &trace);

            rec.guidance_rgb = entries[i].image_id + "_guidance.png";
            rec.guidance_valid = entries[i].image_id + "_guidance_valid.png";
            write_rgb_png(config.out_dir / rec.guidance_rgb, guidance.rgb);
            write_mask_png(config.out_dir / rec.guidance_valid, guidance.validity);

            for (const PlanTrace& plan : trace.plans)
                rec.regions.push_back({plan.region_index, plan.category, plan.retrieved});
            std::sort(rec.regions.begin(), rec.regions.end(),
                      [](const RegionOutcome& a, const RegionOutcome& b) {
                          return a.region_index < b.region_index;
                      });

            if (config.mode == Mode::Train) {
                DistortionConfig dconf = config.distortion;
                dconf.seed = image_seed;
                dconf.min_area = config.min_area;
                dconf.workers = 1;
                GuidanceImage distorted =
                    distort_ground_truth(loaded.image, loaded.map, db, dconf);
                rec.distorted_rgb = entries[i].image_id + "_distorted.png";
                rec.distorted_valid = entries[i].image_id + "_distorted_valid.png";
                write_rgb_png(config.out_dir / rec.distorted_rgb, distorted.rgb);
                write_mask_png(config.out_dir / rec.distorted_valid, distorted.validity);
            }
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        rec.timing_ms = elapsed_ms(start);
    });

    double score_sum = 0.0;
    for (const auto& img : manifest.images) {
        for (const auto& region : img.regions) {
            ++manifest.total_regions;
            if (region.result.matched()) {
                ++manifest.matched_regions;
                score_sum += region.result.score->total;
            }
        }
    }
    manifest.match_rate = manifest.total_regions
                              ? static_cast<double>(manifest.matched_regions) /
                                    static_cast<double>(manifest.total_regions)
                              : 0.0;
    manifest.mean_score =
        manifest.matched_regions ? score_sum / static_cast<double>(manifest.matched_regions) : 0.0;
    manifest.wall_time_ms = elapsed_ms(run_start);

    std::ofstream out(config.out_dir / "manifest.json", std::ios::trunc);
    if (!out)
        throw Error("cannot write manifest under " + config.out_dir.string());
    out << manifest.to_json_text() << "\n";
    return manifest;
}

BenchReport bench_retrieval(const SegmentDatabase& db, int query_count, uint64_t seed) {
    if (db.size() == 0)
        throw Error("bench_retrieval: database is empty");
    Rng rng(seed);
    std::vector<RetrievalQuery> queries;
    queries.reserve(query_count);
    for (int i = 0; i < query_count; ++i) {
        const SegmentRecord& rec = db.records()[rng.next_below(db.size())];
        RetrievalQuery q;
        q.mask = rec.mask;
        q.category = rec.category;
        queries.push_back(std::move(q));
    }

    std::vector<RetrievalResult> fast(query_count), brute(query_count);
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < query_count; ++i)
        fast[i] = retrieve_best(db, queries[i]);
    double fast_ms = elapsed_ms(t0);
    auto t1 = std::chrono::steady_clock::now();
    for (int i = 0; i < query_count; ++i)
        brute[i] = retrieve_best_bruteforce(db, queries[i]);
    double brute_ms = elapsed_ms(t1);

    BenchReport report;
    report.db_records = db.size();
    report.query_count = query_count;
    report.accelerated_qps = fast_ms > 0.0 ? query_count * 1000.0 / fast_ms : 0.0;
    report.bruteforce_qps = brute_ms > 0.0 ? query_count * 1000.0 / brute_ms : 0.0;
    report.speedup = fast_ms > 0.0 ? brute_ms / fast_ms : 0.0;
    report.results_equal = true;
    for (int i = 0; i < query_count; ++i) {
        bool same = fast[i].segment_id == brute[i].segment_id &&
                    fast[i].matched() == brute[i].matched() &&
                    (!fast[i].matched() || fast[i].score->total == brute[i].score->total);
        if (!same) {
            report.results_equal = false;
            break;
        }
    }
    return report;
}

} // namespace retguide

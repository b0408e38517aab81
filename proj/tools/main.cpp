// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// retguide - batch tooling for retrieval-based guidance synthesis.
// Subcommands: build-db, retrieve, compose, distort, run, bench,
// verify-modnorm, verify-all.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "retguide/pipeline.hpp"
#include "retguide/png_io.hpp"
#include "retguide/selftest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace retguide;

namespace {

// Path-only environment overrides.
std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value && *value ? value : fallback;
}

SemanticMap load_map(const std::string& labels_path, const std::string& instances_path,
                     const DatasetConfig& config) {
    GrayImage16 labels = read_gray(labels_path);
    std::vector<uint16_t> label_values(labels.data.begin(), labels.data.end());
    std::vector<uint32_t> instance_values;
    if (!instances_path.empty()) {
        GrayImage16 inst = read_gray(instances_path);
        if (inst.width != labels.width || inst.height != labels.height)
            throw Error("instance raster dimensions disagree with labels");
        instance_values.assign(inst.data.begin(), inst.data.end());
    }
    return SemanticMap::make(labels.width, labels.height, config.num_classes,
                             std::move(label_values), config.class_kinds,
                             std::move(instance_values));
}

json region_json(int region_index, uint32_t category, const RetrievalResult& result) {
    json j;
    j["region_index"] = region_index;
    j["category"] = category;
    j["segment_id"] = result.matched() ? json(result.segment_id) : json(nullptr);
    j["scale_term"] = result.score ? json(result.score->scale_term) : json(nullptr);
    j["shape_term"] = result.score ? json(result.score->shape_term) : json(nullptr);
    j["total"] = result.score ? json(result.score->total) : json(nullptr);
    return j;
}

int print_checks(const std::vector<CheckResult>& checks) {
    int failures = 0;
    for (const CheckResult& check : checks) {
        std::cout << (check.passed ? "PASS" : "FAIL") << "  " << check.name;
        if (!check.detail.empty())
            std::cout << "  [" << check.detail << "]";
        std::cout << "  (" << check.seconds << "s)\n";
        failures += check.passed ? 0 : 1;
    }
    std::cout << (failures ? "FAILED: " : "OK: ") << checks.size() - failures << "/"
              << checks.size() << " checks passed\n";
    return failures ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"retrieval-based guidance toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    uint64_t seed = 0;
    int workers = 0;
    std::string config_path;
    app.add_option("--seed", seed, "global random seed");
    app.add_option("--workers", workers, "worker threads (0 = hardware)");
    app.add_option("--config", config_path, "pipeline config JSON (run subcommand)");

    // ---- build-db
    auto* build = app.add_subcommand("build-db", "decompose a dataset into a segment database");
    std::string build_root, build_out, build_manifest, build_config;
    int build_min_area = kDefaultMinArea;
    build->add_option("--root", build_root, "dataset root")->required();
    build->add_option("--out", build_out, "output database path")->required();
    build->add_option("--min-area", build_min_area, "minimum segment area in pixels");
    build->add_option("--manifest", build_manifest, "explicit dataset manifest JSON");
    build->add_option("--dataset-config", build_config,
                      "dataset config JSON (default <root>/dataset.json)");

    // ---- retrieve
    auto* retrieve = app.add_subcommand("retrieve", "per-region retrieval for one semantic map");
    std::string ret_db, ret_labels, ret_instances, ret_mode = "test", ret_out, ret_exclude;
    double ret_threshold = kDefaultThreshold;
    double ret_shape_weight = kDefaultShapeWeight;
    bool ret_no_threshold = false;
    retrieve->add_option("--db", ret_db, "segment database")->required();
    retrieve->add_option("--labels", ret_labels, "label raster PNG")->required();
    retrieve->add_option("--instances", ret_instances, "instance raster PNG");
    retrieve->add_option("--mode", ret_mode, "train|test")
        ->check(CLI::IsMember({"train", "test"}));
    retrieve->add_option("--threshold", ret_threshold, "non-similarity threshold");
    retrieve->add_flag("--no-threshold", ret_no_threshold, "disable threshold filtering");
    retrieve->add_option("--shape-weight", ret_shape_weight, "shape term weight");
    retrieve->add_option("--exclude-source", ret_exclude,
                         "source image id to exclude (defaults to the label stem in train mode)");
    retrieve->add_option("--out", ret_out, "output JSONL path")->required();

    // ---- compose
    auto* compose = app.add_subcommand("compose", "compose a retrieval-based guidance image");
    std::string cmp_db, cmp_labels, cmp_instances, cmp_mode = "test";
    std::string cmp_out_rgb, cmp_out_valid, cmp_out_trace, cmp_exclude;
    double cmp_threshold = kDefaultThreshold;
    bool cmp_no_threshold = false;
    compose->add_option("--db", cmp_db)->required();
    compose->add_option("--labels", cmp_labels)->required();
    compose->add_option("--instances", cmp_instances);
    compose->add_option("--mode", cmp_mode)->check(CLI::IsMember({"train", "test"}));
    compose->add_option("--threshold", cmp_threshold);
    compose->add_flag("--no-threshold", cmp_no_threshold);
    compose->add_option("--exclude-source", cmp_exclude);
    compose->add_option("--out-rgb", cmp_out_rgb)->required();
    compose->add_option("--out-valid", cmp_out_valid)->required();
    compose->add_option("--out-trace", cmp_out_trace, "per-region trace JSONL");

    // ---- distort
    auto* distort = app.add_subcommand("distort", "distort a ground-truth image per segment");
    std::string dis_image, dis_labels, dis_instances, dis_db, dis_out_rgb, dis_out_valid;
    bool dis_no_color = false, dis_no_shape = false, dis_no_res = false;
    distort->add_option("--image", dis_image)->required();
    distort->add_option("--labels", dis_labels)->required();
    distort->add_option("--instances", dis_instances);
    distort->add_option("--db", dis_db)->required();
    distort->add_flag("--no-color", dis_no_color, "disable color transfer");
    distort->add_flag("--no-shape", dis_no_shape, "disable shape warping");
    distort->add_flag("--no-res", dis_no_res, "disable resolution degradation");
    distort->add_option("--out-rgb", dis_out_rgb)->required();
    distort->add_option("--out-valid", dis_out_valid)->required();

    // ---- run
    auto* run = app.add_subcommand("run", "full dataset pipeline driven by --config");
    std::string run_root, run_db, run_out, run_mode;
    run->add_option("--root", run_root, "dataset root (overrides config)");
    run->add_option("--db", run_db, "database path (overrides config)");
    run->add_option("--out", run_out, "output directory (overrides config)");
    run->add_option("--mode", run_mode)->check(CLI::IsMember({"train", "test", ""}));

    // ---- bench
    auto* bench = app.add_subcommand("bench", "retrieval throughput against the brute-force oracle");
    std::string bench_db;
    uint64_t bench_synth = 0;
    int bench_queries = 100;
    int bench_categories = 16;
    bench->add_option("--db", bench_db, "existing database path");
    bench->add_option("--synthetic", bench_synth, "generate a synthetic database of N records");
    bench->add_option("--queries", bench_queries, "query count");
    bench->add_option("--categories", bench_categories, "synthetic category count");

    // ---- verify
    auto* verify_mod = app.add_subcommand("verify-modnorm", "modulation reference self-checks");
    auto* verify_all = app.add_subcommand("verify-all", "entire verification suite");
    std::string verify_work;
    verify_all->add_option("--work-dir", verify_work, "scratch directory");

    // Global flags remain usable after a subcommand name.
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) {
            fs::path root = env_or("RETGUIDE_DATASET_ROOT", build_root);
            fs::path cfg_path =
                build_config.empty() ? root / "dataset.json" : fs::path(build_config);
            DatasetConfig config = DatasetConfig::load(cfg_path);
            std::optional<fs::path> manifest;
            if (!build_manifest.empty())
                manifest = build_manifest;
            std::vector<DatasetEntry> entries = load_dataset(root, manifest);
            SegmentDatabase db = build_database(entries, config, build_min_area, workers);
            save_database(db, env_or("RETGUIDE_DB", build_out));
            std::cout << "built " << db.size() << " segments from " << entries.size()
                      << " images -> " << build_out << "\n";
        } else if (*retrieve) {
            SegmentDatabase db = load_database(env_or("RETGUIDE_DB", ret_db));
            SemanticMap map = load_map(ret_labels, ret_instances, db.meta().config);
            ComposeOptions opts;
            opts.mode = ret_mode == "train" ? Mode::Train : Mode::Test;
            opts.threshold = ret_no_threshold ? std::nullopt : std::optional(ret_threshold);
            opts.shape_weight = ret_shape_weight;
            opts.workers = workers;
            opts.source_image_id =
                !ret_exclude.empty() ? ret_exclude : fs::path(ret_labels).stem().string();
            opts.min_area = db.meta().min_area;
            std::vector<Region> regions = decompose_regions(map, opts.min_area);
            std::vector<RetrievalResult> results = retrieve_regions(db, regions, opts);
            std::ofstream out(ret_out, std::ios::trunc);
            if (!out)
                throw Error("cannot write " + ret_out);
            for (size_t i = 0; i < regions.size(); ++i)
                out << region_json(regions[i].region_index, regions[i].category, results[i])
                           .dump()
                    << "\n";
            std::cout << regions.size() << " regions -> " << ret_out << "\n";
        } else if (*compose) {
            SegmentDatabase db = load_database(env_or("RETGUIDE_DB", cmp_db));
            SemanticMap map = load_map(cmp_labels, cmp_instances, db.meta().config);
            ComposeOptions opts;
            opts.mode = cmp_mode == "train" ? Mode::Train : Mode::Test;
            opts.threshold = cmp_no_threshold ? std::nullopt : std::optional(cmp_threshold);
            opts.seed = seed;
            opts.workers = workers;
            opts.source_image_id =
                !cmp_exclude.empty() ? cmp_exclude : fs::path(cmp_labels).stem().string();
            opts.min_area = db.meta().min_area;
            CompositionTrace trace;
            GuidanceImage guidance = compose_guidance(map, db, opts, &trace);
            write_rgb_png(cmp_out_rgb, guidance.rgb);
            write_mask_png(cmp_out_valid, guidance.validity);
            if (!cmp_out_trace.empty()) {
                std::ofstream out(cmp_out_trace, std::ios::trunc);
                if (!out)
                    throw Error("cannot write " + cmp_out_trace);
                for (const PlanTrace& plan : trace.plans) {
                    json j = region_json(plan.region_index, plan.category, plan.retrieved);
                    j["kind"] =
                        plan.kind == ClassKind::Foreground ? "foreground" : "background";
                    j["target_bbox"] = {plan.target_bbox.x, plan.target_bbox.y,
                                        plan.target_bbox.w, plan.target_bbox.h};
                    j["owner_pixels"] = plan.owner_pixels;
                    j["spill_pixels"] = plan.spill_pixels;
                    out << j.dump() << "\n";
                }
            }
            std::cout << "guidance -> " << cmp_out_rgb << "\n";
        } else if (*distort) {
            SegmentDatabase db = load_database(env_or("RETGUIDE_DB", dis_db));
            RgbImage image = read_rgb(dis_image);
            SemanticMap map = load_map(dis_labels, dis_instances, db.meta().config);
            DistortionConfig config;
            config.color_enabled = !dis_no_color;
            config.shape_enabled = !dis_no_shape;
            config.resolution_enabled = !dis_no_res;
            config.seed = seed;
            config.workers = workers;
            config.min_area = db.meta().min_area;
            GuidanceImage out = distort_ground_truth(image, map, db, config);
            write_rgb_png(dis_out_rgb, out.rgb);
            write_mask_png(dis_out_valid, out.validity);
            std::cout << "distorted -> " << dis_out_rgb << "\n";
        } else if (*run) {
            PipelineConfig config;
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in)
                    throw Error("cannot open config " + config_path);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                config = PipelineConfig::from_json_text(text);
            }
            if (!run_root.empty())
                config.dataset_root = run_root;
            if (!run_db.empty())
                config.db_path = run_db;
            if (!run_out.empty())
                config.out_dir = run_out;
            if (!run_mode.empty())
                config.mode = run_mode == "train" ? Mode::Train : Mode::Test;
            config.dataset_root = env_or("RETGUIDE_DATASET_ROOT", config.dataset_root.string());
            config.db_path = env_or("RETGUIDE_DB", config.db_path.string());
            config.out_dir = env_or("RETGUIDE_OUT_DIR", config.out_dir.string());
            if (app.count("--seed"))
                config.seed = seed;
            if (app.count("--workers"))
                config.workers = workers;
            RunManifest manifest = run_pipeline(config);
            size_t failures = manifest.failure_count();
            std::cout << manifest.images.size() << " images, " << manifest.matched_regions << "/"
                      << manifest.total_regions << " regions matched, " << failures
                      << " failures\n";
            return failures == 0 ? 0 : 1;
        } else if (*bench) {
            SegmentDatabase db = bench_synth > 0
                                     ? make_synthetic_database(bench_synth, bench_categories, seed)
                                     : load_database(env_or("RETGUIDE_DB", bench_db));
            BenchReport report = bench_retrieval(db, bench_queries, seed);
            std::cout << "records:      " << report.db_records << "\n"
                      << "queries:      " << report.query_count << "\n"
                      << "accelerated:  " << report.accelerated_qps << " q/s\n"
                      << "brute force:  " << report.bruteforce_qps << " q/s\n"
                      << "speedup:      " << report.speedup << "x\n"
                      << "equal:        " << (report.results_equal ? "true" : "false") << "\n";
            return report.results_equal ? 0 : 1;
        } else if (*verify_mod) {
            return print_checks(run_modnorm_checks(seed));
        } else if (*verify_all) {
            fs::path work = verify_work.empty()
                                ? fs::temp_directory_path() / "retguide_verify"
                                : fs::path(verify_work);
            return print_checks(run_all_checks(seed, work));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

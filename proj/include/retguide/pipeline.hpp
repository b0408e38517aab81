// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "retguide/distortion.hpp"

namespace retguide {

inline constexpr const char* kToolVersion = "0.1.0";

// Everything a full batch run needs; validated before any work starts.
struct PipelineConfig {
    std::filesystem::path dataset_root;
    std::optional<std::filesystem::path> manifest;
    std::optional<std::filesystem::path> dataset_config; // default: root/dataset.json
    std::filesystem::path db_path;
    Mode mode = Mode::Test;
    std::optional<double> threshold = kDefaultThreshold;
    double shape_weight = kDefaultShapeWeight;
    DistortionConfig distortion;
    uint64_t seed = 0;
    std::filesystem::path out_dir;
    int workers = 0;
    int min_area = kDefaultMinArea;

    static PipelineConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
    void validate() const;
};

struct RegionOutcome {
    int region_index = 0;
    uint32_t category = 0;
    RetrievalResult result;
};

struct ImageRecord {
    std::string image_id;
    bool ok = false;
    std::string error;
    std::string guidance_rgb, guidance_valid;   // paths relative to out_dir
    std::string distorted_rgb, distorted_valid; // train mode only
    std::vector<RegionOutcome> regions;
    double timing_ms = 0.0;
};

struct RunManifest {
    std::string tool_version;
    std::string config_json;
    std::vector<ImageRecord> images;
    uint64_t total_regions = 0;
    uint64_t matched_regions = 0;
    double match_rate = 0.0;
    double mean_score = 0.0; // mean total score over matches
    double wall_time_ms = 0.0;

    size_t failure_count() const;
    std::string to_json_text() const;
};

// Composes guidance (and, in train mode, the distorted ground-truth pair) for
// every dataset image, writes the artifacts plus manifest.json under
// config.out_dir, and returns the manifest. Per-image failures are recorded
// rather than thrown; callers decide the exit status from failure_count().
RunManifest run_pipeline(const PipelineConfig& config);

struct BenchReport {
    uint64_t db_records = 0;
    int query_count = 0;
    double accelerated_qps = 0.0;
    double bruteforce_qps = 0.0;
    double speedup = 0.0;
    bool results_equal = false;
};

// Times the accelerated scan against the brute-force oracle on the same
// sampled queries and verifies result equality.
BenchReport bench_retrieval(const SegmentDatabase& db, int query_count, uint64_t seed);

} // namespace retguide

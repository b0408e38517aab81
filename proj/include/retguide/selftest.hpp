// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "retguide/pipeline.hpp"

namespace retguide {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Writes a small synthetic dataset (images/, labels/, instances/,
// dataset.json) whose segment shapes are unique per image within each
// category (guaranteed for up to 12 images).
void write_toy_dataset(const std::filesystem::path& root, int image_count, uint64_t seed);

// Random database of synthetic segment records spread over `categories`
// buckets; records share source ids in groups of four so source exclusion has
// an effect.
SegmentDatabase make_synthetic_database(size_t record_count, int categories, uint64_t seed);

// Numeric verification of the modulation reference (stats, modulation,
// blending, AdaIN, segmentation loss).
std::vector<CheckResult> run_modnorm_checks(uint64_t seed);

// The full verification suite; scratch files go under work_dir.
std::vector<CheckResult> run_all_checks(uint64_t seed, const std::filesystem::path& work_dir);

} // namespace retguide

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include "retguide/compositor.hpp"
#include "retguide/database.hpp"

namespace retguide {

// Ground-truth degradation settings. Each enabled distortion is applied to
// every segment; all randomness derives from seed ^ segment_index.
struct DistortionConfig {
    bool color_enabled = true;
    bool shape_enabled = true;
    bool resolution_enabled = true;
    int shift_count = 3;          // edge points to displace, at most 10
    double shift_magnitude = 0.1; // fraction of the bbox diagonal, per axis
    double tau_min = 0.5;         // open interval for the resolution scale
    double tau_max = 1.0;
    double tps_regularization = 1e-3;
    uint64_t seed = 0;
    int min_area = kDefaultMinArea;
    int workers = 0;

    void validate() const;
};

inline constexpr int kEdgePointCount = 10;

// Bilinear downsample to round(tau * dims) (clamped to 1) followed by
// bilinear upsample back to the input size.
RgbImage resolution_degrade(const RgbImage& segment, double tau);

// Decomposes the ground-truth image, distorts each segment (color transfer
// toward a same-category database draw, TPS shape warp, resolution
// degradation, in that order), and recomposes at the original positions.
// Validity is the union of the (possibly warped) segment masks.
GuidanceImage distort_ground_truth(const RgbImage& image, const SemanticMap& map,
                                   const SegmentDatabase& db, const DistortionConfig& config);

} // namespace retguide

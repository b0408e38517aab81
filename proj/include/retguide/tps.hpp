// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <vector>

#include "retguide/image.hpp"

namespace retguide {

// Thin plate spline mapping with kernel U(r) = r^2 log(r^2). With zero
// regularization the warp interpolates its control points exactly.
struct TpsWarp {
    std::vector<Point> source_points;
    std::vector<Point> target_points;
    std::vector<double> weights_x, weights_y; // kernel weights, one per point
    double affine_x[3] = {0, 0, 0};           // 1, x, y coefficients
    double affine_y[3] = {0, 0, 0};
    double regularization = 0.0;

    Point apply(const Point& p) const;
};

// Solves the bordered TPS system for the given correspondences. Throws when
// the system is singular (e.g. collinear points with zero regularization).
TpsWarp tps_solve(const std::vector<Point>& source_points,
                  const std::vector<Point>& target_points, double regularization);

struct WarpedSegment {
    Box bbox; // output domain relative to the input crop origin
    BinaryMask mask;
    RgbImage rgb;
};

// Warps a cropped segment by the given forward warp using a dense backward
// flow: the inverse-direction spline is solved internally and sampled per
// output pixel (mask by nearest, RGB by in-mask bilinear). The output domain
// is the input crop grown by `margin` pixels on every side.
WarpedSegment tps_apply(const TpsWarp& warp, const BinaryMask& mask, const RgbImage& rgb,
                        int margin = 0);

} // namespace retguide

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/tps.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace retguide {

namespace {

double tps_kernel(double dx, double dy) {
    double d2 = dx * dx + dy * dy;
    return d2 > 0.0 ? d2 * std::log(d2) : 0.0;
}

} // namespace

Point TpsWarp::apply(const Point& p) const {
    double x = affine_x[0] + affine_x[1] * p.x + affine_x[2] * p.y;
    double y = affine_y[0] + affine_y[1] * p.x + affine_y[2] * p.y;
    for (size_t i = 0; i < source_points.size(); ++i) {
        double u = tps_kernel(p.x - source_points[i].x, p.y - source_points[i].y);
        x += weights_x[i] * u;
        y += weights_y[i] * u;
    }
    return {x, y};
}

TpsWarp tps_solve(const std::vector<Point>& source_points,
                  const std::vector<Point>& target_points, double regularization) {
    const size_t n = source_points.size();
    if (n < 3)
        throw Error("tps_solve: at least 3 control points are required");
    if (target_points.size() != n)
        throw Error("tps_solve: point lists must have equal length");
    if (regularization < 0.0)
        throw Error("tps_solve: regularization must be >= 0");

    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 3, n + 3);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j)
            system(i, j) = tps_kernel(source_points[i].x - source_points[j].x,
                                      source_points[i].y - source_points[j].y);
        system(i, i) += regularization;
        system(i, n) = system(n, i) = 1.0;
        system(i, n + 1) = system(n + 1, i) = source_points[i].x;
        system(i, n + 2) = system(n + 2, i) = source_points[i].y;
        rhs(i, 0) = target_points[i].x;
        rhs(i, 1) = target_points[i].y;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw Error("tps_solve: singular system (collinear or repeated points); "
                    "use regularization > 0");
    Eigen::MatrixXd solution = lu.solve(rhs);

    TpsWarp warp;
    warp.source_points = source_points;
    warp.target_points = target_points;
    warp.regularization = regularization;
    warp.weights_x.resize(n);
    warp.weights_y.resize(n);
    for (size_t i = 0; i < n; ++i) {
        warp.weights_x[i] = solution(i, 0);
        warp.weights_y[i] = solution(i, 1);
    }
    for (int k = 0; k < 3; ++k) {
        warp.affine_x[k] = solution(n + k, 0);
        warp.affine_y[k] = solution(n + k, 1);
    }
    return warp;
}

namespace {

// Bilinear sample restricted to in-mask taps, renormalized. The caller
// guarantees the nearest pixel is in-mask, so the weight never vanishes.
void sample_masked_bilinear(const RgbImage& rgb, const BinaryMask& mask, double qx, double qy,
                            int nearest_x, int nearest_y, uint8_t* out) {
    int x0 = static_cast<int>(std::floor(qx));
    int y0 = static_cast<int>(std::floor(qy));
    double fx = qx - x0;
    double fy = qy - y0;

    double acc[3] = {0, 0, 0};
    double weight = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            int x = x0 + dx;
            int y = y0 + dy;
            if (x < 0 || x >= rgb.width || y < 0 || y >= rgb.height || !mask.get(x, y))
                continue;
            double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            if (wgt <= 0.0)
                continue;
            const uint8_t* px = rgb.px(x, y);
            for (int c = 0; c < 3; ++c)
                acc[c] += wgt * px[c];
            weight += wgt;
        }
    }
    if (weight <= 0.0) {
        const uint8_t* px = rgb.px(nearest_x, nearest_y);
        for (int c = 0; c < 3; ++c)
            out[c] = px[c];
        return;
    }
    for (int c = 0; c < 3; ++c)
        out[c] = static_cast<uint8_t>(std::lround(acc[c] / weight));
}

} // namespace

WarpedSegment tps_apply(const TpsWarp& warp, const BinaryMask& mask, const RgbImage& rgb,
                        int margin) {
    if (mask.width() != rgb.width || mask.height() != rgb.height)
        throw Error("tps_apply: mask and rgb dimensions differ");
    if (margin < 0)
        throw Error("tps_apply: margin must be >= 0");

    // Backward flow: the inverse-direction spline maps output positions to
    // source sample positions.
    TpsWarp backward = tps_solve(warp.target_points, warp.source_points, warp.regularization);

    WarpedSegment out;
    out.bbox = Box{-margin, -margin, mask.width() + 2 * margin, mask.height() + 2 * margin};
    out.mask = BinaryMask(out.bbox.w, out.bbox.h);
    out.rgb = RgbImage(out.bbox.w, out.bbox.h);

    for (int oy = 0; oy < out.bbox.h; ++oy) {
        for (int ox = 0; ox < out.bbox.w; ++ox) {
            Point p{static_cast<double>(ox + out.bbox.x), static_cast<double>(oy + out.bbox.y)};
            Point q = backward.apply(p);
            // Snap numerically-identity flow so a zero-displacement warp
            // reproduces the input exactly.
            if (std::abs(q.x - p.x) < 1e-9)
                q.x = p.x;
            if (std::abs(q.y - p.y) < 1e-9)
                q.y = p.y;
            int nx = static_cast<int>(std::lround(q.x));
            int ny = static_cast<int>(std::lround(q.y));
            if (nx < 0 || nx >= mask.width() || ny < 0 || ny >= mask.height() ||
                !mask.get(nx, ny))
                continue;
            out.mask.set(ox, oy);
            sample_masked_bilinear(rgb, mask, q.x, q.y, nx, ny, out.rgb.px(ox, oy));
        }
    }
    return out;
}

} // namespace retguide

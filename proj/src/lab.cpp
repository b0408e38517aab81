// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/lab.hpp"

#include <algorithm>
#include <cmath>

namespace retguide {

namespace {

// Crossover matrix of the classic statistics-transfer pipeline. The return
// matrix is the exact inverse (the published rounded one misses the +-1
// round-trip budget).
constexpr double kRgbToLms[3][3] = {
    {0.3811, 0.5783, 0.0402},
    {0.1967, 0.7244, 0.0782},
    {0.0241, 0.1288, 0.8444},
};

struct LmsToRgbMatrix {
    double m[3][3];

    LmsToRgbMatrix() {
        const auto& a = kRgbToLms;
        double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
        m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
        m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
        m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
        m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
        m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
        m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
        m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
        m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
    }
};

const LmsToRgbMatrix kLmsToRgb;

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt6 = std::sqrt(6.0);
const double kSqrt2 = std::sqrt(2.0);

// Added before the log so black stays representable and round-trips to black.
constexpr double kLogEpsilon = 1.0 / 255.0;

} // namespace

LabImage rgb_to_lab(const RgbImage& image) {
    LabImage out;
    out.width = image.width;
    out.height = image.height;
    size_t n = static_cast<size_t>(image.width) * image.height;
    out.l.resize(n);
    out.a.resize(n);
    out.b.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double rgb[3] = {image.data[3 * i] / 255.0, image.data[3 * i + 1] / 255.0,
                         image.data[3 * i + 2] / 255.0};
        double lms[3];
        for (int k = 0; k < 3; ++k) {
            double v = kRgbToLms[k][0] * rgb[0] + kRgbToLms[k][1] * rgb[1] +
                       kRgbToLms[k][2] * rgb[2];
            lms[k] = std::log10(v + kLogEpsilon);
        }
        out.l[i] = (lms[0] + lms[1] + lms[2]) / kSqrt3;
        out.a[i] = (lms[0] + lms[1] - 2.0 * lms[2]) / kSqrt6;
        out.b[i] = (lms[0] - lms[1]) / kSqrt2;
    }
    return out;
}

RgbImage lab_to_rgb(const LabImage& image) {
    RgbImage out(image.width, image.height);
    size_t n = static_cast<size_t>(image.width) * image.height;
    for (size_t i = 0; i < n; ++i) {
        double l = image.l[i] / kSqrt3;
        double a = image.a[i] / kSqrt6;
        double b = image.b[i] / kSqrt2;
        double log_lms[3] = {l + a + b, l + a - b, l - 2.0 * a};
        double lms[3];
        for (int k = 0; k < 3; ++k) {
            // Keep the exponent sane so extreme transferred stats cannot
            // produce non-finite intermediates.
            double e = std::clamp(log_lms[k], -12.0, 12.0);
            lms[k] = std::pow(10.0, e) - kLogEpsilon;
        }
        for (int k = 0; k < 3; ++k) {
            double v = kLmsToRgb.m[k][0] * lms[0] + kLmsToRgb.m[k][1] * lms[1] +
                       kLmsToRgb.m[k][2] * lms[2];
            out.data[3 * i + k] =
                static_cast<uint8_t>(std::lround(std::clamp(v * 255.0, 0.0, 255.0)));
        }
    }
    return out;
}

std::array<ChannelStats, 3> masked_lab_stats(const LabImage& image, const BinaryMask& mask) {
    if (mask.width() != image.width || mask.height() != image.height)
        throw Error("masked_lab_stats: mask dimensions mismatch");
    const std::vector<double>* channels[3] = {&image.l, &image.a, &image.b};
    std::array<ChannelStats, 3> stats{};
    uint64_t count = 0;
    std::array<double, 3> sum{};
    std::array<double, 3> sq{};
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            if (!mask.get(x, y))
                continue;
            ++count;
            size_t i = image.index(x, y);
            for (int k = 0; k < 3; ++k) {
                double v = (*channels[k])[i];
                sum[k] += v;
                sq[k] += v * v;
            }
        }
    }
    if (count == 0)
        throw Error("masked_lab_stats: empty mask");
    for (int k = 0; k < 3; ++k) {
        double mean = sum[k] / count;
        double var = std::max(0.0, sq[k] / count - mean * mean);
        stats[k] = {mean, std::sqrt(var)};
    }
    return stats;
}

LabImage color_transfer_lab(const RgbImage& source, const BinaryMask& source_mask,
                            const RgbImage& target, const BinaryMask& target_mask) {
    if (source_mask.popcount() == 0 || target_mask.popcount() == 0)
        throw Error("color_transfer: masks must be nonempty");
    LabImage src = rgb_to_lab(source);
    LabImage tgt = rgb_to_lab(target);
    auto src_stats = masked_lab_stats(src, source_mask);
    auto tgt_stats = masked_lab_stats(tgt, target_mask);

    constexpr double kStdEpsilon = 1e-6;
    std::vector<double>* channels[3] = {&src.l, &src.a, &src.b};
    for (int k = 0; k < 3; ++k) {
        bool degenerate =
            src_stats[k].stddev < kStdEpsilon || tgt_stats[k].stddev < kStdEpsilon;
        double gain = degenerate ? 0.0 : tgt_stats[k].stddev / src_stats[k].stddev;
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                if (!source_mask.get(x, y))
                    continue;
                size_t i = src.index(x, y);
                double v = (*channels[k])[i];
                (*channels[k])[i] = (v - src_stats[k].mean) * gain + tgt_stats[k].mean;
            }
        }
    }
    return src;
}

RgbImage color_transfer(const RgbImage& source, const BinaryMask& source_mask,
                        const RgbImage& target, const BinaryMask& target_mask) {
    LabImage lab = color_transfer_lab(source, source_mask, target, target_mask);
    RgbImage converted = lab_to_rgb(lab);
    RgbImage out = source;
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            if (!source_mask.get(x, y))
                continue;
            const uint8_t* src = converted.px(x, y);
            std::copy(src, src + 3, out.px(x, y));
        }
    }
    return out;
}

} // namespace retguide

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <array>

#include "retguide/image.hpp"

namespace retguide {

// Decorrelated lαβ representation (RGB -> LMS -> log10 -> lαβ) used for
// statistics-matching color transfer.
struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<double> l, a, b;

    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

LabImage rgb_to_lab(const RgbImage& image);

// Inverse conversion; values are clamped to the 8-bit range.
RgbImage lab_to_rgb(const LabImage& image);

struct ChannelStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Population mean/std of each lαβ channel over the masked pixels.
std::array<ChannelStats, 3> masked_lab_stats(const LabImage& image, const BinaryMask& mask);

// Per-channel statistics transfer: out = (x - mu_src) * sigma_tgt / sigma_src
// + mu_tgt over the source mask. A degenerate channel (std under 1e-6 on
// either side) collapses to the constant target mean. Pixels outside the
// source mask keep their source values.
LabImage color_transfer_lab(const RgbImage& source, const BinaryMask& source_mask,
                            const RgbImage& target, const BinaryMask& target_mask);

// Same transfer quantized back to RGB; unmasked pixels are untouched.
RgbImage color_transfer(const RgbImage& source, const BinaryMask& source_mask,
                        const RgbImage& target, const BinaryMask& target_mask);

} // namespace retguide

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/resize.hpp"

#include <algorithm>
#include <cmath>

namespace retguide {

BinaryMask resize_nearest(const BinaryMask& mask, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1)
        throw Error("resize_nearest: target dimensions must be >= 1");
    if (target_w == mask.width() && target_h == mask.height())
        return mask;
    BinaryMask out(target_w, target_h);
    for (int y = 0; y < target_h; ++y) {
        int sy = static_cast<int>((static_cast<int64_t>(y) * mask.height()) / target_h);
        for (int x = 0; x < target_w; ++x) {
            int sx = static_cast<int>((static_cast<int64_t>(x) * mask.width()) / target_w);
            if (mask.get(sx, sy))
                out.set(x, y);
        }
    }
    return out;
}

namespace {

struct Tap {
    int lo;
    int hi;
    double frac; // weight of hi
};

// Half-pixel-centre source coordinate for destination index i.
Tap tap_for(int i, int src_dim, int dst_dim) {
    double s = (i + 0.5) * static_cast<double>(src_dim) / dst_dim - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_dim - 1));
    int lo = static_cast<int>(std::floor(s));
    int hi = std::min(lo + 1, src_dim - 1);
    return {lo, hi, s - lo};
}

} // namespace

RgbImage resize_bilinear(const RgbImage& image, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1)
        throw Error("resize_bilinear: target dimensions must be >= 1");
    if (target_w == image.width && target_h == image.height)
        return image;
    std::vector<Tap> xs(target_w), ys(target_h);
    for (int x = 0; x < target_w; ++x)
        xs[x] = tap_for(x, image.width, target_w);
    for (int y = 0; y < target_h; ++y)
        ys[y] = tap_for(y, image.height, target_h);

    RgbImage out(target_w, target_h);
    for (int y = 0; y < target_h; ++y) {
        const Tap& ty = ys[y];
        for (int x = 0; x < target_w; ++x) {
            const Tap& tx = xs[x];
            const uint8_t* p00 = image.px(tx.lo, ty.lo);
            const uint8_t* p10 = image.px(tx.hi, ty.lo);
            const uint8_t* p01 = image.px(tx.lo, ty.hi);
            const uint8_t* p11 = image.px(tx.hi, ty.hi);
            uint8_t* dst = out.px(x, y);
            for (int c = 0; c < 3; ++c) {
                double top = p00[c] + (p10[c] - p00[c]) * tx.frac;
                double bot = p01[c] + (p11[c] - p01[c]) * tx.frac;
                double v = top + (bot - top) * ty.frac;
                dst[c] = static_cast<uint8_t>(std::lround(v));
            }
        }
    }
    return out;
}

} // namespace retguide

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/image.hpp"

#include <bit>

namespace retguide {

RgbImage::RgbImage(int w, int h, uint8_t fill) : width(w), height(h) {
    if (w < 1 || h < 1)
        throw Error("RgbImage dimensions must be >= 1");
    data.assign(static_cast<size_t>(w) * h * 3, fill);
}

BinaryMask::BinaryMask(int w, int h) : width_(w), height_(h) {
    if (w < 1 || h < 1)
        throw Error("BinaryMask dimensions must be >= 1");
    words_.assign((static_cast<size_t>(w) * h + 63) / 64, 0);
}

uint64_t BinaryMask::popcount() const {
    uint64_t n = 0;
    for (uint64_t w : words_)
        n += std::popcount(w);
    return n;
}

std::optional<Box> BinaryMask::tight_bbox() const {
    int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (!get(x, y))
                continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0)
        return std::nullopt;
    return Box{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

BinaryMask BinaryMask::crop(const Box& box) const {
    if (box.x < 0 || box.y < 0 || box.right() > width_ || box.bottom() > height_ || box.w < 1 ||
        box.h < 1)
        throw Error("BinaryMask::crop box out of bounds");
    BinaryMask out(box.w, box.h);
    for (int y = 0; y < box.h; ++y)
        for (int x = 0; x < box.w; ++x)
            if (get(box.x + x, box.y + y))
                out.set(x, y);
    return out;
}

uint64_t xor_popcount(const BinaryMask& lhs, const BinaryMask& rhs) {
    if (lhs.width() != rhs.width() || lhs.height() != rhs.height())
        throw Error("xor_popcount: dimension mismatch");
    auto a = lhs.words();
    auto b = rhs.words();
    uint64_t n = 0;
    for (size_t i = 0; i < a.size(); ++i)
        n += std::popcount(a[i] ^ b[i]);
    // Bits past the last pixel are zero in both operands by construction.
    return n;
}

SemanticMap SemanticMap::make(int width, int height, int num_classes,
                              std::vector<uint16_t> labels, std::vector<ClassKind> class_kinds,
                              std::vector<uint32_t> instance_ids) {
    if (width < 1 || height < 1 || num_classes < 1)
        throw Error("SemanticMap dimensions and class count must be >= 1");
    size_t n = static_cast<size_t>(width) * height;
    if (labels.size() != n)
        throw Error("SemanticMap label raster size does not match dimensions");
    if (!instance_ids.empty() && instance_ids.size() != n)
        throw Error("SemanticMap instance raster size does not match label raster");
    if (static_cast<int>(class_kinds.size()) != num_classes)
        throw Error("SemanticMap class_kinds must have exactly num_classes entries");
    for (uint16_t l : labels)
        if (l >= num_classes)
            throw Error("SemanticMap label " + std::to_string(l) + " out of range [0, " +
                        std::to_string(num_classes) + ")");
    SemanticMap map;
    map.width = width;
    map.height = height;
    map.num_classes = num_classes;
    map.labels = std::move(labels);
    map.instance_ids = std::move(instance_ids);
    map.class_kinds = std::move(class_kinds);
    return map;
}

std::vector<uint8_t> SemanticMap::one_hot() const {
    std::vector<uint8_t> hot(static_cast<size_t>(width) * height * num_classes, 0);
    for (size_t i = 0; i < labels.size(); ++i)
        hot[i * num_classes + labels[i]] = 1;
    return hot;
}

SemanticMap SemanticMap::from_one_hot(std::span<const uint8_t> hot, int width, int height,
                                      int num_classes, std::vector<ClassKind> class_kinds) {
    size_t n = static_cast<size_t>(width) * height;
    if (hot.size() != n * num_classes)
        throw Error("from_one_hot: buffer size mismatch");
    std::vector<uint16_t> labels(n, 0);
    for (size_t i = 0; i < n; ++i) {
        int hits = 0;
        for (int c = 0; c < num_classes; ++c) {
            if (hot[i * num_classes + c]) {
                labels[i] = static_cast<uint16_t>(c);
                ++hits;
            }
        }
        if (hits != 1)
            throw Error("from_one_hot: pixel is not one-hot");
    }
    return make(width, height, num_classes, std::move(labels), std::move(class_kinds));
}

} // namespace retguide

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "retguide/common.hpp"

namespace retguide {

// Row-major 8-bit RGB raster.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data; // width * height * 3

    RgbImage() = default;
    RgbImage(int w, int h, uint8_t fill = 0);

    bool empty() const { return data.empty(); }
    uint8_t* px(int x, int y) { return data.data() + 3 * (static_cast<size_t>(y) * width + x); }
    const uint8_t* px(int x, int y) const {
        return data.data() + 3 * (static_cast<size_t>(y) * width + x);
    }
    bool same_dims(const RgbImage& o) const { return width == o.width && height == o.height; }
};

// Row-major bit-packed boolean raster. Bits are stored contiguously
// (no per-row padding), so two masks of equal dimensions can be compared
// word-by-word. A 128x128 signature is exactly 256 words.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int w, int h); // all-zero

    int width() const { return width_; }
    int height() const { return height_; }
    size_t bit_count() const { return static_cast<size_t>(width_) * height_; }

    bool get(int x, int y) const {
        size_t i = static_cast<size_t>(y) * width_ + x;
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(int x, int y, bool v = true) {
        size_t i = static_cast<size_t>(y) * width_ + x;
        uint64_t bit = uint64_t{1} << (i & 63);
        if (v)
            words_[i >> 6] |= bit;
        else
            words_[i >> 6] &= ~bit;
    }

    uint64_t popcount() const;
    bool any() const { return popcount() > 0; }
    std::span<const uint64_t> words() const { return words_; }
    std::span<uint64_t> words() { return words_; }
    bool operator==(const BinaryMask& o) const = default;

    // Tight bounding box of the set bits; nullopt for an empty mask.
    std::optional<Box> tight_bbox() const;
    BinaryMask crop(const Box& box) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint64_t> words_;
};

// Counts set bits in lhs XOR rhs; masks must have identical dimensions.
uint64_t xor_popcount(const BinaryMask& lhs, const BinaryMask& rhs);

// Per-pixel class labels with optional instance ids and a per-class
// foreground/background split.
struct SemanticMap {
    int width = 0;
    int height = 0;
    int num_classes = 0;
    std::vector<uint16_t> labels;        // width * height
    std::vector<uint32_t> instance_ids;  // empty, or width * height (0 = no instance)
    std::vector<ClassKind> class_kinds;  // num_classes entries

    static SemanticMap make(int width, int height, int num_classes, std::vector<uint16_t> labels,
                            std::vector<ClassKind> class_kinds,
                            std::vector<uint32_t> instance_ids = {});

    uint16_t label_at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
    uint32_t instance_at(int x, int y) const {
        return instance_ids.empty() ? 0 : instance_ids[static_cast<size_t>(y) * width + x];
    }
    bool has_instances() const { return !instance_ids.empty(); }
    ClassKind kind_of(uint16_t cls) const { return class_kinds[cls]; }

    // H*W*C one-hot expansion and its lossless inverse.
    std::vector<uint8_t> one_hot() const;
    static SemanticMap from_one_hot(std::span<const uint8_t> hot, int width, int height,
                                    int num_classes, std::vector<ClassKind> class_kinds);
};

} // namespace retguide

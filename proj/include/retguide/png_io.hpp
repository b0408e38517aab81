// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "retguide/image.hpp"

namespace retguide {

// Single-channel raster widened to 16 bits; holds label and instance maps.
struct GrayImage16 {
    int width = 0;
    int height = 0;
    std::vector<uint16_t> data;
};

// Decodes a PNG or JPEG file to 8-bit RGB (grayscale and palette inputs are
// expanded, alpha is dropped).
RgbImage read_rgb(const std::filesystem::path& path);

// Decodes an 8- or 16-bit grayscale PNG.
GrayImage16 read_gray(const std::filesystem::path& path);

// Reads only the header to get (width, height).
std::pair<int, int> read_image_dims(const std::filesystem::path& path);

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);
void write_gray8_png(const std::filesystem::path& path, std::span<const uint8_t> data, int width,
                     int height);
void write_gray16_png(const std::filesystem::path& path, std::span<const uint16_t> data, int width,
                      int height);

// 0/255 encoding of a mask, the on-disk form of validity masks.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask_png(const std::filesystem::path& path);

} // namespace retguide

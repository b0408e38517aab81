// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include "retguide/image.hpp"

namespace retguide {

// Nearest-neighbour resample: output(x, y) = input(floor(x*w/tw), floor(y*h/th)).
// Used for all masks and labels; never invents values.
BinaryMask resize_nearest(const BinaryMask& mask, int target_w, int target_h);

// Bilinear resample with half-pixel-centre alignment, used for all RGB
// content. Resizing to the source size returns an identical image.
RgbImage resize_bilinear(const RgbImage& image, int target_w, int target_h);

} // namespace retguide

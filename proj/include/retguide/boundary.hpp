// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <vector>

#include "retguide/image.hpp"
#include "retguide/rng.hpp"

namespace retguide {

// Closed outer contour of the component containing the topmost-leftmost set
// pixel, as an ordered list of boundary pixel centers (Moore neighborhood
// trace).
std::vector<Point> trace_boundary(const BinaryMask& mask);

// `count` points at equally spaced arc-length positions along the traced
// boundary, starting from an rng-chosen offset. Throws when the boundary has
// fewer than `count` pixels.
std::vector<Point> sample_edge_points(const BinaryMask& mask, int count, Rng& rng);

} // namespace retguide

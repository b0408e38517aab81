// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <string>
#include <vector>

#include "retguide/image.hpp"

namespace retguide {

// One cropped object (or background-component) segment of a training image.
struct SegmentRecord {
    uint64_t segment_id = 0;
    std::string source_image_id;
    uint32_t category = 0;
    Box bbox;            // tight bounding box in source-image pixels
    BinaryMask mask;     // cropped to bbox
    RgbImage pixels;     // cropped to bbox; zero outside mask
    uint64_t area = 0;   // popcount of mask
    BinaryMask signature; // mask resized to 128x128, used for shape comparison

    // Checks every structural invariant; throws on violation.
    void validate() const;
};

// A decomposed region of a query semantic map: a segment-to-be without pixels.
struct Region {
    int region_index = 0;
    uint32_t category = 0;
    ClassKind kind = ClassKind::Background;
    Box bbox;
    BinaryMask mask; // cropped to bbox
    uint64_t area = 0;
};

// Splits a semantic map into regions: foreground classes produce one region
// per instance id (connected components stand in for instances when ids are
// absent), background classes produce exactly one region covering the
// maximal 4-connected component. Regions under min_area are dropped.
std::vector<Region> decompose_regions(const SemanticMap& map, int min_area = kDefaultMinArea);

// Full decomposition of an image/map pair into segment records. segment_id is
// the region index within this image; build_database reassigns global ids.
std::vector<SegmentRecord> decompose(const RgbImage& image, const SemanticMap& map,
                                     const std::string& image_id, int min_area = kDefaultMinArea);

// Computes the 128x128 shape signature of a cropped mask.
BinaryMask make_signature(const BinaryMask& mask);

} // namespace retguide

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "retguide/retrieval.hpp"

namespace retguide {

// Composited RGB guidance plus a mask of pixels actually filled by a
// retrieved segment. Unfilled pixels are zero; downstream consumers use the
// validity mask to know which regions are missing.
struct GuidanceImage {
    RgbImage rgb;
    BinaryMask validity;
};

enum class Mode { Train, Test };

struct PastePlan {
    int region_index = 0;
    Box target_bbox;
    BinaryMask target_mask; // cropped to target_bbox
    RetrievalResult retrieved;
    uint32_t category = 0;
    ClassKind kind = ClassKind::Background;
};

struct ComposeOptions {
    Mode mode = Mode::Test;
    std::optional<double> threshold = kDefaultThreshold;
    uint64_t seed = 0; // reserved for sampling-based retrieval strategies
    std::string source_image_id; // excluded from retrieval in train mode
    int min_area = kDefaultMinArea;
    double shape_weight = kDefaultShapeWeight;
    int workers = 0;
};

// Per-plan paste accounting plus a per-pixel provenance map: for every valid
// pixel the index of the plan that wrote it, -1 elsewhere.
struct PlanTrace {
    int region_index = 0;
    uint32_t category = 0;
    ClassKind kind = ClassKind::Background;
    Box target_bbox;
    RetrievalResult retrieved;
    uint64_t owner_pixels = 0;
    uint64_t spill_pixels = 0;
};

struct CompositionTrace {
    std::vector<PlanTrace> plans;
    std::vector<int32_t> provenance; // width*height, plan order index or -1
};

// Orders paste plans: background kind before foreground, descending target
// area within each kind, region_index as the final tie-break.
std::vector<PastePlan> plan_composition(const SemanticMap& map, const std::vector<Region>& regions,
                                        const std::vector<RetrievalResult>& results);

// Applies one plan to the canvas under the integrity rules:
//   R1  inside the target mask, resized segment pixels are written;
//   R2  background spill outside the target mask is discarded;
//   R3  foreground spill over background classes is kept (never overwriting
//       already-valid pixels);
//   R4  foreground spill over foreground classes is discarded.
void paste_segment(GuidanceImage& canvas, const PastePlan& plan, const SemanticMap& map,
                   const SegmentRecord& record);

// Runs one retrieval per region (in parallel) with the options' mode,
// threshold and exclusions applied.
std::vector<RetrievalResult> retrieve_regions(const SegmentDatabase& db,
                                              const std::vector<Region>& regions,
                                              const ComposeOptions& options);

// Full guidance composition: decompose, retrieve, plan, and paste in two
// passes (owners first, then spills into still-invalid pixels). Deterministic
// for fixed inputs regardless of worker count.
GuidanceImage compose_guidance(const SemanticMap& map, const SegmentDatabase& db,
                               const ComposeOptions& options, CompositionTrace* trace = nullptr);

} // namespace retguide

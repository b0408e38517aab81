// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/compositor.hpp"

#include <algorithm>

#include "retguide/parallel.hpp"
#include "retguide/resize.hpp"

namespace retguide {

std::vector<PastePlan> plan_composition(const SemanticMap& map, const std::vector<Region>& regions,
                                        const std::vector<RetrievalResult>& results) {
    (void)map;
    if (regions.size() != results.size())
        throw Error("plan_composition: one retrieval result per region is required");

    std::vector<PastePlan> plans;
    plans.reserve(regions.size());
    for (size_t i = 0; i < regions.size(); ++i) {
        const Region& region = regions[i];
        if (region.mask.popcount() == 0)
            throw Error("plan_composition: empty target mask");
        PastePlan plan;
        plan.region_index = region.region_index;
        plan.target_bbox = region.bbox;
        plan.target_mask = region.mask;
        plan.retrieved = results[i];
        plan.category = region.category;
        plan.kind = region.kind;
        plans.push_back(std::move(plan));
    }
    std::stable_sort(plans.begin(), plans.end(), [](const PastePlan& a, const PastePlan& b) {
        if (a.kind != b.kind)
            return a.kind == ClassKind::Background;
        uint64_t area_a = a.target_mask.popcount();
        uint64_t area_b = b.target_mask.popcount();
        if (area_a != area_b)
            return area_a > area_b;
        return a.region_index < b.region_index;
    });
    return plans;
}

namespace {

enum class Phase { Owner, Spill };

struct ResizedSegment {
    BinaryMask mask;
    RgbImage rgb;
};

ResizedSegment resize_record(const PastePlan& plan, const SegmentRecord& record) {
    return {resize_nearest(record.mask, plan.target_bbox.w, plan.target_bbox.h),
            resize_bilinear(record.pixels, plan.target_bbox.w, plan.target_bbox.h)};
}

// One rule pass of a paste. The owner phase realizes R1 (always writes inside
// the target mask); the spill phase realizes R2-R4 and never overwrites valid
// pixels.
uint64_t paste_phase(GuidanceImage& canvas, const PastePlan& plan, const SemanticMap& map,
                     const ResizedSegment& seg, Phase phase, int32_t plan_ordinal,
                     std::vector<int32_t>* provenance) {
    const Box& bbox = plan.target_bbox;
    if (bbox.x < 0 || bbox.y < 0 || bbox.right() > canvas.rgb.width ||
        bbox.bottom() > canvas.rgb.height)
        throw Error("paste_segment: target bbox outside canvas");

    uint64_t written = 0;
    for (int y = 0; y < bbox.h; ++y) {
        for (int x = 0; x < bbox.w; ++x) {
            if (!seg.mask.get(x, y))
                continue;
            bool in_target = plan.target_mask.get(x, y);
            int cx = bbox.x + x;
            int cy = bbox.y + y;
            if (phase == Phase::Owner) {
                if (!in_target)
                    continue;
            } else {
                if (in_target)
                    continue;
                if (plan.kind == ClassKind::Background)
                    continue; // R2: background spill is zeroed out
                if (map.kind_of(map.label_at(cx, cy)) == ClassKind::Foreground)
                    continue; // R4: foreground spill over foreground is zeroed out
                if (canvas.validity.get(cx, cy))
                    continue; // R3 never overwrites valid pixels
            }
            const uint8_t* src = seg.rgb.px(x, y);
            std::copy(src, src + 3, canvas.rgb.px(cx, cy));
            canvas.validity.set(cx, cy);
            if (provenance)
                (*provenance)[static_cast<size_t>(cy) * canvas.rgb.width + cx] = plan_ordinal;
            ++written;
        }
    }
    return written;
}

} // namespace

void paste_segment(GuidanceImage& canvas, const PastePlan& plan, const SemanticMap& map,
                   const SegmentRecord& record) {
    if (!plan.retrieved.matched())
        return;
    if (record.category != plan.category)
        throw Error("paste_segment: record category does not match the plan");
    ResizedSegment seg = resize_record(plan, record);
    paste_phase(canvas, plan, map, seg, Phase::Owner, -1, nullptr);
    paste_phase(canvas, plan, map, seg, Phase::Spill, -1, nullptr);
}

std::vector<RetrievalResult> retrieve_regions(const SegmentDatabase& db,
                                              const std::vector<Region>& regions,
                                              const ComposeOptions& options) {
    std::vector<RetrievalResult> results(regions.size());
    parallel_for(regions.size(), options.workers, [&](size_t i) {
        RetrievalQuery query;
        query.mask = regions[i].mask;
        query.category = regions[i].category;
        query.threshold = options.threshold;
        query.shape_weight = options.shape_weight;
        if (options.mode == Mode::Train && !options.source_image_id.empty())
            query.exclude_source = options.source_image_id;
        results[i] = retrieve_best(db, query);
    });
    return results;
}

GuidanceImage compose_guidance(const SemanticMap& map, const SegmentDatabase& db,
                               const ComposeOptions& options, CompositionTrace* trace) {
    std::vector<Region> regions = decompose_regions(map, options.min_area);
    std::vector<RetrievalResult> results = retrieve_regions(db, regions, options);
    std::vector<PastePlan> plans = plan_composition(map, regions, results);

    GuidanceImage canvas{RgbImage(map.width, map.height), BinaryMask(map.width, map.height)};

    std::vector<ResizedSegment> resized(plans.size());
    parallel_for(plans.size(), options.workers, [&](size_t i) {
        if (plans[i].retrieved.matched())
            resized[i] = resize_record(plans[i], *db.find(plans[i].retrieved.segment_id));
    });

    std::vector<int32_t>* provenance = nullptr;
    if (trace) {
        trace->plans.clear();
        trace->provenance.assign(static_cast<size_t>(map.width) * map.height, -1);
        provenance = &trace->provenance;
        for (const PastePlan& plan : plans)
            trace->plans.push_back({plan.region_index, plan.category, plan.kind, plan.target_bbox,
                                    plan.retrieved, 0, 0});
    }

    // Pass 1: owners. Target masks are disjoint, so order within the pass
    // cannot matter. Pass 2: foreground spills, first writer wins in plan
    // order; owner pixels are already valid and stay untouched.
    for (size_t i = 0; i < plans.size(); ++i) {
        if (!plans[i].retrieved.matched())
            continue;
        uint64_t n = paste_phase(canvas, plans[i], map, resized[i], Phase::Owner,
                                 static_cast<int32_t>(i), provenance);
        if (trace)
            trace->plans[i].owner_pixels = n;
    }
    for (size_t i = 0; i < plans.size(); ++i) {
        if (!plans[i].retrieved.matched())
            continue;
        uint64_t n = paste_phase(canvas, plans[i], map, resized[i], Phase::Spill,
                                 static_cast<int32_t>(i), provenance);
        if (trace)
            trace->plans[i].spill_pixels = n;
    }
    return canvas;
}

} // namespace retguide

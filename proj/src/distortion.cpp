// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "retguide/boundary.hpp"
#include "retguide/lab.hpp"
#include "retguide/parallel.hpp"
#include "retguide/resize.hpp"
#include "retguide/rng.hpp"
#include "retguide/tps.hpp"

namespace retguide {

void DistortionConfig::validate() const {
    if (!(tau_min >= 0.0 && tau_min < tau_max && tau_max <= 1.0) || tau_min <= 0.0)
        throw Error("distortion config: tau range must lie inside (0, 1)");
    if (shift_count < 1 || shift_count > kEdgePointCount)
        throw Error("distortion config: shift_count must be in [1, 10]");
    if (shift_magnitude < 0.0)
        throw Error("distortion config: shift_magnitude must be >= 0");
    if (tps_regularization < 0.0)
        throw Error("distortion config: tps regularization must be >= 0");
}

RgbImage resolution_degrade(const RgbImage& segment, double tau) {
    if (!(tau > 0.5 && tau < 1.0))
        throw Error("resolution_degrade: tau must be in (0.5, 1)");
    int dw = std::max(1, static_cast<int>(std::lround(tau * segment.width)));
    int dh = std::max(1, static_cast<int>(std::lround(tau * segment.height)));
    return resize_bilinear(resize_bilinear(segment, dw, dh), segment.width, segment.height);
}

namespace {

struct DistortedSegment {
    const SegmentRecord* record = nullptr;
    Box domain;      // canvas-space bbox of the distorted crop
    BinaryMask mask; // possibly warped; dimensions of `domain`
    RgbImage rgb;
    Box original;    // canvas-space bbox of the undistorted segment
    const BinaryMask* original_mask = nullptr;
};

DistortedSegment distort_segment(const SegmentRecord& record, const SegmentDatabase& db,
                                 const DistortionConfig& config, uint64_t segment_index) {
    Rng rng = Rng(config.seed).derive(segment_index);

    DistortedSegment out;
    out.record = &record;
    out.original = record.bbox;
    out.original_mask = &record.mask;
    out.domain = record.bbox;
    out.mask = record.mask;
    out.rgb = record.pixels;

    if (config.color_enabled) {
        auto bucket = db.bucket(record.category);
        if (!bucket.empty()) {
            uint64_t pick = bucket[rng.next_below(bucket.size())];
            const SegmentRecord* target = db.find(pick);
            out.rgb = color_transfer(out.rgb, out.mask, target->pixels, target->mask);
        }
        // No same-category segment in the database: color is left alone.
    }

    if (config.shape_enabled) {
        double diagonal = std::hypot(record.bbox.w, record.bbox.h);
        double magnitude = config.shift_magnitude * diagonal;
        try {
            std::vector<Point> source = sample_edge_points(out.mask, kEdgePointCount, rng);
            // Partial Fisher-Yates pick of the points to displace.
            std::vector<int> order(source.size());
            std::iota(order.begin(), order.end(), 0);
            for (int i = 0; i < config.shift_count; ++i) {
                size_t j = i + rng.next_below(order.size() - i);
                std::swap(order[i], order[j]);
            }
            std::vector<Point> target = source;
            for (int i = 0; i < config.shift_count; ++i) {
                target[order[i]].x += rng.next_range(-magnitude, magnitude);
                target[order[i]].y += rng.next_range(-magnitude, magnitude);
            }
            TpsWarp warp = tps_solve(source, target, config.tps_regularization);
            int margin = static_cast<int>(std::ceil(magnitude));
            WarpedSegment warped = tps_apply(warp, out.mask, out.rgb, margin);
            if (warped.mask.popcount() > 0) {
                out.domain = Box{record.bbox.x + warped.bbox.x, record.bbox.y + warped.bbox.y,
                                 warped.bbox.w, warped.bbox.h};
                out.mask = std::move(warped.mask);
                out.rgb = std::move(warped.rgb);
            }
        } catch (const Error&) {
            // Degenerate geometry (boundary shorter than 10 pixels, or
            // exactly collinear samples making the spline singular): the
            // segment keeps its shape.
        }
    }

    if (config.resolution_enabled) {
        double tau = rng.next_open(config.tau_min, config.tau_max);
        out.rgb = resolution_degrade(out.rgb, tau);
    }
    return out;
}

} // namespace

GuidanceImage distort_ground_truth(const RgbImage& image, const SemanticMap& map,
                                   const SegmentDatabase& db, const DistortionConfig& config) {
    config.validate();
    if (image.width != map.width || image.height != map.height)
        throw Error("distort_ground_truth: image and map dimensions differ");

    std::vector<SegmentRecord> records = decompose(image, map, "", config.min_area);
    std::vector<DistortedSegment> distorted(records.size());
    parallel_for(records.size(), config.workers, [&](size_t i) {
        distorted[i] = distort_segment(records[i], db, config, i);
    });

    // Recomposition order mirrors the compositor: background before
    // foreground, larger areas first.
    std::vector<size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        ClassKind ka = map.class_kinds[records[a].category];
        ClassKind kb = map.class_kinds[records[b].category];
        if (ka != kb)
            return ka == ClassKind::Background;
        if (records[a].area != records[b].area)
            return records[a].area > records[b].area;
        return a < b;
    });

    GuidanceImage canvas{RgbImage(map.width, map.height), BinaryMask(map.width, map.height)};

    // Pass 1: pixels that stayed inside their segment's original mask (these
    // regions are disjoint). Pass 2: warped spill, first writer wins.
    for (int pass = 0; pass < 2; ++pass) {
        for (size_t idx : order) {
            const DistortedSegment& seg = distorted[idx];
            for (int y = 0; y < seg.domain.h; ++y) {
                int cy = seg.domain.y + y;
                if (cy < 0 || cy >= map.height)
                    continue;
                for (int x = 0; x < seg.domain.w; ++x) {
                    int cx = seg.domain.x + x;
                    if (cx < 0 || cx >= map.width || !seg.mask.get(x, y))
                        continue;
                    int ox = cx - seg.original.x;
                    int oy = cy - seg.original.y;
                    bool in_original = ox >= 0 && oy >= 0 && ox < seg.original.w &&
                                       oy < seg.original.h && seg.original_mask->get(ox, oy);
                    if (pass == 0 ? !in_original
                                  : (in_original || canvas.validity.get(cx, cy)))
                        continue;
                    const uint8_t* src = seg.rgb.px(x, y);
                    std::copy(src, src + 3, canvas.rgb.px(cx, cy));
                    canvas.validity.set(cx, cy);
                }
            }
        }
    }
    return canvas;
}

} // namespace retguide

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/segment.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <vector>

#include "retguide/resize.hpp"

namespace retguide {

BinaryMask make_signature(const BinaryMask& mask) {
    return resize_nearest(mask, kSignatureSize, kSignatureSize);
}

void SegmentRecord::validate() const {
    if (mask.width() != bbox.w || mask.height() != bbox.h)
        throw Error("segment record: mask does not match bbox dimensions");
    if (pixels.width != bbox.w || pixels.height != bbox.h)
        throw Error("segment record: pixels do not match bbox dimensions");
    if (area == 0 || area != mask.popcount())
        throw Error("segment record: area does not equal mask popcount");
    auto tight = mask.tight_bbox();
    if (!tight || !(*tight == Box{0, 0, bbox.w, bbox.h}))
        throw Error("segment record: bbox is not tight");
    if (signature.width() != kSignatureSize || signature.height() != kSignatureSize)
        throw Error("segment record: signature must be 128x128");
    if (!(signature == make_signature(mask)))
        throw Error("segment record: stored signature does not match mask");
}

namespace {

struct Component {
    uint64_t area = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // inclusive bounds
    std::vector<int> pixels;            // flat indices
};

// 4-connected components of the pixels selected by `in_class`.
std::vector<Component> connected_components(const SemanticMap& map,
                                            const std::vector<bool>& in_class) {
    const int w = map.width;
    const int h = map.height;
    std::vector<bool> visited(in_class.size(), false);
    std::vector<Component> components;
    std::vector<int> stack;

    for (int start = 0; start < w * h; ++start) {
        if (!in_class[start] || visited[start])
            continue;
        Component comp;
        comp.x0 = comp.x1 = start % w;
        comp.y0 = comp.y1 = start / w;
        stack.push_back(start);
        visited[start] = true;
        while (!stack.empty()) {
            int idx = stack.back();
            stack.pop_back();
            int x = idx % w;
            int y = idx / w;
            comp.pixels.push_back(idx);
            ++comp.area;
            comp.x0 = std::min(comp.x0, x);
            comp.x1 = std::max(comp.x1, x);
            comp.y0 = std::min(comp.y0, y);
            comp.y1 = std::max(comp.y1, y);
            const int neighbors[4] = {idx - 1, idx + 1, idx - w, idx + w};
            const bool ok[4] = {x > 0, x + 1 < w, y > 0, y + 1 < h};
            for (int k = 0; k < 4; ++k) {
                int n = neighbors[k];
                if (ok[k] && in_class[n] && !visited[n]) {
                    visited[n] = true;
                    stack.push_back(n);
                }
            }
        }
        components.push_back(std::move(comp));
    }
    return components;
}

Region region_from_pixels(const SemanticMap& map, uint32_t category, ClassKind kind,
                          const std::vector<int>& pixels, int x0, int y0, int x1, int y1) {
    Region region;
    region.category = category;
    region.kind = kind;
    region.bbox = Box{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    region.mask = BinaryMask(region.bbox.w, region.bbox.h);
    for (int idx : pixels)
        region.mask.set(idx % map.width - x0, idx / map.width - y0);
    region.area = pixels.size();
    return region;
}

} // namespace

std::vector<Region> decompose_regions(const SemanticMap& map, int min_area) {
    const int w = map.width;
    const int h = map.height;

    std::vector<uint64_t> class_counts(map.num_classes, 0);
    for (uint16_t l : map.labels)
        ++class_counts[l];

    std::vector<Region> regions;
    std::vector<bool> in_class(static_cast<size_t>(w) * h);

    for (int c = 0; c < map.num_classes; ++c) {
        if (class_counts[c] == 0)
            continue; // zero-area class
        ClassKind kind = map.class_kinds[c];
        for (size_t i = 0; i < in_class.size(); ++i)
            in_class[i] = map.labels[i] == c;

        if (kind == ClassKind::Background) {
            if (map.has_instances()) {
                for (size_t i = 0; i < in_class.size(); ++i) {
                    if (in_class[i] && map.instance_ids[i] != 0) {
                        std::cerr << "warning: instance id on background class " << c
                                  << "; treating as background\n";
                        break;
                    }
                }
            }
            // Keep only the maximal component; ties go to the component whose
            // bbox top-left is smallest in (y, x) order.
            auto components = connected_components(map, in_class);
            const Component* best = nullptr;
            for (const auto& comp : components) {
                if (!best || comp.area > best->area ||
                    (comp.area == best->area &&
                     std::pair{comp.y0, comp.x0} < std::pair{best->y0, best->x0}))
                    best = &comp;
            }
            if (best && best->area >= static_cast<uint64_t>(min_area)) {
                Region r = region_from_pixels(map, static_cast<uint32_t>(c), kind, best->pixels,
                                              best->x0, best->y0, best->x1, best->y1);
                r.region_index = static_cast<int>(regions.size());
                regions.push_back(std::move(r));
            }
            continue;
        }

        // Foreground: one region per instance id. Pixels without an instance
        // id (or maps without an instance raster) fall back to connected
        // components acting as pseudo-instances.
        std::map<uint32_t, Component> instances;
        std::vector<bool> unassigned(in_class.size(), false);
        bool any_unassigned = false;
        for (int idx = 0; idx < w * h; ++idx) {
            if (!in_class[idx])
                continue;
            uint32_t id = map.has_instances() ? map.instance_ids[idx] : 0;
            if (id == 0) {
                unassigned[idx] = true;
                any_unassigned = true;
                continue;
            }
            auto [it, fresh] = instances.try_emplace(id);
            Component& comp = it->second;
            int x = idx % w;
            int y = idx / w;
            if (fresh) {
                comp.x0 = comp.x1 = x;
                comp.y0 = comp.y1 = y;
            }
            comp.pixels.push_back(idx);
            ++comp.area;
            comp.x0 = std::min(comp.x0, x);
            comp.x1 = std::max(comp.x1, x);
            comp.y0 = std::min(comp.y0, y);
            comp.y1 = std::max(comp.y1, y);
        }
        for (const auto& [id, comp] : instances) {
            if (comp.area < static_cast<uint64_t>(min_area))
                continue;
            Region r = region_from_pixels(map, static_cast<uint32_t>(c), kind, comp.pixels,
                                          comp.x0, comp.y0, comp.x1, comp.y1);
            r.region_index = static_cast<int>(regions.size());
            regions.push_back(std::move(r));
        }
        if (any_unassigned) {
            for (const auto& comp : connected_components(map, unassigned)) {
                if (comp.area < static_cast<uint64_t>(min_area))
                    continue;
                Region r = region_from_pixels(map, static_cast<uint32_t>(c), kind, comp.pixels,
                                              comp.x0, comp.y0, comp.x1, comp.y1);
                r.region_index = static_cast<int>(regions.size());
                regions.push_back(std::move(r));
            }
        }
    }
    return regions;
}

std::vector<SegmentRecord> decompose(const RgbImage& image, const SemanticMap& map,
                                     const std::string& image_id, int min_area) {
    if (image.width != map.width || image.height != map.height)
        throw Error("decompose: image and semantic map dimensions differ");

    std::vector<SegmentRecord> records;
    for (Region& region : decompose_regions(map, min_area)) {
        SegmentRecord rec;
        rec.segment_id = static_cast<uint64_t>(region.region_index);
        rec.source_image_id = image_id;
        rec.category = region.category;
        rec.bbox = region.bbox;
        rec.area = region.area;
        rec.pixels = RgbImage(region.bbox.w, region.bbox.h);
        for (int y = 0; y < region.bbox.h; ++y) {
            for (int x = 0; x < region.bbox.w; ++x) {
                if (!region.mask.get(x, y))
                    continue; // outside the segment: stays zero
                const uint8_t* src = image.px(region.bbox.x + x, region.bbox.y + y);
                std::copy(src, src + 3, rec.pixels.px(x, y));
            }
        }
        rec.signature = make_signature(region.mask);
        rec.mask = std::move(region.mask);
        rec.validate();
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace retguide

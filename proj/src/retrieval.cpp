// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/retrieval.hpp"

#include <algorithm>

namespace retguide {

int scale_consistency(uint64_t area_i, uint64_t area_j) {
    if (area_i == 0 || area_j == 0)
        throw Error("scale_consistency: areas must be >= 1");
    double t = static_cast<double>(std::min(area_i, area_j)) /
               static_cast<double>(std::max(area_i, area_j));
    return t >= 0.5 ? 0 : 1;
}

double shape_nonsimilarity(const BinaryMask& sig_i, const BinaryMask& sig_j) {
    uint64_t pop_i = sig_i.popcount();
    uint64_t pop_j = sig_j.popcount();
    if (pop_i == 0 || pop_j == 0)
        throw Error("shape_nonsimilarity: signatures must be nonempty");
    // For binary rasters the sum square difference is the XOR popcount.
    uint64_t ssd = xor_popcount(sig_i, sig_j);
    return static_cast<double>(ssd) / static_cast<double>(std::max(pop_i, pop_j));
}

GeometricScore geometric_score(const BinaryMask& mask_i, uint64_t area_i,
                               const BinaryMask& mask_j, uint64_t area_j, double shape_weight) {
    GeometricScore s;
    s.shape_weight = shape_weight;
    s.scale_term = scale_consistency(area_i, area_j);
    s.shape_term = shape_nonsimilarity(make_signature(mask_i), make_signature(mask_j));
    s.total = s.scale_term + shape_weight * s.shape_term;
    return s;
}

namespace {

bool excluded(const RetrievalQuery& query, const SegmentRecord& rec) {
    if (query.exclude_source && rec.source_image_id == *query.exclude_source)
        return true;
    if (query.exclude_segment && rec.segment_id == *query.exclude_segment)
        return true;
    return false;
}

RetrievalResult finalize(const RetrievalQuery& query, uint64_t best_id,
                         const std::optional<GeometricScore>& best) {
    if (!best || (query.threshold && best->total > *query.threshold))
        return {};
    return {best_id, best};
}

} // namespace

RetrievalResult retrieve_best(const SegmentDatabase& db, const RetrievalQuery& query) {
    uint64_t query_area = query.mask.popcount();
    if (query_area == 0)
        throw Error("retrieve_best: query mask is empty");
    BinaryMask query_sig = make_signature(query.mask);
    uint64_t query_pop = query_sig.popcount();

    uint64_t best_id = kNoMatch;
    std::optional<GeometricScore> best;
    for (uint64_t id : db.bucket(query.category)) {
        const SegmentRecord* rec = db.find(id);
        if (excluded(query, *rec))
            continue;
        GeometricScore s;
        s.shape_weight = query.shape_weight;
        s.scale_term = scale_consistency(query_area, rec->area);
        // Ids scan in ascending order and ties keep the earlier record, so a
        // candidate whose scale term alone reaches the incumbent cannot win.
        if (best && s.scale_term >= best->total)
            continue;
        uint64_t ssd = xor_popcount(query_sig, rec->signature);
        s.shape_term =
            static_cast<double>(ssd) / static_cast<double>(std::max(query_pop,
                                                                    rec->signature.popcount()));
        s.total = s.scale_term + query.shape_weight * s.shape_term;
        if (!best || s.total < best->total) {
            best = s;
            best_id = id;
        }
    }
    return finalize(query, best_id, best);
}

RetrievalResult retrieve_best_bruteforce(const SegmentDatabase& db, const RetrievalQuery& query) {
    uint64_t query_area = query.mask.popcount();
    if (query_area == 0)
        throw Error("retrieve_best_bruteforce: query mask is empty");

    uint64_t best_id = kNoMatch;
    std::optional<GeometricScore> best;
    for (const SegmentRecord& rec : db.records()) {
        if (rec.category != query.category || excluded(query, rec))
            continue;
        GeometricScore s =
            geometric_score(query.mask, query_area, rec.mask, rec.area, query.shape_weight);
        if (!best || s.total < best->total) {
            best = s;
            best_id = rec.segment_id;
        }
    }
    return finalize(query, best_id, best);
}

} // namespace retguide

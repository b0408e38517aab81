// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <optional>
#include <string>

#include "retguide/database.hpp"

namespace retguide {

// Geometric consistency between two segment masks; lower total means more
// similar. scale_term is binary (area ratio under 0.5 scores 1), shape_term
// is the normalized SSD of the 128x128 signatures.
struct GeometricScore {
    double scale_term = 0.0;
    double shape_term = 0.0;
    double total = 0.0;
    double shape_weight = kDefaultShapeWeight;
};

struct RetrievalQuery {
    BinaryMask mask; // cropped query segment mask, nonempty
    uint32_t category = 0;
    std::optional<std::string> exclude_source;  // training-mode self-exclusion
    std::optional<uint64_t> exclude_segment;    // optional per-segment exclusion
    std::optional<double> threshold;            // max acceptable total score
    double shape_weight = kDefaultShapeWeight;
};

struct RetrievalResult {
    uint64_t segment_id = kNoMatch;
    std::optional<GeometricScore> score;

    bool matched() const { return segment_id != kNoMatch; }
};

// 0 when the smaller area is at least half the larger, else 1.
int scale_consistency(uint64_t area_i, uint64_t area_j);

// popcount(sig_i XOR sig_j) / max(popcount(sig_i), popcount(sig_j)).
// Signatures must be nonempty 128x128 masks.
double shape_nonsimilarity(const BinaryMask& sig_i, const BinaryMask& sig_j);

// Combines both terms; signatures are computed from the given cropped masks.
GeometricScore geometric_score(const BinaryMask& mask_i, uint64_t area_i,
                               const BinaryMask& mask_j, uint64_t area_j,
                               double shape_weight = kDefaultShapeWeight);

// Scans the query's category bucket using precomputed bit-packed signatures.
// Ties break toward the smallest segment_id; a best score above the threshold
// (or an empty/fully excluded bucket) yields NO_MATCH.
RetrievalResult retrieve_best(const SegmentDatabase& db, const RetrievalQuery& query);

// Oracle twin of retrieve_best: an unoptimized pass over all records that
// recomputes signatures from the stored masks. Same contract, same results.
RetrievalResult retrieve_best_bruteforce(const SegmentDatabase& db, const RetrievalQuery& query);

} // namespace retguide

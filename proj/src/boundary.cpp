// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/boundary.hpp"

#include <cmath>

namespace retguide {

namespace {

// Moore neighborhood in clockwise order (image coordinates, y down),
// starting at west.
constexpr int kDx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

} // namespace

std::vector<Point> trace_boundary(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();

    int sx = -1, sy = -1;
    for (int y = 0; y < h && sx < 0; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.get(x, y)) {
                sx = x;
                sy = y;
                break;
            }
    if (sx < 0)
        throw Error("trace_boundary: empty mask");

    auto inside = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h && mask.get(x, y);
    };

    std::vector<Point> contour;
    int cx = sx, cy = sy;
    // The start pixel is topmost-leftmost, so its west neighbor is empty and
    // the first clockwise scan can begin there.
    int search = 0;
    int first_move = -1;
    size_t cap = static_cast<size_t>(w) * h * 8 + 16;
    while (contour.size() < cap) {
        int found = -1;
        for (int i = 0; i < 8; ++i) {
            int d = (search + i) % 8;
            if (inside(cx + kDx[d], cy + kDy[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) {
            // Isolated pixel: degenerate single-point contour.
            contour.push_back({static_cast<double>(sx), static_cast<double>(sy)});
            return contour;
        }
        if (cx == sx && cy == sy) {
            if (first_move < 0)
                first_move = found;
            else if (found == first_move)
                return contour; // re-entered the start with the original exit: closed
        }
        contour.push_back({static_cast<double>(cx), static_cast<double>(cy)});
        cx += kDx[found];
        cy += kDy[found];
        // Resume scanning just past the backtrack direction.
        search = (found + 5) % 8;
    }
    throw Error("trace_boundary: contour did not close");
}

std::vector<Point> sample_edge_points(const BinaryMask& mask, int count, Rng& rng) {
    if (count < 1)
        throw Error("sample_edge_points: count must be >= 1");
    std::vector<Point> contour = trace_boundary(mask);
    if (static_cast<int>(contour.size()) < count)
        throw Error("sample_edge_points: boundary has " + std::to_string(contour.size()) +
                    " pixels, need at least " + std::to_string(count));

    size_t n = contour.size();
    std::vector<double> cumulative(n + 1, 0.0);
    for (size_t i = 0; i < n; ++i) {
        const Point& p = contour[i];
        const Point& q = contour[(i + 1) % n];
        cumulative[i + 1] = cumulative[i] + std::hypot(q.x - p.x, q.y - p.y);
    }
    double total = cumulative[n];

    double offset = rng.next_double() * total;
    std::vector<bool> used(n, false);
    std::vector<Point> points;
    points.reserve(count);
    for (int k = 0; k < count; ++k) {
        double s = std::fmod(offset + k * total / count, total);
        size_t idx = 0;
        while (idx + 1 < n && cumulative[idx + 1] <= s)
            ++idx;
        // Distinct pixels are required to anchor a warp; on collision take
        // the next free contour pixel.
        while (used[idx])
            idx = (idx + 1) % n;
        used[idx] = true;
        points.push_back(contour[idx]);
    }
    return points;
}

} // namespace retguide

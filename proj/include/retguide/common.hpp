// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace retguide {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Axis-aligned pixel rectangle, top-left anchored.
struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const Box&) const = default;
    int right() const { return x + w; }
    int bottom() const { return y + h; }
};

enum class ClassKind : uint8_t { Background = 0, Foreground = 1 };

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Sentinel for "no segment matched"; absence is in-band, not an error.
inline constexpr uint64_t kNoMatch = ~uint64_t{0};

inline constexpr int kSignatureSize = 128;
inline constexpr int kDefaultMinArea = 16;
inline constexpr double kDefaultThreshold = 0.15;
inline constexpr double kDefaultShapeWeight = 1.0;

} // namespace retguide

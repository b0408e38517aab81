// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>

namespace retguide {

// xoshiro256++ seeded through splitmix64. The generator is fixed by name so
// that a seed yields the same sample sequence on every platform and build.
// One instance per task; derived streams use seed ^ task_index.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double next_double();
    // Uniform in the open interval (lo, hi).
    double next_open(double lo, double hi);
    // Uniform in [lo, hi).
    double next_range(double lo, double hi);
    // Uniform in [0, bound); bound must be nonzero.
    uint64_t next_below(uint64_t bound);

    Rng derive(uint64_t index) const { return Rng(seed_ ^ index); }
    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    uint64_t s_[4];
};

} // namespace retguide

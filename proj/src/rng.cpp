// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/rng.hpp"

#include <bit>

namespace retguide {

namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
    uint64_t sm = seed;
    for (auto& s : s_)
        s = splitmix64(sm);
}

uint64_t Rng::next_u64() {
    uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_open(double lo, double hi) {
    double u;
    do {
        u = next_double();
    } while (u == 0.0);
    return lo + (hi - lo) * u;
}

double Rng::next_range(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

uint64_t Rng::next_below(uint64_t bound) {
    // Multiply-shift mapping; fixed and platform independent.
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * bound) >> 64);
}

} // namespace retguide

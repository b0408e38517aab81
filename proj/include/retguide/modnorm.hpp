// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "retguide/image.hpp"

namespace retguide {

// N x C x H x W activation grid, double precision, row-major in (n, c, y, x).
struct FeatureBlock {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> values;

    FeatureBlock() = default;
    FeatureBlock(int n, int c, int h, int w, double fill = 0.0);

    size_t index(int ni, int ci, int yi, int xi) const {
        return ((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi;
    }
    double& at(int ni, int ci, int yi, int xi) { return values[index(ni, ci, yi, xi)]; }
    double at(int ni, int ci, int yi, int xi) const { return values[index(ni, ci, yi, xi)]; }
    bool same_dims(const FeatureBlock& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

// Spatially varying modulation parameters, one (gamma, beta) pair per
// (channel, y, x) site. Provider networks are out of scope; any source works.
struct ParamMaps {
    int c = 0, h = 0, w = 0;
    std::vector<double> gamma;
    std::vector<double> beta;

    ParamMaps() = default;
    ParamMaps(int c, int h, int w, double gamma_fill = 1.0, double beta_fill = 0.0);

    size_t index(int ci, int yi, int xi) const {
        return (static_cast<size_t>(ci) * h + yi) * w + xi;
    }
};

// Mixing scalars for the semantic/retrieval parameter branches; both must lie
// strictly inside (0, 1).
struct BlendWeights {
    double alpha_gamma = 0.5;
    double alpha_beta = 0.5;
};

// Per-pixel class probabilities (H x W x C) plus class balancing weights.
struct ClassProbMap {
    int h = 0, w = 0, c = 0;
    std::vector<double> probs;         // h*w*c, pixel-major
    std::vector<double> class_weights; // c entries, >= 0

    size_t index(int yi, int xi, int ci) const {
        return (static_cast<size_t>(yi) * w + xi) * c + ci;
    }
    void validate() const;
};

inline constexpr double kNormEpsilon = 1e-5;

struct ChannelMoments {
    std::vector<double> mu;    // per channel
    std::vector<double> sigma; // sqrt(E[x^2] - mu^2 + eps)
};

// Batch statistics over (n, y, x) per channel.
ChannelMoments batch_stats(const FeatureBlock& block);

// out = gamma[c,y,x] * (h - mu_c) / sigma_c + beta[c,y,x] with batch stats
// taken from the input block.
FeatureBlock resail_modulate(const FeatureBlock& block, const ParamMaps& params);

// Elementwise convex mix of the two parameter branches:
// gamma = a*gamma_s + (1-a)*gamma_r, likewise beta.
ParamMaps blend_params(const ParamMaps& semantic, const ParamMaps& retrieval,
                       const BlendWeights& weights);

// Instance-statistics modulation toward an injected style mean/std.
FeatureBlock adain_modulate(const FeatureBlock& block, std::span<const double> style_mu,
                            std::span<const double> style_sigma);

// Class-balanced cross entropy between the map's one-hot labels and the
// probability map, averaged over pixels. Probabilities are clamped at 1e-12.
double segmentation_loss(const SemanticMap& map, const ClassProbMap& probs);

// Default class weights: inverse pixel frequency over the map, normalized to
// mean 1 across the classes present; absent classes get weight 0.
std::vector<double> inverse_frequency_weights(const SemanticMap& map);

// Deterministic pseudo-random parameter maps for fixtures and verification.
ParamMaps synthetic_param_maps(int c, int h, int w, uint64_t seed);

// Simple binary tensor container: magic + dims + 64-bit float payload.
void save_tensor(const std::filesystem::path& path, const FeatureBlock& block);
FeatureBlock load_tensor(const std::filesystem::path& path);

} // namespace retguide

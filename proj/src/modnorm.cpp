// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/modnorm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "retguide/rng.hpp"

namespace retguide {

FeatureBlock::FeatureBlock(int n_, int c_, int h_, int w_, double fill)
    : n(n_), c(c_), h(h_), w(w_) {
    if (n < 1 || c < 1 || h < 1 || w < 1)
        throw Error("FeatureBlock dimensions must be >= 1");
    values.assign(static_cast<size_t>(n) * c * h * w, fill);
}

ParamMaps::ParamMaps(int c_, int h_, int w_, double gamma_fill, double beta_fill)
    : c(c_), h(h_), w(w_) {
    if (c < 1 || h < 1 || w < 1)
        throw Error("ParamMaps dimensions must be >= 1");
    gamma.assign(static_cast<size_t>(c) * h * w, gamma_fill);
    beta.assign(static_cast<size_t>(c) * h * w, beta_fill);
}

void ClassProbMap::validate() const {
    if (h < 1 || w < 1 || c < 1 || probs.size() != static_cast<size_t>(h) * w * c)
        throw Error("ClassProbMap: malformed dimensions");
    if (class_weights.size() != static_cast<size_t>(c))
        throw Error("ClassProbMap: class_weights must have C entries");
    for (double wgt : class_weights)
        if (!(wgt >= 0.0))
            throw Error("ClassProbMap: class weights must be >= 0");
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            for (int k = 0; k < c; ++k) {
                double p = probs[index(y, x, k)];
                // Zero is tolerated; the loss clamps it before the log.
                if (!(p >= 0.0))
                    throw Error("ClassProbMap: probabilities must be >= 0");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-6)
                throw Error("ClassProbMap: per-pixel probabilities must sum to 1");
        }
    }
}

ChannelMoments batch_stats(const FeatureBlock& block) {
    ChannelMoments m;
    m.mu.assign(block.c, 0.0);
    m.sigma.assign(block.c, 0.0);
    const double count = static_cast<double>(block.n) * block.h * block.w;
    for (int ci = 0; ci < block.c; ++ci) {
        double sum = 0.0;
        double sq = 0.0;
        for (int ni = 0; ni < block.n; ++ni) {
            const double* p = block.values.data() + block.index(ni, ci, 0, 0);
            for (int i = 0; i < block.h * block.w; ++i) {
                sum += p[i];
                sq += p[i] * p[i];
            }
        }
        double mu = sum / count;
        m.mu[ci] = mu;
        m.sigma[ci] = std::sqrt(sq / count - mu * mu + kNormEpsilon);
    }
    return m;
}

FeatureBlock resail_modulate(const FeatureBlock& block, const ParamMaps& params) {
    if (params.c != block.c || params.h != block.h || params.w != block.w)
        throw Error("resail_modulate: parameter maps do not match the block");
    ChannelMoments m = batch_stats(block);
    FeatureBlock out(block.n, block.c, block.h, block.w);
    for (int ni = 0; ni < block.n; ++ni) {
        for (int ci = 0; ci < block.c; ++ci) {
            const double mu = m.mu[ci];
            const double sigma = m.sigma[ci];
            for (int yi = 0; yi < block.h; ++yi) {
                for (int xi = 0; xi < block.w; ++xi) {
                    size_t pi = params.index(ci, yi, xi);
                    out.at(ni, ci, yi, xi) =
                        params.gamma[pi] * (block.at(ni, ci, yi, xi) - mu) / sigma +
                        params.beta[pi];
                }
            }
        }
    }
    return out;
}

ParamMaps blend_params(const ParamMaps& semantic, const ParamMaps& retrieval,
                       const BlendWeights& weights) {
    if (semantic.c != retrieval.c || semantic.h != retrieval.h || semantic.w != retrieval.w)
        throw Error("blend_params: branch dimensions differ");
    if (!(weights.alpha_gamma > 0.0 && weights.alpha_gamma < 1.0) ||
        !(weights.alpha_beta > 0.0 && weights.alpha_beta < 1.0))
        throw Error("blend_params: blend weights must lie strictly inside (0, 1)");
    ParamMaps out(semantic.c, semantic.h, semantic.w);
    for (size_t i = 0; i < out.gamma.size(); ++i) {
        // lerp form keeps the equal-branch fixed point bitwise exact.
        out.gamma[i] =
            retrieval.gamma[i] + weights.alpha_gamma * (semantic.gamma[i] - retrieval.gamma[i]);
        out.beta[i] =
            retrieval.beta[i] + weights.alpha_beta * (semantic.beta[i] - retrieval.beta[i]);
    }
    return out;
}

FeatureBlock adain_modulate(const FeatureBlock& block, std::span<const double> style_mu,
                            std::span<const double> style_sigma) {
    if (style_mu.size() != static_cast<size_t>(block.c) || style_sigma.size() != style_mu.size())
        throw Error("adain_modulate: style vectors must have C entries");
    for (double s : style_sigma)
        if (!(s >= 0.0))
            throw Error("adain_modulate: style sigma must be >= 0");

    FeatureBlock out(block.n, block.c, block.h, block.w);
    const double count = static_cast<double>(block.h) * block.w;
    for (int ni = 0; ni < block.n; ++ni) {
        for (int ci = 0; ci < block.c; ++ci) {
            const double* p = block.values.data() + block.index(ni, ci, 0, 0);
            double sum = 0.0, sq = 0.0;
            for (int i = 0; i < block.h * block.w; ++i) {
                sum += p[i];
                sq += p[i] * p[i];
            }
            double mu = sum / count;
            double sigma = std::sqrt(sq / count - mu * mu + kNormEpsilon);
            double* q = out.values.data() + out.index(ni, ci, 0, 0);
            for (int i = 0; i < block.h * block.w; ++i)
                q[i] = style_sigma[ci] * (p[i] - mu) / sigma + style_mu[ci];
        }
    }
    return out;
}

double segmentation_loss(const SemanticMap& map, const ClassProbMap& probs) {
    probs.validate();
    if (probs.h != map.height || probs.w != map.width || probs.c != map.num_classes)
        throw Error("segmentation_loss: probability map does not match the semantic map");
    double acc = 0.0;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            uint16_t label = map.label_at(x, y);
            double p = std::max(probs.probs[probs.index(y, x, label)], 1e-12);
            acc += probs.class_weights[label] * std::log(p);
        }
    }
    return -acc / (static_cast<double>(map.height) * map.width);
}

std::vector<double> inverse_frequency_weights(const SemanticMap& map) {
    std::vector<uint64_t> counts(map.num_classes, 0);
    for (uint16_t l : map.labels)
        ++counts[l];
    std::vector<double> weights(map.num_classes, 0.0);
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < map.num_classes; ++c) {
        if (counts[c] == 0)
            continue;
        weights[c] = 1.0 / static_cast<double>(counts[c]);
        sum += weights[c];
        ++present;
    }
    if (present == 0)
        return weights;
    double scale = static_cast<double>(present) / sum;
    for (double& w : weights)
        w *= scale;
    return weights;
}

ParamMaps synthetic_param_maps(int c, int h, int w, uint64_t seed) {
    ParamMaps maps(c, h, w);
    Rng rng(seed);
    for (size_t i = 0; i < maps.gamma.size(); ++i)
        maps.gamma[i] = rng.next_range(0.5, 1.5);
    for (size_t i = 0; i < maps.beta.size(); ++i)
        maps.beta[i] = rng.next_range(-1.0, 1.0);
    return maps;
}

namespace {
constexpr char kTensorMagic[8] = {'R', 'G', 'T', 'E', 'N', 'S', '0', '\0'};
}

void save_tensor(const std::filesystem::path& path, const FeatureBlock& block) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write tensor " + path.string());
    out.write(kTensorMagic, 8);
    uint32_t dims[4] = {static_cast<uint32_t>(block.n), static_cast<uint32_t>(block.c),
                        static_cast<uint32_t>(block.h), static_cast<uint32_t>(block.w)};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(block.values.data()),
              static_cast<std::streamsize>(block.values.size() * sizeof(double)));
    if (!out)
        throw Error("write failed for " + path.string());
}

FeatureBlock load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open tensor " + path.string());
    char magic[8];
    uint32_t dims[4];
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || std::memcmp(magic, kTensorMagic, 8) != 0)
        throw Error("not a tensor file: " + path.string());
    FeatureBlock block(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                       static_cast<int>(dims[2]), static_cast<int>(dims[3]));
    in.read(reinterpret_cast<char*>(block.values.data()),
            static_cast<std::streamsize>(block.values.size() * sizeof(double)));
    if (!in)
        throw Error("tensor file truncated: " + path.string());
    for (double v : block.values)
        if (!std::isfinite(v))
            throw Error("tensor file contains non-finite values: " + path.string());
    return block;
}

} // namespace retguide

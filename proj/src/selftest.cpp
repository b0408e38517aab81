// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "retguide/boundary.hpp"
#include "retguide/lab.hpp"
#include "retguide/modnorm.hpp"
#include "retguide/png_io.hpp"
#include "retguide/resize.hpp"
#include "retguide/rng.hpp"
#include "retguide/tps.hpp"

namespace retguide {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Synthetic shapes

enum class ShapeFamily { Ellipse = 0, Diamond = 1, HalfEllipse = 2, NotchedRect = 3 };

bool shape_hit(ShapeFamily family, int x, int y, int w, int h) {
    double cx = (w - 1) / 2.0;
    double cy = (h - 1) / 2.0;
    double nx = (x - cx) / (w / 2.0);
    double ny = (y - cy) / (h / 2.0);
    switch (family) {
    case ShapeFamily::Ellipse:
        return nx * nx + ny * ny <= 1.0;
    case ShapeFamily::Diamond:
        return std::abs(nx) + std::abs(ny) <= 1.0;
    case ShapeFamily::HalfEllipse:
        return y >= cy && nx * nx + ny * ny <= 1.0;
    case ShapeFamily::NotchedRect:
        // Rectangle with the upper-right ninth removed.
        return !(x > 2 * w / 3 && y < h / 3);
    }
    return false;
}

BinaryMask raster_shape(ShapeFamily family, int w, int h) {
    BinaryMask mask(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (shape_hit(family, x, y, w, h))
                mask.set(x, y);
    auto box = mask.tight_bbox();
    if (!box)
        throw Error("raster_shape produced an empty mask");
    return mask.crop(*box);
}

RgbImage textured_fill(const BinaryMask& mask, uint8_t r, uint8_t g, uint8_t b) {
    RgbImage img(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.get(x, y))
                continue;
            uint8_t* px = img.px(x, y);
            int wave = (x * 7 + y * 3) % 23;
            px[0] = static_cast<uint8_t>(std::clamp(r + wave, 0, 255));
            px[1] = static_cast<uint8_t>(std::clamp(g + wave / 2, 0, 255));
            px[2] = static_cast<uint8_t>(std::clamp(b + wave / 3, 0, 255));
        }
    }
    return img;
}

SegmentRecord make_record(uint64_t id, const std::string& source, uint32_t category,
                          const BinaryMask& mask, const Box& bbox, const RgbImage& pixels) {
    SegmentRecord rec;
    rec.segment_id = id;
    rec.source_image_id = source;
    rec.category = category;
    rec.bbox = bbox;
    rec.mask = mask;
    rec.pixels = pixels;
    rec.area = mask.popcount();
    rec.signature = make_signature(mask);
    return rec;
}

BinaryMask full_signature() {
    BinaryMask sig(kSignatureSize, kSignatureSize);
    for (int y = 0; y < kSignatureSize; ++y)
        for (int x = 0; x < kSignatureSize; ++x)
            sig.set(x, y);
    return sig;
}

BinaryMask column_signature(int x0, int x1) {
    BinaryMask sig(kSignatureSize, kSignatureSize);
    for (int y = 0; y < kSignatureSize; ++y)
        for (int x = x0; x < x1; ++x)
            sig.set(x, y);
    return sig;
}

// ---------------------------------------------------------------------------
// Check plumbing

using CheckFn = std::function<bool(std::string&)>;

CheckResult timed_check(const std::string& name, const CheckFn& fn) {
    CheckResult result;
    result.name = name;
    auto start = std::chrono::steady_clock::now();
    try {
        std::string detail;
        result.passed = fn(detail);
        result.detail = detail;
    } catch (const std::exception& e) {
        result.passed = false;
        result.detail = std::string("exception: ") + e.what();
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

bool nearly(double a, double b, double tol) {
    return std::abs(a - b) <= tol;
}

std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void strip_timing_fields(json& j) {
    if (j.is_object()) {
        j.erase("timing_ms");
        j.erase("wall_time_ms");
        for (auto& [key, value] : j.items())
            strip_timing_fields(value);
    } else if (j.is_array()) {
        for (auto& value : j)
            strip_timing_fields(value);
    }
}

SegmentDatabase build_toy_db(const fs::path& root) {
    DatasetConfig config = DatasetConfig::load(root / "dataset.json");
    std::vector<DatasetEntry> entries = load_dataset(root);
    return build_database(entries, config, kDefaultMinArea, 2);
}

} // namespace

// ---------------------------------------------------------------------------
// Toy dataset

void write_toy_dataset(const fs::path& root, int image_count, uint64_t seed) {
    if (image_count < 1)
        throw Error("write_toy_dataset: image_count must be >= 1");
    fs::create_directories(root / "images");
    fs::create_directories(root / "labels");
    fs::create_directories(root / "instances");

    const int width = 128;
    const int height = 96;
    Rng rng(seed);

    for (int i = 0; i < image_count; ++i) {
        RgbImage image(width, height);
        std::vector<uint16_t> labels(static_cast<size_t>(width) * height, 1); // ground
        std::vector<uint16_t> instances(labels.size(), 0);

        int horizon = 40 + 4 * (i % 5);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                uint8_t* px = image.px(x, y);
                if (y < horizon) {
                    labels[static_cast<size_t>(y) * width + x] = 0; // sky
                    // Sky texture depends on x only and is shared by every
                    // image: full-rectangle sky masks all carry the same
                    // shape signature, so cross-image retrieval ties are
                    // legitimate and the pasted pixels must still agree even
                    // after a vertical stretch.
                    px[0] = static_cast<uint8_t>(120 + (x * 5) % 40);
                    px[1] = static_cast<uint8_t>(160 + (x * 3) % 30);
                    px[2] = static_cast<uint8_t>(200 + x % 40);
                } else {
                    px[0] = static_cast<uint8_t>(90 + 25 * (i % 5) + (x * 7 + y * 3) % 17);
                    px[1] = static_cast<uint8_t>(70 + 15 * (i % 5) + (x * 5 + y) % 13);
                    px[2] = static_cast<uint8_t>(50 + 10 * (i % 5) + (x + y) % 11);
                }
            }
        }

        // Two foreground objects with per-image shape families and sizes:
        // unique shapes within each category for up to 12 images.
        struct Placement {
            uint32_t category;
            uint32_t instance;
            int cx, cy, w, h;
            ShapeFamily family;
            uint8_t r, g, b;
        };
        int jx = static_cast<int>(rng.next_below(5)) - 2;
        int jy = static_cast<int>(rng.next_below(5)) - 2;
        Placement placements[2] = {
            {2, 1, 34 + jx, 70 + jy, 26 + 4 * (i % 4), 16 + 2 * (i % 4),
             static_cast<ShapeFamily>((2 + i) % 3), static_cast<uint8_t>(200 - 25 * (i % 5)),
             static_cast<uint8_t>(40 + 35 * (i % 5)), 60},
            {3, 2, 92 - jx, 72 - jy, 30 + 4 * (i % 4), 18 + 2 * (i % 4),
             static_cast<ShapeFamily>(i % 3), 50, static_cast<uint8_t>(80 + 30 * (i % 5)),
             static_cast<uint8_t>(220 - 25 * (i % 5))},
        };
        for (const Placement& p : placements) {
            for (int y = 0; y < p.h; ++y) {
                for (int x = 0; x < p.w; ++x) {
                    if (!shape_hit(p.family, x, y, p.w, p.h))
                        continue;
                    int ix = p.cx - p.w / 2 + x;
                    int iy = p.cy - p.h / 2 + y;
                    if (ix < 0 || ix >= width || iy < 0 || iy >= height)
                        continue;
                    size_t idx = static_cast<size_t>(iy) * width + ix;
                    labels[idx] = static_cast<uint16_t>(p.category);
                    instances[idx] = p.instance;
                    uint8_t* px = image.px(ix, iy);
                    int wave = (x * 11 + y * 5) % 19;
                    px[0] = static_cast<uint8_t>(std::clamp(p.r + wave, 0, 255));
                    px[1] = static_cast<uint8_t>(std::clamp(p.g + wave / 2, 0, 255));
                    px[2] = static_cast<uint8_t>(std::clamp(p.b + wave / 3, 0, 255));
                }
            }
        }

        std::string id = "img" + std::to_string(i);
        write_rgb_png(root / "images" / (id + ".png"), image);
        std::vector<uint8_t> labels8(labels.begin(), labels.end());
        write_gray8_png(root / "labels" / (id + ".png"), labels8, width, height);
        std::vector<uint16_t> inst16(instances.begin(), instances.end());
        write_gray16_png(root / "instances" / (id + ".png"), inst16, width, height);
    }

    std::ofstream cfg(root / "dataset.json", std::ios::trunc);
    cfg << json{{"num_classes", 4},
                {"class_kinds", {"background", "background", "foreground", "foreground"}},
                {"class_names", {"sky", "ground", "disc", "block"}}}
               .dump(2)
        << "\n";
}

SegmentDatabase make_synthetic_database(size_t record_count, int categories, uint64_t seed) {
    if (record_count == 0 || categories < 1)
        throw Error("make_synthetic_database: need records and categories");
    Rng rng(seed);
    std::vector<SegmentRecord> records;
    records.reserve(record_count);
    for (size_t i = 0; i < record_count; ++i) {
        auto family = static_cast<ShapeFamily>(rng.next_below(4));
        int w = 8 + static_cast<int>(rng.next_below(80));
        int h = 8 + static_cast<int>(rng.next_below(80));
        BinaryMask mask = raster_shape(family, w, h);
        Box bbox{static_cast<int>(rng.next_below(128)), static_cast<int>(rng.next_below(128)),
                 mask.width(), mask.height()};
        RgbImage pixels = textured_fill(mask, static_cast<uint8_t>(40 + rng.next_below(180)),
                                        static_cast<uint8_t>(40 + rng.next_below(180)),
                                        static_cast<uint8_t>(40 + rng.next_below(180)));
        uint32_t category = static_cast<uint32_t>(i % categories);
        std::string source = "syn_" + std::to_string(i / 4);
        records.push_back(make_record(i + 1, source, category, mask, bbox, pixels));
    }

    DatabaseMeta meta;
    meta.version_major = kDbVersionMajor;
    meta.version_minor = kDbVersionMinor;
    meta.config.num_classes = categories;
    meta.config.class_kinds.assign(categories, ClassKind::Foreground);
    meta.config_hash = meta.config.hash();
    return SegmentDatabase(std::move(records), std::move(meta));
}

// ---------------------------------------------------------------------------
// Modulation checks

std::vector<CheckResult> run_modnorm_checks(uint64_t seed) {
    std::vector<CheckResult> results;

    results.push_back(timed_check("batch-stats", [&](std::string& detail) {
        FeatureBlock two(2, 1, 1, 1);
        two.at(0, 0, 0, 0) = 1.0;
        two.at(1, 0, 0, 0) = 3.0;
        ChannelMoments m = batch_stats(two);
        if (m.mu[0] != 2.0 || m.sigma[0] != std::sqrt(1.0 + kNormEpsilon)) {
            detail = "two-point fixture mismatch";
            return false;
        }
        FeatureBlock constant(2, 1, 3, 3, 7.5);
        ChannelMoments cm = batch_stats(constant);
        if (!nearly(cm.mu[0], 7.5, 1e-12) || !nearly(cm.sigma[0], std::sqrt(kNormEpsilon), 1e-9)) {
            detail = "constant-channel guard mismatch";
            return false;
        }
        Rng rng(seed);
        FeatureBlock block(2, 3, 4, 4);
        for (double& v : block.values)
            v = rng.next_range(-2.0, 2.0);
        ChannelMoments actual = batch_stats(block);
        for (int c = 0; c < block.c; ++c) {
            // Independent two-pass oracle.
            double sum = 0.0;
            int count = block.n * block.h * block.w;
            for (int n = 0; n < block.n; ++n)
                for (int y = 0; y < block.h; ++y)
                    for (int x = 0; x < block.w; ++x)
                        sum += block.at(n, c, y, x);
            double mean = sum / count;
            double dev = 0.0;
            for (int n = 0; n < block.n; ++n)
                for (int y = 0; y < block.h; ++y)
                    for (int x = 0; x < block.w; ++x) {
                        double d = block.at(n, c, y, x) - mean;
                        dev += d * d;
                    }
            double sigma = std::sqrt(dev / count + kNormEpsilon);
            if (!nearly(actual.mu[c], mean, 1e-6) || !nearly(actual.sigma[c], sigma, 1e-6)) {
                detail = "two-pass oracle disagreement";
                return false;
            }
        }
        return true;
    }));

    results.push_back(timed_check("identity-modulation", [&](std::string& detail) {
        Rng rng(seed ^ 1);
        FeatureBlock block(3, 4, 6, 5);
        for (double& v : block.values)
            v = rng.next_range(0.0, 2.0);
        FeatureBlock normalized = resail_modulate(block, ParamMaps(4, 6, 5, 1.0, 0.0));
        ChannelMoments m = batch_stats(normalized);
        for (int c = 0; c < 4; ++c) {
            // sigma includes the epsilon under the root, hence the asymmetric
            // tolerance on the unit-std side.
            if (std::abs(m.mu[c]) >= 1e-5 || std::abs(m.sigma[c] - 1.0) >= 1e-3) {
                detail = "identity modulation is not batch normalization";
                return false;
            }
        }
        FeatureBlock affine = resail_modulate(normalized, ParamMaps(4, 6, 5, 2.0, 1.0));
        for (size_t i = 0; i < affine.values.size(); ++i) {
            if (!nearly(affine.values[i], 2.0 * normalized.values[i] + 1.0, 1e-3)) {
                detail = "gamma=2/beta=1 affine case off";
                return false;
            }
        }
        bool threw = false;
        try {
            resail_modulate(block, ParamMaps(4, 6, 4, 1.0, 0.0));
        } catch (const Error&) {
            threw = true;
        }
        if (!threw) {
            detail = "dimension mismatch not rejected";
            return false;
        }
        return true;
    }));

    results.push_back(timed_check("site-oracle", [&](std::string& detail) {
        Rng rng(seed ^ 2);
        for (int round = 0; round < 20; ++round) {
            FeatureBlock block(2, 2, 3, 3);
            for (double& v : block.values)
                v = rng.next_range(-3.0, 3.0);
            ParamMaps maps = synthetic_param_maps(2, 3, 3, seed ^ (round + 1));
            FeatureBlock out = resail_modulate(block, maps);
            // Scalar recomputation per site from first principles.
            for (int c = 0; c < 2; ++c) {
                double sum = 0.0, dev = 0.0;
                int count = block.n * block.h * block.w;
                for (int n = 0; n < 2; ++n)
                    for (int y = 0; y < 3; ++y)
                        for (int x = 0; x < 3; ++x)
                            sum += block.at(n, c, y, x);
                double mean = sum / count;
                for (int n = 0; n < 2; ++n)
                    for (int y = 0; y < 3; ++y)
                        for (int x = 0; x < 3; ++x) {
                            double d = block.at(n, c, y, x) - mean;
                            dev += d * d;
                        }
                double sigma = std::sqrt(dev / count + kNormEpsilon);
                for (int n = 0; n < 2; ++n)
                    for (int y = 0; y < 3; ++y)
                        for (int x = 0; x < 3; ++x) {
                            size_t pi = maps.index(c, y, x);
                            double expected =
                                maps.gamma[pi] * (block.at(n, c, y, x) - mean) / sigma +
                                maps.beta[pi];
                            if (!nearly(out.at(n, c, y, x), expected, 1e-6)) {
                                detail = "per-site scalar oracle disagreement";
                                return false;
                            }
                        }
            }
        }
        return true;
    }));

    results.push_back(timed_check("blend-identities", [&](std::string& detail) {
        ParamMaps zero(2, 2, 2, 0.0, 0.0);
        ParamMaps two(2, 2, 2, 2.0, 2.0);
        ParamMaps mid = blend_params(zero, two, {0.5, 0.5});
        for (double g : mid.gamma)
            if (g != 1.0) {
                detail = "midpoint not exact";
                return false;
            }
        ParamMaps same = synthetic_param_maps(3, 4, 4, seed ^ 3);
        ParamMaps fixed = blend_params(same, same, {0.37, 0.81});
        if (fixed.gamma != same.gamma || fixed.beta != same.beta) {
            detail = "equal-branch fixed point not bitwise exact";
            return false;
        }
        ParamMaps other = synthetic_param_maps(3, 4, 4, seed ^ 4);
        ParamMaps limit = blend_params(same, other, {1.0 - 1e-9, 1.0 - 1e-9});
        for (size_t i = 0; i < limit.gamma.size(); ++i)
            if (!nearly(limit.gamma[i], same.gamma[i], 1e-8) ||
                !nearly(limit.beta[i], same.beta[i], 1e-8)) {
                detail = "alpha->1 limit drifts from the semantic branch";
                return false;
            }
        for (double bad : {0.0, 1.0, -0.2, 1.4}) {
            bool threw = false;
            try {
                blend_params(same, other, {bad, 0.5});
            } catch (const Error&) {
                threw = true;
            }
            if (!threw) {
                detail = "out-of-range blend weight accepted";
                return false;
            }
        }
        // Blending commutes with modulation when both alphas agree.
        Rng rng(seed ^ 5);
        FeatureBlock block(2, 3, 4, 4);
        for (double& v : block.values)
            v = rng.next_range(-1.0, 1.0);
        ParamMaps s = synthetic_param_maps(3, 4, 4, seed ^ 6);
        ParamMaps r = synthetic_param_maps(3, 4, 4, seed ^ 7);
        double alpha = 0.3;
        FeatureBlock blended = resail_modulate(block, blend_params(s, r, {alpha, alpha}));
        FeatureBlock out_s = resail_modulate(block, s);
        FeatureBlock out_r = resail_modulate(block, r);
        for (size_t i = 0; i < blended.values.size(); ++i) {
            double mix = out_r.values[i] + alpha * (out_s.values[i] - out_r.values[i]);
            if (!nearly(blended.values[i], mix, 1e-10)) {
                detail = "modulation is not linear in the blended parameters";
                return false;
            }
        }
        return true;
    }));

    results.push_back(timed_check("adain", [&](std::string& detail) {
        Rng rng(seed ^ 8);
        FeatureBlock block(2, 3, 8, 8);
        for (double& v : block.values)
            v = rng.next_range(-2.0, 4.0);
        std::vector<double> mu{0.4, -1.0, 2.5};
        std::vector<double> sigma{1.5, 0.7, 2.0};
        FeatureBlock out = adain_modulate(block, mu, sigma);
        for (int n = 0; n < out.n; ++n) {
            for (int c = 0; c < out.c; ++c) {
                double sum = 0.0, dev = 0.0;
                int count = out.h * out.w;
                for (int y = 0; y < out.h; ++y)
                    for (int x = 0; x < out.w; ++x)
                        sum += out.at(n, c, y, x);
                double mean = sum / count;
                for (int y = 0; y < out.h; ++y)
                    for (int x = 0; x < out.w; ++x) {
                        double d = out.at(n, c, y, x) - mean;
                        dev += d * d;
                    }
                double sd = std::sqrt(dev / count);
                if (!nearly(mean, mu[c], 1e-3) || !nearly(sd, sigma[c], 1e-3)) {
                    detail = "output instance stats do not match the style";
                    return false;
                }
            }
        }
        // Styling a block with its own instance stats is near-identity.
        for (int n = 0; n < block.n; ++n) {
            for (int c = 0; c < block.c; ++c) {
                double sum = 0.0, dev = 0.0;
                int count = block.h * block.w;
                for (int y = 0; y < block.h; ++y)
                    for (int x = 0; x < block.w; ++x)
                        sum += block.at(n, c, y, x);
                double mean = sum / count;
                for (int y = 0; y < block.h; ++y)
                    for (int x = 0; x < block.w; ++x) {
                        double d = block.at(n, c, y, x) - mean;
                        dev += d * d;
                    }
                std::vector<double> self_mu(block.c, mean);
                std::vector<double> self_sigma(block.c, std::sqrt(dev / count));
                FeatureBlock one(1, 1, block.h, block.w);
                for (int y = 0; y < block.h; ++y)
                    for (int x = 0; x < block.w; ++x)
                        one.at(0, 0, y, x) = block.at(n, c, y, x);
                FeatureBlock styled =
                    adain_modulate(one, std::span(self_mu).subspan(0, 1),
                                   std::span(self_sigma).subspan(0, 1));
                for (int y = 0; y < block.h; ++y)
                    for (int x = 0; x < block.w; ++x)
                        if (!nearly(styled.at(0, 0, y, x), block.at(n, c, y, x), 1e-3)) {
                            detail = "self-style is not near-identity";
                            return false;
                        }
            }
        }
        bool threw = false;
        try {
            std::vector<double> bad{1.0, -0.1, 1.0};
            adain_modulate(block, mu, bad);
        } catch (const Error&) {
            threw = true;
        }
        if (!threw) {
            detail = "negative style sigma accepted";
            return false;
        }
        return true;
    }));

    results.push_back(timed_check("segmentation-loss", [&](std::string& detail) {
        // Closed form: two classes, uniform 0.5 probabilities, unit weights.
        SemanticMap map = SemanticMap::make(
            2, 2, 2, {0, 1, 1, 0}, {ClassKind::Background, ClassKind::Foreground});
        ClassProbMap uniform;
        uniform.h = uniform.w = 2;
        uniform.c = 2;
        uniform.probs.assign(8, 0.5);
        uniform.class_weights = {1.0, 1.0};
        if (!nearly(segmentation_loss(map, uniform), -std::log(0.5), 1e-9)) {
            detail = "uniform-probability closed form off";
            return false;
        }
        // Perfect prediction collapses to ~0 after clamping.
        ClassProbMap perfect = uniform;
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x)
                for (int c = 0; c < 2; ++c)
                    perfect.probs[perfect.index(y, x, c)] =
                        map.label_at(x, y) == c ? 1.0 : 0.0;
        if (segmentation_loss(map, perfect) > 1e-9) {
            detail = "perfect prediction loss not ~0";
            return false;
        }
        // Hand-computed 2x2 fixture with asymmetric weights.
        ClassProbMap hand = uniform;
        hand.class_weights = {2.0, 0.5};
        double probs_true[4] = {0.9, 0.6, 0.7, 0.8}; // for the labeled class, per pixel
        int k = 0;
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) {
                uint16_t label = map.label_at(x, y);
                hand.probs[hand.index(y, x, label)] = probs_true[k];
                hand.probs[hand.index(y, x, 1 - label)] = 1.0 - probs_true[k];
                ++k;
            }
        double expected = -(2.0 * std::log(0.9) + 0.5 * std::log(0.6) + 0.5 * std::log(0.7) +
                            2.0 * std::log(0.8)) /
                          4.0;
        if (!nearly(segmentation_loss(map, hand), expected, 1e-12)) {
            detail = "hand-summed fixture off";
            return false;
        }
        // Moving probability mass toward the true class lowers the loss.
        ClassProbMap better = hand;
        better.probs[better.index(0, 1, 1)] = 0.65; // true class of pixel (1,0) is 1
        better.probs[better.index(0, 1, 0)] = 0.35;
        if (!(segmentation_loss(map, better) < segmentation_loss(map, hand))) {
            detail = "loss did not decrease toward the true class";
            return false;
        }
        // Permutation equivariance in pixel order.
        SemanticMap swapped = SemanticMap::make(
            2, 2, 2, {0, 1, 0, 1}, {ClassKind::Background, ClassKind::Foreground});
        ClassProbMap rearranged = hand;
        for (int c = 0; c < 2; ++c) {
            std::swap(rearranged.probs[rearranged.index(1, 0, c)],
                      rearranged.probs[rearranged.index(1, 1, c)]);
        }
        if (!nearly(segmentation_loss(map, hand), segmentation_loss(swapped, rearranged), 1e-12)) {
            detail = "loss is not permutation equivariant";
            return false;
        }
        // Default inverse-frequency weights are normalized to mean one.
        SemanticMap skewed = SemanticMap::make(
            4, 1, 3, {0, 0, 0, 1},
            {ClassKind::Background, ClassKind::Background, ClassKind::Foreground});
        std::vector<double> weights = inverse_frequency_weights(skewed);
        if (!nearly(weights[0] + weights[1], 2.0, 1e-12) || weights[2] != 0.0 ||
            !(weights[1] > weights[0])) {
            detail = "inverse-frequency weights malformed";
            return false;
        }
        // Randomized: moving mass toward the labeled class strictly lowers
        // the loss.
        Rng rng(seed ^ 10);
        for (int round = 0; round < 10; ++round) {
            int h = 2 + static_cast<int>(rng.next_below(3));
            int w = 2 + static_cast<int>(rng.next_below(3));
            int c = 2 + static_cast<int>(rng.next_below(3));
            std::vector<uint16_t> labels(static_cast<size_t>(h) * w);
            for (auto& l : labels)
                l = static_cast<uint16_t>(rng.next_below(c));
            SemanticMap rnd_map = SemanticMap::make(
                w, h, c, labels, std::vector<ClassKind>(c, ClassKind::Background));
            ClassProbMap rnd;
            rnd.h = h;
            rnd.w = w;
            rnd.c = c;
            rnd.probs.resize(static_cast<size_t>(h) * w * c);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double sum = 0.0;
                    for (int k = 0; k < c; ++k) {
                        double p = 0.05 + rng.next_double();
                        rnd.probs[rnd.index(y, x, k)] = p;
                        sum += p;
                    }
                    for (int k = 0; k < c; ++k)
                        rnd.probs[rnd.index(y, x, k)] /= sum;
                }
            rnd.class_weights.assign(c, 1.0);
            double before = segmentation_loss(rnd_map, rnd);
            // Shift 20% of some wrong class's mass to the true class at one
            // random pixel.
            int px = static_cast<int>(rng.next_below(w));
            int py = static_cast<int>(rng.next_below(h));
            uint16_t truth = rnd_map.label_at(px, py);
            int wrong = (truth + 1) % c;
            double moved = rnd.probs[rnd.index(py, px, wrong)] * 0.2;
            rnd.probs[rnd.index(py, px, wrong)] -= moved;
            rnd.probs[rnd.index(py, px, truth)] += moved;
            if (!(segmentation_loss(rnd_map, rnd) < before)) {
                detail = "loss did not decrease when mass moved to the true class";
                return false;
            }
        }
        return true;
    }));

    results.push_back(timed_check("tensor-io", [&](std::string& detail) {
        Rng rng(seed ^ 9);
        FeatureBlock block(2, 3, 5, 4);
        for (double& v : block.values)
            v = rng.next_range(-10.0, 10.0);
        fs::path path = fs::temp_directory_path() / "retguide_tensor_check.bin";
        save_tensor(path, block);
        FeatureBlock loaded = load_tensor(path);
        fs::remove(path);
        if (!loaded.same_dims(block) || loaded.values != block.values) {
            detail = "tensor round trip not bit exact";
            return false;
        }
        return true;
    }));

    return results;
}

// ---------------------------------------------------------------------------
// Full verification suite

std::vector<CheckResult> run_all_checks(uint64_t seed, const fs::path& work_dir) {
    std::vector<CheckResult> results;
    fs::create_directories(work_dir);

    results.push_back(timed_check("geometric-score-fixtures", [&](std::string& detail) {
        if (scale_consistency(100, 100) != 0 || scale_consistency(100, 50) != 0 ||
            scale_consistency(100, 49) != 1 || scale_consistency(49, 100) != 1) {
            detail = "scale consistency fixtures off";
            return false;
        }
        BinaryMask full = full_signature();
        BinaryMask half = column_signature(0, kSignatureSize / 2);
        if (shape_nonsimilarity(full, half) != 0.5) {
            detail = "full-vs-half shape term is not exactly 0.5";
            return false;
        }
        BinaryMask mask = raster_shape(ShapeFamily::Ellipse, 37, 23);
        GeometricScore self = geometric_score(mask, mask.popcount(), mask, mask.popcount());
        if (self.total != 0.0 || self.scale_term != 0.0 || self.shape_term != 0.0) {
            detail = "self score is not zero";
            return false;
        }
        // Disjoint signatures against an exhaustive pixel-count oracle.
        BinaryMask a = column_signature(0, 40);
        BinaryMask b = column_signature(60, 110);
        uint64_t diff = 0, pa = 0, pb = 0;
        for (int y = 0; y < kSignatureSize; ++y)
            for (int x = 0; x < kSignatureSize; ++x) {
                pa += a.get(x, y);
                pb += b.get(x, y);
                diff += a.get(x, y) != b.get(x, y);
            }
        double expected = static_cast<double>(diff) / static_cast<double>(std::max(pa, pb));
        if (shape_nonsimilarity(a, b) != expected) {
            detail = "disjoint-signature oracle disagreement";
            return false;
        }
        return true;
    }));

    results.push_back(timed_check("retrieval-oracle-equivalence", [&](std::string& detail) {
        Rng rng(seed ^ 0x5eedULL);
        int pairs = 0;
        int matches = 0;
        for (int round = 0; round < 50; ++round) {
            size_t record_count = 1 + rng.next_below(200);
            int categories = 1 + static_cast<int>(rng.next_below(5));
            SegmentDatabase db =
                make_synthetic_database(record_count, categories, rng.next_u64());
            for (int q = 0; q < 20; ++q) {
                RetrievalQuery query;
                auto family = static_cast<ShapeFamily>(rng.next_below(4));
                query.mask = raster_shape(family, 8 + static_cast<int>(rng.next_below(70)),
                                          8 + static_cast<int>(rng.next_below(70)));
                query.category = static_cast<uint32_t>(rng.next_below(categories + 1));
                if (rng.next_below(10) < 3)
                    query.exclude_source =
                        "syn_" + std::to_string(rng.next_below(record_count / 4 + 1));
                if (rng.next_below(4) != 0)
                    query.threshold = rng.next_range(0.0, 1.2);
                RetrievalResult fast = retrieve_best(db, query);
                RetrievalResult brute = retrieve_best_bruteforce(db, query);
                ++pairs;
                if (fast.segment_id != brute.segment_id ||
                    fast.matched() != brute.matched() ||
                    (fast.matched() && fast.score->total != brute.score->total)) {
                    detail = "discrepancy at pair " + std::to_string(pairs);
                    return false;
                }
                matches += fast.matched();
            }
        }
        detail = std::to_string(pairs) + " pairs, " + std::to_string(matches) + " matches";
        return pairs == 1000;
    }));

    results.push_back(timed_check("exact-retrieval-limit", [&](std::string& detail) {
        fs::path root = work_dir / "toy_exact";
        write_toy_dataset(root, 3, seed);
        SegmentDatabase db = build_toy_db(root);
        DatasetConfig config = DatasetConfig::load(root / "dataset.json");
        for (const DatasetEntry& entry : load_dataset(root)) {
            LoadedEntry loaded = load_entry(entry, config);
            ComposeOptions opts;
            opts.mode = Mode::Test;
            GuidanceImage guidance = compose_guidance(loaded.map, db, opts);
            uint64_t in_mask = 0, equal = 0;
            for (int y = 0; y < loaded.map.height; ++y)
                for (int x = 0; x < loaded.map.width; ++x) {
                    if (!guidance.validity.get(x, y))
                        continue;
                    ++in_mask;
                    const uint8_t* a = guidance.rgb.px(x, y);
                    const uint8_t* b = loaded.image.px(x, y);
                    equal += a[0] == b[0] && a[1] == b[1] && a[2] == b[2];
                }
            uint64_t region_area = 0;
            for (const Region& region : decompose_regions(loaded.map))
                region_area += region.area;
            if (in_mask != region_area) {
                detail = entry.image_id + ": validity is not the union of region masks";
                return false;
            }
            double fraction = in_mask ? static_cast<double>(equal) / in_mask : 0.0;
            if (fraction < 0.99) {
                detail = entry.image_id + ": only " + std::to_string(fraction) +
                         " of in-mask pixels reproduced";
                return false;
            }
        }
        return true;
    }));

    results.push_back(timed_check("paste-rule-suite", [&](std::string& detail) {
        // 20x20 map, classes: 0 bg, 1 bg, 2 fg, 3 fg. An 8x8 plan at (6,6)
        // whose target mask is the left half; the record fills the whole box,
        // so the right half is spill.
        std::vector<ClassKind> kinds{ClassKind::Background, ClassKind::Background,
                                     ClassKind::Foreground, ClassKind::Foreground};
        std::vector<uint16_t> base(400, 0);
        Box bbox{6, 6, 8, 8};
        BinaryMask target(8, 8);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 4; ++x)
                target.set(x, y);
        BinaryMask full(8, 8);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                full.set(x, y);

        auto fresh_canvas = [] {
            return GuidanceImage{RgbImage(20, 20), BinaryMask(20, 20)};
        };
        auto make_plan = [&](uint32_t category, ClassKind kind) {
            PastePlan plan;
            plan.region_index = 0;
            plan.target_bbox = bbox;
            plan.target_mask = target;
            plan.category = category;
            plan.kind = kind;
            plan.retrieved.segment_id = 1;
            plan.retrieved.score = GeometricScore{};
            return plan;
        };

        // R1 + R2: background record, spill zeroed out.
        {
            SemanticMap map = SemanticMap::make(20, 20, 4, base, kinds);
            SegmentRecord rec =
                make_record(1, "src", 1, full, bbox, textured_fill(full, 210, 60, 60));
            GuidanceImage canvas = fresh_canvas();
            paste_segment(canvas, make_plan(1, ClassKind::Background), map, rec);
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    bool valid = canvas.validity.get(6 + x, 6 + y);
                    const uint8_t* px = canvas.rgb.px(6 + x, 6 + y);
                    if (x < 4) {
                        const uint8_t* want = rec.pixels.px(x, y);
                        if (!valid || px[0] != want[0] || px[1] != want[1] || px[2] != want[2]) {
                            detail = "R1: target pixels not preserved";
                            return false;
                        }
                    } else if (valid || px[0] || px[1] || px[2]) {
                        detail = "R2: background spill not zeroed";
                        return false;
                    }
                }
        }
        // R3 + R4: foreground record over mixed background/foreground labels.
        {
            std::vector<uint16_t> labels = base;
            for (int y = 6; y < 10; ++y)
                for (int x = 10; x < 14; ++x)
                    labels[static_cast<size_t>(y) * 20 + x] = 3; // fg underneath
            SemanticMap map = SemanticMap::make(20, 20, 4, labels, kinds);
            SegmentRecord rec =
                make_record(1, "src", 2, full, bbox, textured_fill(full, 40, 180, 90));
            GuidanceImage canvas = fresh_canvas();
            // A pixel already valid in the spill zone must stay untouched.
            canvas.validity.set(10, 12);
            canvas.rgb.px(10, 12)[0] = 1;
            canvas.rgb.px(10, 12)[1] = 2;
            canvas.rgb.px(10, 12)[2] = 3;
            paste_segment(canvas, make_plan(2, ClassKind::Foreground), map, rec);
            for (int y = 0; y < 8; ++y)
                for (int x = 4; x < 8; ++x) {
                    int cx = 6 + x, cy = 6 + y;
                    bool valid = canvas.validity.get(cx, cy);
                    const uint8_t* px = canvas.rgb.px(cx, cy);
                    bool over_fg = cy >= 6 && cy < 10 && cx >= 10 && cx < 14;
                    if (over_fg) {
                        if (valid || px[0] || px[1] || px[2]) {
                            detail = "R4: foreground spill over foreground not zeroed";
                            return false;
                        }
                    } else if (cx == 10 && cy == 12) {
                        if (px[0] != 1 || px[1] != 2 || px[2] != 3) {
                            detail = "R3 overwrote an already-valid pixel";
                            return false;
                        }
                    } else {
                        const uint8_t* want = rec.pixels.px(x, y);
                        if (!valid || px[0] != want[0] || px[1] != want[1] || px[2] != want[2]) {
                            detail = "R3: foreground spill over background not preserved";
                            return false;
                        }
                    }
                }
        }
        // Owner writes overwrite earlier spill writes inside the target mask.
        {
            SemanticMap map = SemanticMap::make(20, 20, 4, base, kinds);
            SegmentRecord rec =
                make_record(1, "src", 2, full, bbox, textured_fill(full, 90, 90, 200));
            GuidanceImage canvas = fresh_canvas();
            canvas.validity.set(6, 6);
            canvas.rgb.px(6, 6)[0] = 9;
            paste_segment(canvas, make_plan(2, ClassKind::Foreground), map, rec);
            if (canvas.rgb.px(6, 6)[0] != rec.pixels.px(0, 0)[0]) {
                detail = "R1 did not overwrite a prior spill pixel";
                return false;
            }
        }
        // NO_MATCH plans leave the canvas black.
        {
            SemanticMap map = SemanticMap::make(20, 20, 4, base, kinds);
            SegmentRecord rec =
                make_record(1, "src", 2, full, bbox, textured_fill(full, 90, 90, 200));
            PastePlan plan = make_plan(2, ClassKind::Foreground);
            plan.retrieved = RetrievalResult{};
            GuidanceImage canvas = fresh_canvas();
            paste_segment(canvas, plan, map, rec);
            if (canvas.validity.popcount() != 0) {
                detail = "NO_MATCH plan wrote pixels";
                return false;
            }
        }
        return true;
    }));

    results.push_back(timed_check("color-transfer", [&](std::string& detail) {
        Rng rng(seed ^ 0xc010ULL);
        for (int round = 0; round < 100; ++round) {
            auto fam_a = static_cast<ShapeFamily>(rng.next_below(4));
            auto fam_b = static_cast<ShapeFamily>(rng.next_below(4));
            BinaryMask ma = raster_shape(fam_a, 10 + static_cast<int>(rng.next_below(50)),
                                         10 + static_cast<int>(rng.next_below(50)));
            BinaryMask mb = raster_shape(fam_b, 10 + static_cast<int>(rng.next_below(50)),
                                         10 + static_cast<int>(rng.next_below(50)));
            RgbImage a = textured_fill(ma, static_cast<uint8_t>(30 + rng.next_below(200)),
                                       static_cast<uint8_t>(30 + rng.next_below(200)),
                                       static_cast<uint8_t>(30 + rng.next_below(200)));
            RgbImage b = textured_fill(mb, static_cast<uint8_t>(30 + rng.next_below(200)),
                                       static_cast<uint8_t>(30 + rng.next_below(200)),
                                       static_cast<uint8_t>(30 + rng.next_below(200)));
            LabImage out = color_transfer_lab(a, ma, b, mb);
            auto got = masked_lab_stats(out, ma);
            auto want = masked_lab_stats(rgb_to_lab(b), mb);
            for (int k = 0; k < 3; ++k) {
                if (!nearly(got[k].mean, want[k].mean, 1e-4) ||
                    !nearly(got[k].stddev, want[k].stddev, 1e-4)) {
                    detail = "masked stats differ from target at round " + std::to_string(round);
                    return false;
                }
            }
        }
        // Round trip: a lattice over the color cube plus extremes.
        RgbImage lattice(512, 512);
        size_t i = 0;
        for (int r = 0; r < 64; ++r)
            for (int g = 0; g < 64; ++g)
                for (int b = 0; b < 64; ++b) {
                    lattice.data[i++] = static_cast<uint8_t>(r * 4);
                    lattice.data[i++] = static_cast<uint8_t>(g * 4);
                    lattice.data[i++] = static_cast<uint8_t>(b * 4);
                }
        lattice.data[0] = lattice.data[1] = lattice.data[2] = 0;
        lattice.data[3] = lattice.data[4] = lattice.data[5] = 255;
        lattice.data[6] = lattice.data[7] = lattice.data[8] = 128;
        RgbImage round = lab_to_rgb(rgb_to_lab(lattice));
        int max_err = 0;
        for (size_t k = 0; k < lattice.data.size(); ++k)
            max_err = std::max(max_err, std::abs(int(lattice.data[k]) - int(round.data[k])));
        if (max_err > 1) {
            detail = "round-trip error " + std::to_string(max_err) + " exceeds 1";
            return false;
        }
        if (round.data[0] != 0 || round.data[1] != 0 || round.data[2] != 0) {
            detail = "black does not round-trip to black";
            return false;
        }
        detail = "max round-trip error " + std::to_string(max_err);
        return true;
    }));

    results.push_back(timed_check("tps-warp", [&](std::string& detail) {
        std::vector<Point> source;
        for (int k = 0; k < 10; ++k) {
            double angle = 2.0 * 3.14159265358979 * k / 10.0;
            source.push_back({20.0 + 12.0 * std::cos(angle), 18.0 + 9.0 * std::sin(angle)});
        }
        std::vector<Point> target = source;
        target[2].x += 4.0;
        target[2].y -= 3.0;
        target[5].x -= 2.5;
        target[8].y += 5.0;
        TpsWarp warp = tps_solve(source, target, 0.0);
        for (size_t k = 0; k < source.size(); ++k) {
            Point got = warp.apply(source[k]);
            if (std::hypot(got.x - target[k].x, got.y - target[k].y) >= 1e-6) {
                detail = "control point interpolation error >= 1e-6";
                return false;
            }
        }
        // Zero shifts: identity flow and bit-exact application.
        TpsWarp identity = tps_solve(source, source, 0.0);
        double max_flow = 0.0;
        for (int y = 0; y < 36; y += 3)
            for (int x = 0; x < 40; x += 3) {
                Point p{static_cast<double>(x), static_cast<double>(y)};
                Point q = identity.apply(p);
                max_flow = std::max(max_flow, std::hypot(q.x - p.x, q.y - p.y));
            }
        if (max_flow >= 1e-7) {
            detail = "identity flow magnitude " + std::to_string(max_flow);
            return false;
        }
        BinaryMask mask = raster_shape(ShapeFamily::Ellipse, 40, 36);
        RgbImage rgb = textured_fill(mask, 120, 80, 160);
        WarpedSegment out = tps_apply(identity, mask, rgb, 0);
        if (!(out.mask == mask) || out.rgb.data != rgb.data) {
            detail = "zero-displacement warp is not the identity";
            return false;
        }
        // Collinear control points are singular without regularization.
        std::vector<Point> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
        bool threw = false;
        try {
            tps_solve(line, line, 0.0);
        } catch (const Error&) {
            threw = true;
        }
        if (!threw) {
            detail = "singular system not rejected";
            return false;
        }
        // Near-collinear samples are rescued by the default regularization.
        std::vector<Point> near{{0, 0}, {1, 1.001}, {2, 1.999}, {3, 3}};
        tps_solve(near, near, 1e-3);
        // Shifting three points +5 in x produces positive mean x displacement
        // (numerically integrated over a dense grid).
        std::vector<Point> shifted = source;
        shifted[0].x += 5.0;
        shifted[3].x += 5.0;
        shifted[6].x += 5.0;
        TpsWarp push = tps_solve(source, shifted, 0.0);
        double sum_dx = 0.0;
        int samples = 0;
        for (int y = 0; y < 36; ++y)
            for (int x = 0; x < 40; ++x) {
                sum_dx += push.apply({static_cast<double>(x), static_cast<double>(y)}).x - x;
                ++samples;
            }
        if (!(sum_dx / samples > 0.0)) {
            detail = "mean displacement not positive";
            return false;
        }
        return true;
    }));

    results.push_back(timed_check("modulation-suite", [&](std::string& detail) {
        auto checks = run_modnorm_checks(seed);
        int failed = 0;
        for (const CheckResult& check : checks)
            if (!check.passed) {
                ++failed;
                detail += (detail.empty() ? "" : "; ") + check.name + ": " + check.detail;
            }
        if (failed == 0)
            detail = std::to_string(checks.size()) + " sub-checks";
        return failed == 0;
    }));

    results.push_back(timed_check("threshold-monotonicity", [&](std::string& detail) {
        // Database of ellipses; queries are ellipses with growing notches so
        // best scores spread across the threshold grid.
        Rng rng(seed ^ 0x7777ULL);
        std::vector<SegmentRecord> records;
        uint64_t id = 1;
        for (int k = 0; k < 40; ++k) {
            int w = 20 + 4 * (k % 10) + static_cast<int>(rng.next_below(3));
            int h = 18 + 3 * (k / 10) + static_cast<int>(rng.next_below(3));
            BinaryMask mask = raster_shape(ShapeFamily::Ellipse, w, h);
            records.push_back(make_record(id++, "syn_" + std::to_string(k), 0, mask,
                                          Box{0, 0, mask.width(), mask.height()},
                                          textured_fill(mask, 100, 100, 100)));
        }
        DatabaseMeta meta;
        meta.config.num_classes = 1;
        meta.config.class_kinds = {ClassKind::Foreground};
        SegmentDatabase db(std::move(records), std::move(meta));

        std::vector<BinaryMask> queries;
        for (int k = 0; k < 30; ++k) {
            int w = 24 + 2 * (k % 8);
            int h = 20 + 2 * (k % 5);
            BinaryMask mask(w, h);
            double notch = 0.02 + 0.016 * k;
            int cut = static_cast<int>(notch * w);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    if (!shape_hit(ShapeFamily::Ellipse, x, y, w, h))
                        continue;
                    bool in_notch = x >= w - cut && y >= h / 4 && y < 3 * h / 4;
                    if (!in_notch)
                        mask.set(x, y);
                }
            auto box = mask.tight_bbox();
            queries.push_back(mask.crop(*box));
        }

        const double grid[5] = {0.15, 0.25, 0.35, 0.45, 0.55};
        int counts[5] = {0, 0, 0, 0, 0};
        for (int t = 0; t < 5; ++t) {
            for (const BinaryMask& mask : queries) {
                RetrievalQuery query;
                query.mask = mask;
                query.category = 0;
                query.threshold = grid[t];
                counts[t] += retrieve_best(db, query).matched();
            }
        }
        std::ostringstream oss;
        for (int t = 0; t < 5; ++t)
            oss << (t ? " " : "") << grid[t] << ":" << counts[t];
        detail = oss.str();
        for (int t = 1; t < 5; ++t)
            if (counts[t] < counts[t - 1]) {
                detail += " (not monotone)";
                return false;
            }
        if (counts[4] <= counts[0]) {
            detail += " (no spread across the grid)";
            return false;
        }
        return true;
    }));

    results.push_back(timed_check("pipeline-determinism", [&](std::string& detail) {
        fs::path root = work_dir / "toy_run";
        write_toy_dataset(root, 3, seed);
        SegmentDatabase db = build_toy_db(root);
        fs::path db_path = work_dir / "toy_run.segdb";
        save_database(db, db_path);

        PipelineConfig config;
        config.dataset_root = root;
        config.db_path = db_path;
        config.mode = Mode::Train;
        config.seed = seed;
        config.out_dir = work_dir / "run_out";
        config.workers = 2;

        RunManifest first = run_pipeline(config);
        if (first.failure_count() != 0) {
            detail = "first run reported failures";
            return false;
        }
        std::map<std::string, std::string> snapshot;
        for (const auto& item : fs::directory_iterator(config.out_dir))
            snapshot[item.path().filename().string()] = read_file_bytes(item.path());

        RunManifest second = run_pipeline(config);
        if (second.failure_count() != 0) {
            detail = "second run reported failures";
            return false;
        }
        for (const auto& item : fs::directory_iterator(config.out_dir)) {
            std::string name = item.path().filename().string();
            std::string bytes = read_file_bytes(item.path());
            if (!snapshot.count(name)) {
                detail = "second run created unexpected " + name;
                return false;
            }
            if (name == "manifest.json") {
                json a = json::parse(snapshot[name]);
                json b = json::parse(bytes);
                strip_timing_fields(a);
                strip_timing_fields(b);
                if (a.dump() != b.dump()) {
                    detail = "manifests differ beyond timing fields";
                    return false;
                }
            } else if (snapshot[name] != bytes) {
                detail = name + " is not byte-identical across runs";
                return false;
            }
        }
        detail = std::to_string(snapshot.size()) + " artifacts compared";
        return true;
    }));

    results.push_back(timed_check("retrieval-performance", [&](std::string& detail) {
        SegmentDatabase db = make_synthetic_database(10000, 16, seed ^ 0xbe7cULL);
        BenchReport report = bench_retrieval(db, 100, seed ^ 0xbe7dULL);
        std::ostringstream oss;
        oss << "accelerated " << report.accelerated_qps << " q/s, brute "
            << report.bruteforce_qps << " q/s, speedup " << report.speedup << "x"
            << (report.speedup >= 10.0 ? "" : " (below the 10x soft target)");
        detail = oss.str();
        return report.results_equal;
    }));

    return results;
}

} // namespace retguide

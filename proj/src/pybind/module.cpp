// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "retguide/boundary.hpp"
#include "retguide/lab.hpp"
#include "retguide/modnorm.hpp"
#include "retguide/pipeline.hpp"
#include "retguide/png_io.hpp"
#include "retguide/resize.hpp"
#include "retguide/rng.hpp"
#include "retguide/selftest.hpp"
#include "retguide/tps.hpp"

namespace py = pybind11;
using namespace retguide;

namespace {

using U8Array = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;
using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U16Array = py::array_t<uint16_t, py::array::c_style | py::array::forcecast>;
using U32Array = py::array_t<uint32_t, py::array::c_style | py::array::forcecast>;

RgbImage to_rgb(const U8Array& array) {
    if (array.ndim() != 3 || array.shape(2) != 3)
        throw Error("expected an (H, W, 3) uint8 array");
    RgbImage image(static_cast<int>(array.shape(1)), static_cast<int>(array.shape(0)));
    std::memcpy(image.data.data(), array.data(), image.data.size());
    return image;
}

py::array_t<uint8_t> from_rgb(const RgbImage& image) {
    py::array_t<uint8_t> out({image.height, image.width, 3});
    std::memcpy(out.mutable_data(), image.data.data(), image.data.size());
    return out;
}

BinaryMask to_mask(const BoolArray& array) {
    if (array.ndim() != 2)
        throw Error("expected an (H, W) bool array");
    BinaryMask mask(static_cast<int>(array.shape(1)), static_cast<int>(array.shape(0)));
    auto view = array.unchecked<2>();
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (view(y, x))
                mask.set(x, y);
    return mask;
}

py::array_t<bool> from_mask(const BinaryMask& mask) {
    py::array_t<bool> out({mask.height(), mask.width()});
    auto view = out.mutable_unchecked<2>();
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            view(y, x) = mask.get(x, y);
    return out;
}

SemanticMap to_map(const U16Array& labels, const std::optional<U32Array>& instances,
                   const DatasetConfig& config) {
    if (labels.ndim() != 2)
        throw Error("expected an (H, W) uint16 label array");
    int h = static_cast<int>(labels.shape(0));
    int w = static_cast<int>(labels.shape(1));
    std::vector<uint16_t> label_values(labels.data(), labels.data() + labels.size());
    std::vector<uint32_t> instance_values;
    if (instances) {
        if (instances->ndim() != 2 || instances->shape(0) != h || instances->shape(1) != w)
            throw Error("instance array must match the label array");
        instance_values.assign(instances->data(), instances->data() + instances->size());
    }
    return SemanticMap::make(w, h, config.num_classes, std::move(label_values),
                             config.class_kinds, std::move(instance_values));
}

FeatureBlock to_block(const F64Array& array) {
    if (array.ndim() != 4)
        throw Error("expected an (N, C, H, W) float64 array");
    FeatureBlock block(static_cast<int>(array.shape(0)), static_cast<int>(array.shape(1)),
                       static_cast<int>(array.shape(2)), static_cast<int>(array.shape(3)));
    std::memcpy(block.values.data(), array.data(), block.values.size() * sizeof(double));
    return block;
}

py::array_t<double> from_block(const FeatureBlock& block) {
    py::array_t<double> out({block.n, block.c, block.h, block.w});
    std::memcpy(out.mutable_data(), block.values.data(), block.values.size() * sizeof(double));
    return out;
}

ParamMaps to_params(const F64Array& gamma, const F64Array& beta) {
    if (gamma.ndim() != 3 || beta.ndim() != 3)
        throw Error("expected (C, H, W) float64 parameter maps");
    for (int d = 0; d < 3; ++d)
        if (gamma.shape(d) != beta.shape(d))
            throw Error("gamma and beta shapes differ");
    ParamMaps maps(static_cast<int>(gamma.shape(0)), static_cast<int>(gamma.shape(1)),
                   static_cast<int>(gamma.shape(2)));
    std::memcpy(maps.gamma.data(), gamma.data(), maps.gamma.size() * sizeof(double));
    std::memcpy(maps.beta.data(), beta.data(), maps.beta.size() * sizeof(double));
    return maps;
}

Mode parse_mode(const std::string& mode) {
    if (mode == "train")
        return Mode::Train;
    if (mode == "test")
        return Mode::Test;
    throw Error("mode must be 'train' or 'test'");
}

DatasetConfig synthetic_config_like(const SegmentDatabase& db) {
    return db.meta().config;
}

} // namespace

PYBIND11_MODULE(_retguide, m) {
    m.doc() = "segment retrieval, guidance composition and distortion toolkit";
    m.attr("__version__") = kToolVersion;
    m.attr("DEFAULT_THRESHOLD") = kDefaultThreshold;
    m.attr("DEFAULT_MIN_AREA") = kDefaultMinArea;

    py::register_exception<Error>(m, "RetguideError", PyExc_RuntimeError);

    py::class_<GeometricScore>(m, "GeometricScore")
        .def_readonly("scale_term", &GeometricScore::scale_term)
        .def_readonly("shape_term", &GeometricScore::shape_term)
        .def_readonly("total", &GeometricScore::total)
        .def_readonly("shape_weight", &GeometricScore::shape_weight)
        .def("__repr__", [](const GeometricScore& s) {
            return "GeometricScore(scale=" + std::to_string(s.scale_term) +
                   ", shape=" + std::to_string(s.shape_term) +
                   ", total=" + std::to_string(s.total) + ")";
        });

    py::class_<RetrievalResult>(m, "RetrievalResult")
        .def_property_readonly("matched", &RetrievalResult::matched)
        .def_property_readonly("segment_id",
                               [](const RetrievalResult& r) -> py::object {
                                   if (!r.matched())
                                       return py::none();
                                   return py::int_(r.segment_id);
                               })
        .def_property_readonly("score", [](const RetrievalResult& r) -> py::object {
            if (!r.score)
                return py::none();
            return py::cast(*r.score);
        });

    py::class_<BenchReport>(m, "BenchReport")
        .def_readonly("db_records", &BenchReport::db_records)
        .def_readonly("query_count", &BenchReport::query_count)
        .def_readonly("accelerated_qps", &BenchReport::accelerated_qps)
        .def_readonly("bruteforce_qps", &BenchReport::bruteforce_qps)
        .def_readonly("speedup", &BenchReport::speedup)
        .def_readonly("results_equal", &BenchReport::results_equal);

    py::class_<SegmentDatabase>(m, "SegmentDatabase")
        .def_property_readonly("size", &SegmentDatabase::size)
        .def_property_readonly("num_classes",
                               [](const SegmentDatabase& db) { return db.meta().config.num_classes; })
        .def("bucket",
             [](const SegmentDatabase& db, uint32_t category) {
                 auto span = db.bucket(category);
                 return std::vector<uint64_t>(span.begin(), span.end());
             })
        .def("record_mask",
             [](const SegmentDatabase& db, uint64_t segment_id) {
                 const SegmentRecord* rec = db.find(segment_id);
                 if (!rec)
                     throw Error("unknown segment id");
                 return from_mask(rec->mask);
             })
        .def("record_pixels",
             [](const SegmentDatabase& db, uint64_t segment_id) {
                 const SegmentRecord* rec = db.find(segment_id);
                 if (!rec)
                     throw Error("unknown segment id");
                 return from_rgb(rec->pixels);
             })
        .def("record_category", [](const SegmentDatabase& db, uint64_t segment_id) {
            const SegmentRecord* rec = db.find(segment_id);
            if (!rec)
                throw Error("unknown segment id");
            return rec->category;
        });

    // -- database construction and persistence
    m.def(
        "build_database",
        [](const std::filesystem::path& root, int min_area, int workers) {
            DatasetConfig config = DatasetConfig::load(root / "dataset.json");
            return build_database(load_dataset(root), config, min_area, workers);
        },
        py::arg("root"), py::arg("min_area") = kDefaultMinArea, py::arg("workers") = 0);
    m.def("save_database", &save_database, py::arg("db"), py::arg("path"));
    m.def("load_database", &load_database, py::arg("path"));
    m.def("make_synthetic_database", &make_synthetic_database, py::arg("record_count"),
          py::arg("categories"), py::arg("seed"));
    m.def("write_toy_dataset", &write_toy_dataset, py::arg("root"), py::arg("image_count"),
          py::arg("seed"));

    // -- geometry and retrieval
    m.def("make_signature",
          [](const BoolArray& mask) { return from_mask(make_signature(to_mask(mask))); });
    m.def("resize_nearest", [](const BoolArray& mask, int width, int height) {
        return from_mask(resize_nearest(to_mask(mask), width, height));
    });
    m.def("resize_bilinear", [](const U8Array& image, int width, int height) {
        return from_rgb(resize_bilinear(to_rgb(image), width, height));
    });
    m.def("scale_consistency", &scale_consistency, py::arg("area_i"), py::arg("area_j"));
    m.def("shape_nonsimilarity", [](const BoolArray& sig_i, const BoolArray& sig_j) {
        return shape_nonsimilarity(to_mask(sig_i), to_mask(sig_j));
    });
    m.def(
        "geometric_score",
        [](const BoolArray& mask_i, const BoolArray& mask_j, double shape_weight) {
            BinaryMask a = to_mask(mask_i);
            BinaryMask b = to_mask(mask_j);
            return geometric_score(a, a.popcount(), b, b.popcount(), shape_weight);
        },
        py::arg("mask_i"), py::arg("mask_j"), py::arg("shape_weight") = kDefaultShapeWeight);

    auto make_query = [](const BoolArray& mask, uint32_t category,
                         const std::optional<std::string>& exclude_source,
                         const std::optional<double>& threshold, double shape_weight) {
        RetrievalQuery query;
        query.mask = to_mask(mask);
        query.category = category;
        query.exclude_source = exclude_source;
        query.threshold = threshold;
        query.shape_weight = shape_weight;
        return query;
    };
    m.def(
        "retrieve_best",
        [make_query](const SegmentDatabase& db, const BoolArray& mask, uint32_t category,
                     const std::optional<std::string>& exclude_source,
                     const std::optional<double>& threshold, double shape_weight) {
            return retrieve_best(db,
                                 make_query(mask, category, exclude_source, threshold,
                                            shape_weight));
        },
        py::arg("db"), py::arg("mask"), py::arg("category"),
        py::arg("exclude_source") = std::nullopt,
        py::arg("threshold") = std::optional<double>(kDefaultThreshold),
        py::arg("shape_weight") = kDefaultShapeWeight);
    m.def(
        "retrieve_best_bruteforce",
        [make_query](const SegmentDatabase& db, const BoolArray& mask, uint32_t category,
                     const std::optional<std::string>& exclude_source,
                     const std::optional<double>& threshold, double shape_weight) {
            return retrieve_best_bruteforce(
                db, make_query(mask, category, exclude_source, threshold, shape_weight));
        },
        py::arg("db"), py::arg("mask"), py::arg("category"),
        py::arg("exclude_source") = std::nullopt,
        py::arg("threshold") = std::optional<double>(kDefaultThreshold),
        py::arg("shape_weight") = kDefaultShapeWeight);
    m.def("bench_retrieval", &bench_retrieval, py::arg("db"), py::arg("query_count"),
          py::arg("seed"));

    // -- composition and distortion
    m.def(
        "compose_guidance",
        [](const SegmentDatabase& db, const U16Array& labels,
           const std::optional<U32Array>& instances, const std::string& mode,
           const std::optional<double>& threshold, uint64_t seed,
           const std::string& source_image_id, int min_area, int workers) {
            SemanticMap map = to_map(labels, instances, synthetic_config_like(db));
            ComposeOptions opts;
            opts.mode = parse_mode(mode);
            opts.threshold = threshold;
            opts.seed = seed;
            opts.source_image_id = source_image_id;
            opts.min_area = min_area;
            opts.workers = workers;
            GuidanceImage out = compose_guidance(map, db, opts);
            return py::make_tuple(from_rgb(out.rgb), from_mask(out.validity));
        },
        py::arg("db"), py::arg("labels"), py::arg("instances") = std::nullopt,
        py::arg("mode") = "test",
        py::arg("threshold") = std::optional<double>(kDefaultThreshold), py::arg("seed") = 0,
        py::arg("source_image_id") = std::string(), py::arg("min_area") = kDefaultMinArea,
        py::arg("workers") = 0);
    m.def(
        "distort_ground_truth",
        [](const SegmentDatabase& db, const U8Array& image, const U16Array& labels,
           const std::optional<U32Array>& instances, uint64_t seed, bool color, bool shape,
           bool resolution, int min_area) {
            SemanticMap map = to_map(labels, instances, synthetic_config_like(db));
            DistortionConfig config;
            config.seed = seed;
            config.color_enabled = color;
            config.shape_enabled = shape;
            config.resolution_enabled = resolution;
            config.min_area = min_area;
            GuidanceImage out = distort_ground_truth(to_rgb(image), map, db, config);
            return py::make_tuple(from_rgb(out.rgb), from_mask(out.validity));
        },
        py::arg("db"), py::arg("image"), py::arg("labels"), py::arg("instances") = std::nullopt,
        py::arg("seed") = 0, py::arg("color") = true, py::arg("shape") = true,
        py::arg("resolution") = true, py::arg("min_area") = kDefaultMinArea);
    m.def("color_transfer", [](const U8Array& src, const BoolArray& src_mask, const U8Array& tgt,
                               const BoolArray& tgt_mask) {
        return from_rgb(color_transfer(to_rgb(src), to_mask(src_mask), to_rgb(tgt),
                                       to_mask(tgt_mask)));
    });
    m.def("resolution_degrade", [](const U8Array& image, double tau) {
        return from_rgb(resolution_degrade(to_rgb(image), tau));
    });
    m.def(
        "sample_edge_points",
        [](const BoolArray& mask, int count, uint64_t seed) {
            Rng rng(seed);
            std::vector<Point> pts = sample_edge_points(to_mask(mask), count, rng);
            py::array_t<double> out({static_cast<int>(pts.size()), 2});
            auto view = out.mutable_unchecked<2>();
            for (size_t i = 0; i < pts.size(); ++i) {
                view(i, 0) = pts[i].x;
                view(i, 1) = pts[i].y;
            }
            return out;
        },
        py::arg("mask"), py::arg("count") = kEdgePointCount, py::arg("seed") = 0);

    // -- modulation numerics
    m.def("batch_stats", [](const F64Array& block) {
        ChannelMoments m_ = batch_stats(to_block(block));
        return py::make_tuple(py::cast(m_.mu), py::cast(m_.sigma));
    });
    m.def("resail_modulate", [](const F64Array& block, const F64Array& gamma,
                                const F64Array& beta) {
        return from_block(resail_modulate(to_block(block), to_params(gamma, beta)));
    });
    m.def(
        "blend_params",
        [](const F64Array& gamma_s, const F64Array& beta_s, const F64Array& gamma_r,
           const F64Array& beta_r, double alpha_gamma, double alpha_beta) {
            ParamMaps out = blend_params(to_params(gamma_s, beta_s), to_params(gamma_r, beta_r),
                                         {alpha_gamma, alpha_beta});
            py::array_t<double> gamma({out.c, out.h, out.w});
            py::array_t<double> beta({out.c, out.h, out.w});
            std::memcpy(gamma.mutable_data(), out.gamma.data(),
                        out.gamma.size() * sizeof(double));
            std::memcpy(beta.mutable_data(), out.beta.data(), out.beta.size() * sizeof(double));
            return py::make_tuple(gamma, beta);
        },
        py::arg("gamma_s"), py::arg("beta_s"), py::arg("gamma_r"), py::arg("beta_r"),
        py::arg("alpha_gamma"), py::arg("alpha_beta"));
    m.def("adain_modulate", [](const F64Array& block, const std::vector<double>& mu,
                               const std::vector<double>& sigma) {
        return from_block(adain_modulate(to_block(block), mu, sigma));
    });
    m.def(
        "segmentation_loss",
        [](const U16Array& labels, const F64Array& probs,
           const std::optional<std::vector<double>>& class_weights) {
            if (probs.ndim() != 3)
                throw Error("expected an (H, W, C) probability array");
            int h = static_cast<int>(probs.shape(0));
            int w = static_cast<int>(probs.shape(1));
            int c = static_cast<int>(probs.shape(2));
            std::vector<uint16_t> label_values(labels.data(), labels.data() + labels.size());
            SemanticMap map = SemanticMap::make(w, h, c, std::move(label_values),
                                                std::vector<ClassKind>(c, ClassKind::Background));
            ClassProbMap prob_map;
            prob_map.h = h;
            prob_map.w = w;
            prob_map.c = c;
            prob_map.probs.assign(probs.data(), probs.data() + probs.size());
            prob_map.class_weights =
                class_weights ? *class_weights : inverse_frequency_weights(map);
            return segmentation_loss(map, prob_map);
        },
        py::arg("labels"), py::arg("probs"), py::arg("class_weights") = std::nullopt);
    m.def("synthetic_param_maps", [](int c, int h, int w, uint64_t seed) {
        ParamMaps maps = synthetic_param_maps(c, h, w, seed);
        py::array_t<double> gamma({c, h, w});
        py::array_t<double> beta({c, h, w});
        std::memcpy(gamma.mutable_data(), maps.gamma.data(), maps.gamma.size() * sizeof(double));
        std::memcpy(beta.mutable_data(), maps.beta.data(), maps.beta.size() * sizeof(double));
        return py::make_tuple(gamma, beta);
    });

    // -- pipeline and verification
    m.def("run_pipeline", [](const std::string& config_json) {
        RunManifest manifest = run_pipeline(PipelineConfig::from_json_text(config_json));
        return py::make_tuple(manifest.to_json_text(), manifest.failure_count());
    });
    m.def("verify_modnorm", [](uint64_t seed) {
        py::list out;
        for (const CheckResult& check : run_modnorm_checks(seed))
            out.append(py::make_tuple(check.name, check.passed, check.detail));
        return out;
    });
    m.def("verify_all", [](uint64_t seed, const std::filesystem::path& work_dir) {
        py::list out;
        for (const CheckResult& check : run_all_checks(seed, work_dir))
            out.append(py::make_tuple(check.name, check.passed, check.detail));
        return out;
    });
}

// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "retguide/png_io.hpp"

namespace retguide {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetConfig DatasetConfig::from_json_text(const std::string& text) try {
    json j = json::parse(text);
    DatasetConfig cfg;
    cfg.num_classes = j.at("num_classes").get<int>();
    if (cfg.num_classes < 1)
        throw Error("dataset config: num_classes must be >= 1");
    for (const auto& kind : j.at("class_kinds")) {
        std::string s = kind.get<std::string>();
        if (s == "foreground")
            cfg.class_kinds.push_back(ClassKind::Foreground);
        else if (s == "background")
            cfg.class_kinds.push_back(ClassKind::Background);
        else
            throw Error("dataset config: class kind must be 'foreground' or 'background', got '" +
                        s + "'");
    }
    if (static_cast<int>(cfg.class_kinds.size()) != cfg.num_classes)
        throw Error("dataset config: class_kinds length != num_classes");
    if (j.contains("class_names")) {
        cfg.class_names = j["class_names"].get<std::vector<std::string>>();
        if (static_cast<int>(cfg.class_names.size()) != cfg.num_classes)
            throw Error("dataset config: class_names length != num_classes");
    }
    return cfg;
} catch (const json::exception& e) {
    throw Error(std::string("dataset config: ") + e.what());
}

DatasetConfig DatasetConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open dataset config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string DatasetConfig::to_json_text() const {
    json kinds = json::array();
    for (ClassKind k : class_kinds)
        kinds.push_back(k == ClassKind::Foreground ? "foreground" : "background");
    json j{{"num_classes", num_classes}, {"class_kinds", kinds}};
    if (!class_names.empty())
        j["class_names"] = class_names;
    return j.dump();
}

uint64_t DatasetConfig::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : to_json_text()) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

bool has_image_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<DatasetEntry> entries_from_manifest(const fs::path& root, const fs::path& manifest) try {
    std::ifstream in(manifest);
    if (!in)
        throw Error("cannot open manifest " + manifest.string());
    json j = json::parse(in);
    std::vector<DatasetEntry> entries;
    for (const auto& e : j.at("entries")) {
        DatasetEntry entry;
        entry.image_id = e.at("image_id").get<std::string>();
        entry.image_path = root / e.at("image").get<std::string>();
        entry.label_path = root / e.at("label").get<std::string>();
        if (e.contains("instance") && !e["instance"].is_null())
            entry.instance_path = root / e["instance"].get<std::string>();
        entries.push_back(std::move(entry));
    }
    return entries;
} catch (const json::exception& e) {
    throw Error("manifest " + manifest.string() + ": " + e.what());
}

std::vector<DatasetEntry> entries_from_scan(const fs::path& root) {
    fs::path images = root / "images";
    fs::path labels = root / "labels";
    fs::path instances = root / "instances";
    if (!fs::is_directory(images) || !fs::is_directory(labels))
        throw Error("dataset root " + root.string() + " must contain images/ and labels/");

    std::vector<DatasetEntry> entries;
    for (const auto& item : fs::directory_iterator(images)) {
        if (!item.is_regular_file() || !has_image_ext(item.path()))
            continue;
        DatasetEntry entry;
        entry.image_id = item.path().stem().string();
        entry.image_path = item.path();
        entry.label_path = labels / (entry.image_id + ".png");
        if (!fs::exists(entry.label_path))
            throw Error("missing label for image '" + entry.image_id + "': expected " +
                        entry.label_path.string());
        fs::path inst = instances / (entry.image_id + ".png");
        if (fs::exists(inst))
            entry.instance_path = inst;
        entries.push_back(std::move(entry));
    }
    return entries;
}

} // namespace

std::vector<DatasetEntry> load_dataset(const fs::path& root,
                                       const std::optional<fs::path>& manifest) {
    std::optional<fs::path> manifest_path = manifest;
    if (!manifest_path && fs::exists(root / "manifest.json"))
        manifest_path = root / "manifest.json";

    std::vector<DatasetEntry> entries = manifest_path ? entries_from_manifest(root, *manifest_path)
                                                      : entries_from_scan(root);
    std::sort(entries.begin(), entries.end(),
              [](const DatasetEntry& a, const DatasetEntry& b) { return a.image_id < b.image_id; });

    std::set<std::string> seen;
    for (const auto& e : entries)
        if (!seen.insert(e.image_id).second)
            throw Error("duplicate image_id '" + e.image_id + "' in dataset");

    // Cross-check raster dimensions without decoding the pixel payload.
    for (const auto& e : entries) {
        if (!fs::exists(e.image_path))
            throw Error("missing image for '" + e.image_id + "': " + e.image_path.string());
        if (!fs::exists(e.label_path))
            throw Error("missing label for image '" + e.image_id + "': expected " +
                        e.label_path.string());
        auto [iw, ih] = read_image_dims(e.image_path);
        auto [lw, lh] = read_image_dims(e.label_path);
        if (iw != lw || ih != lh)
            throw Error("dimension mismatch for '" + e.image_id + "': image " +
                        std::to_string(iw) + "x" + std::to_string(ih) + " vs label " +
                        std::to_string(lw) + "x" + std::to_string(lh));
        if (e.instance_path) {
            auto [nw, nh] = read_image_dims(*e.instance_path);
            if (nw != iw || nh != ih)
                throw Error("dimension mismatch for '" + e.image_id +
                            "': instance raster disagrees with image");
        }
    }
    return entries;
}

LoadedEntry load_entry(const DatasetEntry& entry, const DatasetConfig& config) {
    LoadedEntry out;
    out.entry = entry;
    out.image = read_rgb(entry.image_path);
    GrayImage16 labels = read_gray(entry.label_path);
    if (labels.width != out.image.width || labels.height != out.image.height)
        throw Error("dimension mismatch for '" + entry.image_id + "'");

    std::vector<uint16_t> label_values(labels.data.begin(), labels.data.end());
    std::vector<uint32_t> instance_values;
    if (entry.instance_path) {
        GrayImage16 inst = read_gray(*entry.instance_path);
        if (inst.width != labels.width || inst.height != labels.height)
            throw Error("instance raster size mismatch for '" + entry.image_id + "'");
        instance_values.assign(inst.data.begin(), inst.data.end());
    }
    out.map = SemanticMap::make(labels.width, labels.height, config.num_classes,
                                std::move(label_values), config.class_kinds,
                                std::move(instance_values));
    return out;
}

} // namespace retguide

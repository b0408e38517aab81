// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "retguide/image.hpp"

namespace retguide {

// Class layout of a dataset: how many classes exist, which are foreground
// (instance things) vs background (stuff), and optional display names.
struct DatasetConfig {
    int num_classes = 0;
    std::vector<ClassKind> class_kinds;
    std::vector<std::string> class_names; // optional, may be empty

    static DatasetConfig load(const std::filesystem::path& path);
    static DatasetConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
    // FNV-1a over the canonical JSON text; persisted in database metadata.
    uint64_t hash() const;
};

struct DatasetEntry {
    std::string image_id;
    std::filesystem::path image_path;
    std::filesystem::path label_path;
    std::optional<std::filesystem::path> instance_path;
};

// Scans root/{images,labels,instances} or, when given, takes the manifest's
// triples verbatim. Entries come back sorted by image_id and with raster
// dimensions already cross-checked.
std::vector<DatasetEntry> load_dataset(const std::filesystem::path& root,
                                       const std::optional<std::filesystem::path>& manifest = {});

struct LoadedEntry {
    DatasetEntry entry;
    RgbImage image;
    SemanticMap map;
};

LoadedEntry load_entry(const DatasetEntry& entry, const DatasetConfig& config);

} // namespace retguide

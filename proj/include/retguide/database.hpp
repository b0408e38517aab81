// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "retguide/dataset.hpp"
#include "retguide/segment.hpp"

namespace retguide {

struct DatabaseMeta {
    uint32_t version_major = 0;
    uint32_t version_minor = 0;
    DatasetConfig config;
    uint64_t config_hash = 0;
    int min_area = kDefaultMinArea;
    uint64_t record_count = 0;
};

// Category-indexed collection of segment records. Immutable once built;
// concurrent queries need no locking.
class SegmentDatabase {
public:
    SegmentDatabase() = default;
    SegmentDatabase(std::vector<SegmentRecord> records, DatabaseMeta meta);

    const std::vector<SegmentRecord>& records() const { return records_; }
    const DatabaseMeta& meta() const { return meta_; }
    size_t size() const { return records_.size(); }

    // Sorted segment ids for a category; empty span when the bucket is absent.
    std::span<const uint64_t> bucket(uint32_t category) const;
    const SegmentRecord* find(uint64_t segment_id) const;

private:
    std::vector<SegmentRecord> records_; // sorted by segment_id
    std::map<uint32_t, std::vector<uint64_t>> by_category_;
    DatabaseMeta meta_;
};

// Decomposes every entry (in the given order) and assembles the database.
// Decomposition runs across `workers` threads; output is order-deterministic.
SegmentDatabase build_database(const std::vector<DatasetEntry>& entries,
                               const DatasetConfig& config, int min_area = kDefaultMinArea,
                               int workers = 0);

// Versioned, checksummed binary container plus a JSON metadata sidecar at
// <path>.meta.json. Rebuilding from identical inputs reproduces identical bytes.
void save_database(const SegmentDatabase& db, const std::filesystem::path& path);
SegmentDatabase load_database(const std::filesystem::path& path);

inline constexpr uint32_t kDbVersionMajor = 1;
inline constexpr uint32_t kDbVersionMinor = 0;

} // namespace retguide

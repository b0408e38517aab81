// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/database.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <json.hpp>
#include <zlib.h>

#include "retguide/parallel.hpp"

namespace retguide {

namespace fs = std::filesystem;
using nlohmann::json;

SegmentDatabase::SegmentDatabase(std::vector<SegmentRecord> records, DatabaseMeta meta)
    : records_(std::move(records)), meta_(std::move(meta)) {
    for (size_t i = 0; i < records_.size(); ++i) {
        const SegmentRecord& rec = records_[i];
        if (i > 0 && records_[i - 1].segment_id >= rec.segment_id)
            throw Error("database records must have strictly increasing segment ids");
        if (rec.mask.width() != rec.bbox.w || rec.mask.height() != rec.bbox.h ||
            rec.pixels.width != rec.bbox.w || rec.pixels.height != rec.bbox.h)
            throw Error("database record " + std::to_string(rec.segment_id) +
                        " has inconsistent dimensions");
        if (rec.area == 0 || rec.area != rec.mask.popcount())
            throw Error("database record " + std::to_string(rec.segment_id) +
                        " has wrong area");
        if (rec.signature.width() != kSignatureSize || rec.signature.height() != kSignatureSize)
            throw Error("database record " + std::to_string(rec.segment_id) +
                        " has malformed signature");
        by_category_[rec.category].push_back(rec.segment_id);
    }
    meta_.record_count = records_.size();
}

std::span<const uint64_t> SegmentDatabase::bucket(uint32_t category) const {
    auto it = by_category_.find(category);
    if (it == by_category_.end())
        return {};
    return it->second;
}

const SegmentRecord* SegmentDatabase::find(uint64_t segment_id) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), segment_id,
                               [](const SegmentRecord& r, uint64_t id) { return r.segment_id < id; });
    if (it == records_.end() || it->segment_id != segment_id)
        return nullptr;
    return &*it;
}

SegmentDatabase build_database(const std::vector<DatasetEntry>& entries,
                               const DatasetConfig& config, int min_area, int workers) {
    if (entries.empty())
        throw Error("build_database requires at least one dataset entry");

    std::vector<std::vector<SegmentRecord>> per_entry(entries.size());
    parallel_for(entries.size(), workers, [&](size_t i) {
        try {
            LoadedEntry loaded = load_entry(entries[i], config);
            per_entry[i] = decompose(loaded.image, loaded.map, entries[i].image_id, min_area);
        } catch (const std::exception& e) {
            throw Error("failed to decompose '" + entries[i].image_id + "': " + e.what());
        }
    });

    std::vector<SegmentRecord> records;
    uint64_t next_id = 1;
    for (auto& batch : per_entry) {
        for (auto& rec : batch) {
            rec.segment_id = next_id++;
            records.push_back(std::move(rec));
        }
    }

    DatabaseMeta meta;
    meta.version_major = kDbVersionMajor;
    meta.version_minor = kDbVersionMinor;
    meta.config = config;
    meta.config_hash = config.hash();
    meta.min_area = min_area;
    return SegmentDatabase(std::move(records), std::move(meta));
}

namespace {

constexpr char kMagic[8] = {'R', 'G', 'S', 'E', 'G', 'D', 'B', '\0'};

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i)
        buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_i32(std::string& buf, int32_t v) {
    put_u32(buf, static_cast<uint32_t>(v));
}

struct Cursor {
    const uint8_t* data;
    size_t size;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > size)
            throw Error("database file truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    int32_t i32() { return static_cast<int32_t>(u32()); }
    std::string bytes(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
};

void append_mask_bits(std::string& buf, const BinaryMask& mask) {
    for (uint64_t w : mask.words())
        put_u64(buf, w);
}

BinaryMask read_mask_bits(Cursor& c, int w, int h) {
    BinaryMask mask(w, h);
    auto words = mask.words();
    for (auto& word : words)
        word = c.u64();
    // Trailing padding bits must be clear so word-wise comparisons stay valid.
    size_t bits = static_cast<size_t>(w) * h;
    if (bits % 64 != 0) {
        uint64_t keep = (uint64_t{1} << (bits % 64)) - 1;
        if (words[words.size() - 1] & ~keep)
            throw Error("database mask has nonzero padding bits");
    }
    return mask;
}

} // namespace

void save_database(const SegmentDatabase& db, const fs::path& path) {
    // Record table first, blobs after; all offsets relative to the blob region.
    std::string table;
    std::string blobs;
    for (const SegmentRecord& rec : db.records()) {
        put_u64(table, rec.segment_id);
        put_u32(table, rec.category);
        put_i32(table, rec.bbox.x);
        put_i32(table, rec.bbox.y);
        put_i32(table, rec.bbox.w);
        put_i32(table, rec.bbox.h);
        put_u64(table, rec.area);
        put_u64(table, blobs.size()); // source id
        put_u32(table, static_cast<uint32_t>(rec.source_image_id.size()));
        blobs.append(rec.source_image_id);
        put_u64(table, blobs.size()); // mask words
        append_mask_bits(blobs, rec.mask);
        put_u64(table, blobs.size()); // rgb pixels
        blobs.append(reinterpret_cast<const char*>(rec.pixels.data.data()),
                     rec.pixels.data.size());
        put_u64(table, blobs.size()); // signature, fixed 2048 bytes
        append_mask_bits(blobs, rec.signature);
    }

    std::string payload = table + blobs;
    uint32_t crc = static_cast<uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));

    std::string header;
    header.append(kMagic, 8);
    put_u32(header, db.meta().version_major == 0 ? kDbVersionMajor : db.meta().version_major);
    put_u32(header, db.meta().version_minor);
    put_u64(header, db.records().size());
    put_u64(header, table.size());
    put_u32(header, crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write database " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out)
        throw Error("write failed for " + path.string());

    json meta{{"format_version",
               std::to_string(kDbVersionMajor) + "." + std::to_string(kDbVersionMinor)},
              {"record_count", db.records().size()},
              {"min_area", db.meta().min_area},
              {"config_hash", db.meta().config_hash},
              {"dataset_config", json::parse(db.meta().config.to_json_text())}};
    std::ofstream meta_out(path.string() + ".meta.json", std::ios::trunc);
    if (!meta_out)
        throw Error("cannot write database sidecar for " + path.string());
    meta_out << meta.dump(2) << "\n";
}

SegmentDatabase load_database(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open database " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Cursor c{reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()};
    if (c.bytes(8) != std::string(kMagic, 8))
        throw Error("not a segment database: " + path.string());
    uint32_t major = c.u32();
    uint32_t minor = c.u32();
    if (major != kDbVersionMajor)
        throw Error("database version " + std::to_string(major) + "." + std::to_string(minor) +
                    " is not readable by this build (supports " +
                    std::to_string(kDbVersionMajor) + "." + std::to_string(kDbVersionMinor) + ")");
    uint64_t record_count = c.u64();
    uint64_t table_size = c.u64();
    uint32_t stored_crc = c.u32();

    size_t payload_start = c.pos;
    if (payload_start + table_size > bytes.size())
        throw Error("database file truncated");
    uint32_t crc = static_cast<uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(bytes.data() + payload_start),
              static_cast<uInt>(bytes.size() - payload_start)));
    if (crc != stored_crc)
        throw Error("database checksum mismatch (file truncated or corrupted): " + path.string());

    size_t blob_start = payload_start + table_size;
    std::vector<SegmentRecord> records;
    records.reserve(record_count);
    for (uint64_t i = 0; i < record_count; ++i) {
        SegmentRecord rec;
        rec.segment_id = c.u64();
        rec.category = c.u32();
        rec.bbox.x = c.i32();
        rec.bbox.y = c.i32();
        rec.bbox.w = c.i32();
        rec.bbox.h = c.i32();
        rec.area = c.u64();
        uint64_t src_off = c.u64();
        uint32_t src_len = c.u32();
        uint64_t mask_off = c.u64();
        uint64_t rgb_off = c.u64();
        uint64_t sig_off = c.u64();
        if (rec.bbox.w < 1 || rec.bbox.h < 1)
            throw Error("database record with empty bbox");

        Cursor blob{c.data, c.size, blob_start + src_off};
        rec.source_image_id = blob.bytes(src_len);
        blob.pos = blob_start + mask_off;
        rec.mask = read_mask_bits(blob, rec.bbox.w, rec.bbox.h);
        blob.pos = blob_start + rgb_off;
        std::string rgb = blob.bytes(static_cast<size_t>(rec.bbox.w) * rec.bbox.h * 3);
        rec.pixels = RgbImage(rec.bbox.w, rec.bbox.h);
        std::memcpy(rec.pixels.data.data(), rgb.data(), rgb.size());
        blob.pos = blob_start + sig_off;
        rec.signature = read_mask_bits(blob, kSignatureSize, kSignatureSize);
        records.push_back(std::move(rec));
    }

    fs::path meta_path = path.string() + ".meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in)
        throw Error("missing database sidecar " + meta_path.string());
    DatabaseMeta m;
    m.version_major = major;
    m.version_minor = minor;
    try {
        json meta = json::parse(meta_in);
        m.config = DatasetConfig::from_json_text(meta.at("dataset_config").dump());
        m.config_hash = meta.at("config_hash").get<uint64_t>();
        m.min_area = meta.at("min_area").get<int>();
        if (meta.at("record_count").get<uint64_t>() != record_count)
            throw Error("database sidecar record count disagrees with container");
    } catch (const json::exception& e) {
        throw Error("database sidecar " + meta_path.string() + ": " + e.what());
    }
    return SegmentDatabase(std::move(records), std::move(m));
}

} // namespace retguide

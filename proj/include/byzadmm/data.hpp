#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "byzadmm/errors.hpp"
#include "byzadmm/rng.hpp"
#include "byzadmm/vec.hpp"

namespace byzadmm {

struct Dataset {
    std::vector<double> features; // row-major, rows x feature_count
    std::vector<std::int32_t> labels;
    std::int64_t rows = 0;
    std::int32_t feature_count = 0;
    std::int32_t class_count = 0;

    std::span<const double> row(std::int64_t i) const {
        return {features.data() + i * feature_count, static_cast<std::size_t>(feature_count)};
    }
};

inline void validate_dataset(const Dataset& ds, const char* where) {
    if (ds.rows < 1) throw ParseError(std::string(where) + ": dataset is empty");
    if (static_cast<std::int64_t>(ds.features.size()) != ds.rows * ds.feature_count)
        throw ParseError(std::string(where) + ": feature matrix size mismatch");
    if (static_cast<std::int64_t>(ds.labels.size()) != ds.rows)
        throw ParseError(std::string(where) + ": label count mismatch");
    for (std::int64_t i = 0; i < ds.rows; ++i) {
        if (ds.labels[i] < 0 || ds.labels[i] >= ds.class_count)
            throw ParseError(std::string(where) + ": label out of range at row " + std::to_string(i));
    }
    for (double v : ds.features) {
        if (!std::isfinite(v)) throw ParseError(std::string(where) + ": non-finite feature value");
    }
}

// ---------------------------------------------------------------------------
// IDX (big-endian binary container used by the MNIST distribution)
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                               const char* what) {
    if (offset + 4 > bytes.size()) {
        throw ParseError(std::string("idx: truncated while reading ") + what + " at byte offset " +
                         std::to_string(offset));
    }
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

} // namespace detail

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Parses an IDX image/label pair into a dataset with pixel features in [0,1].
inline Dataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
    const std::uint32_t img_magic = detail::read_be32(images, 0, "image magic");
    if (img_magic != kIdxImagesMagic) {
        throw ParseError("idx: unexpected magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%08x", img_magic);
            return std::string(buf);
        }() + " at byte offset 0 of image file (want 0x00000803)");
    }
    const std::uint32_t lbl_magic = detail::read_be32(labels, 0, "label magic");
    if (lbl_magic != kIdxLabelsMagic) {
        throw ParseError("idx: unexpected magic in label file at byte offset 0 (want 0x00000801)");
    }
    const std::uint32_t n_images = detail::read_be32(images, 4, "image count");
    const std::uint32_t rows = detail::read_be32(images, 8, "row count");
    const std::uint32_t cols = detail::read_be32(images, 12, "column count");
    const std::uint32_t n_labels = detail::read_be32(labels, 4, "label count");
    if (n_images != n_labels) {
        throw ParseError("idx: image count " + std::to_string(n_images) + " != label count " +
                         std::to_string(n_labels));
    }
    const std::size_t pixels = std::size_t(n_images) * rows * cols;
    if (images.size() != 16 + pixels) {
        throw ParseError("idx: image payload truncated at byte offset " +
                         std::to_string(images.size()) + " (want " + std::to_string(16 + pixels) +
                         " bytes)");
    }
    if (labels.size() != 8 + n_labels) {
        throw ParseError("idx: label payload truncated at byte offset " +
                         std::to_string(labels.size()));
    }

    Dataset ds;
    ds.rows = n_images;
    ds.feature_count = static_cast<std::int32_t>(rows * cols);
    ds.features.resize(pixels);
    for (std::size_t t = 0; t < pixels; ++t) ds.features[t] = images[16 + t] / 255.0;
    ds.labels.resize(n_labels);
    std::int32_t max_label = 0;
    for (std::uint32_t i = 0; i < n_labels; ++i) {
        ds.labels[i] = labels[8 + i];
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.class_count = max_label + 1;
    validate_dataset(ds, "parse_idx");
    return ds;
}

// Serializes byte-valued features back to IDX. Only exact for datasets whose
// features are multiples of 1/255 (all IDX-parsed and synthetic sets are).
inline std::vector<std::uint8_t> serialize_idx_images(const Dataset& ds, std::uint32_t rows,
                                                      std::uint32_t cols) {
    if (static_cast<std::int64_t>(rows) * cols != ds.feature_count)
        throw ConfigError("serialize_idx_images: rows*cols must equal feature_count");
    std::vector<std::uint8_t> out;
    out.reserve(16 + ds.features.size());
    detail::write_be32(out, kIdxImagesMagic);
    detail::write_be32(out, static_cast<std::uint32_t>(ds.rows));
    detail::write_be32(out, rows);
    detail::write_be32(out, cols);
    for (double v : ds.features)
        out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    return out;
}

inline std::vector<std::uint8_t> serialize_idx_labels(const Dataset& ds) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + ds.labels.size());
    detail::write_be32(out, kIdxLabelsMagic);
    detail::write_be32(out, static_cast<std::uint32_t>(ds.rows));
    for (std::int32_t l : ds.labels) out.push_back(static_cast<std::uint8_t>(l));
    return out;
}

// ---------------------------------------------------------------------------
// gzip + file loading
// ---------------------------------------------------------------------------

inline bool looks_gzipped(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw IoError("gunzip: inflateInit2 failed");
    std::vector<std::uint8_t> out;
    out.reserve(bytes.size() * 4);
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ParseError("gunzip: corrupt gzip stream (zlib rc " + std::to_string(rc) + ")");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

inline std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> bytes) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw IoError("gzip: deflateInit2 failed");
    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = deflate(&zs, Z_FINISH);
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END);
    deflateEnd(&zs);
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

// Reads a file, transparently decompressing it when it carries the gzip magic.
inline std::vector<std::uint8_t> read_maybe_gzipped(const std::string& path) {
    auto bytes = read_file_bytes(path);
    if (looks_gzipped(bytes)) return gunzip(bytes);
    return bytes;
}

inline Dataset load_idx_files(const std::string& images_path, const std::string& labels_path) {
    const auto images = read_maybe_gzipped(images_path);
    const auto labels = read_maybe_gzipped(labels_path);
    return parse_idx(images, labels);
}

// ---------------------------------------------------------------------------
// LIBSVM text format:  "<label> idx:value idx:value ..." with 1-based,
// strictly increasing indices. Absent indices are zero.
// ---------------------------------------------------------------------------

inline Dataset parse_libsvm(std::string_view text, std::int32_t feature_count) {
    if (feature_count < 1) throw ConfigError("parse_libsvm: feature_count must be >= 1");
    std::vector<double> features;
    std::vector<std::int64_t> raw_labels;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        // skip blank lines
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        const std::string err_at = " (line " + std::to_string(line_no) + ")";
        std::size_t cur = line.find_first_not_of(" \t");
        std::size_t sp = line.find_first_of(" \t", cur);
        const std::string label_tok(line.substr(cur, sp - cur));
        std::int64_t label = 0;
        try {
            std::size_t used = 0;
            label = std::stoll(label_tok, &used);
            if (used != label_tok.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("libsvm: bad label '" + label_tok + "'" + err_at);
        }
        raw_labels.push_back(label);
        features.insert(features.end(), feature_count, 0.0);
        double* row = features.data() + features.size() - feature_count;

        std::int64_t prev_idx = 0;
        cur = sp;
        while (cur != std::string_view::npos && cur < line.size()) {
            cur = line.find_first_not_of(" \t", cur);
            if (cur == std::string_view::npos) break;
            std::size_t end = line.find_first_of(" \t", cur);
            if (end == std::string_view::npos) end = line.size();
            const std::string pair(line.substr(cur, end - cur));
            cur = end;
            const std::size_t colon = pair.find(':');
            if (colon == std::string::npos)
                throw ParseError("libsvm: malformed pair '" + pair + "'" + err_at);
            std::int64_t idx = 0;
            double val = 0.0;
            try {
                std::size_t used = 0;
                idx = std::stoll(pair.substr(0, colon), &used);
                if (used != colon) throw std::invalid_argument("trailing");
                const std::string val_tok = pair.substr(colon + 1);
                val = std::stod(val_tok, &used);
                if (used != val_tok.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError("libsvm: malformed pair '" + pair + "'" + err_at);
            }
            if (idx <= prev_idx)
                throw ParseError("libsvm: indices not strictly increasing" + err_at);
            if (idx > feature_count)
                throw ParseError("libsvm: index " + std::to_string(idx) + " exceeds declared " +
                                 std::to_string(feature_count) + err_at);
            row[idx - 1] = val;
            prev_idx = idx;
        }
    }
    if (raw_labels.empty()) throw ParseError("libsvm: no samples found");

    // remap labels to contiguous 0-based classes, ordered by raw value
    std::vector<std::int64_t> distinct = raw_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::map<std::int64_t, std::int32_t> remap;
    for (std::size_t c = 0; c < distinct.size(); ++c)
        remap[distinct[c]] = static_cast<std::int32_t>(c);

    Dataset ds;
    ds.rows = static_cast<std::int64_t>(raw_labels.size());
    ds.feature_count = feature_count;
    ds.class_count = static_cast<std::int32_t>(distinct.size());
    ds.features = std::move(features);
    ds.labels.reserve(raw_labels.size());
    for (std::int64_t l : raw_labels) ds.labels.push_back(remap[l]);
    validate_dataset(ds, "parse_libsvm");
    return ds;
}

inline Dataset load_libsvm_file(const std::string& path, std::int32_t feature_count) {
    const auto bytes = read_maybe_gzipped(path);
    return parse_libsvm(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        feature_count);
}

// Per-column standardization to zero mean / unit variance (columns with zero
// variance are left centered only). Applied to COVERTYPE-style raw features.
inline void standardize_columns(Dataset& ds) {
    for (std::int32_t f = 0; f < ds.feature_count; ++f) {
        double mean = 0.0;
        for (std::int64_t i = 0; i < ds.rows; ++i) mean += ds.features[i * ds.feature_count + f];
        mean /= static_cast<double>(ds.rows);
        double var = 0.0;
        for (std::int64_t i = 0; i < ds.rows; ++i) {
            const double d = ds.features[i * ds.feature_count + f] - mean;
            var += d * d;
        }
        var /= static_cast<double>(ds.rows);
        const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
        for (std::int64_t i = 0; i < ds.rows; ++i) {
            double& v = ds.features[i * ds.feature_count + f];
            v = (v - mean) * inv_std;
        }
    }
}

// ---------------------------------------------------------------------------
// Partitioning
// ---------------------------------------------------------------------------

struct Partition {
    std::vector<std::vector<std::int32_t>> shards; // per-worker dataset row indices
};

inline void validate_partition(const Partition& p, std::int64_t rows) {
    std::vector<char> seen(rows, 0);
    std::int64_t total = 0;
    for (const auto& shard : p.shards) {
        if (shard.empty()) throw ConfigError("partition: a worker received an empty shard");
        for (std::int32_t idx : shard) {
            if (idx < 0 || idx >= rows) throw ConfigError("partition: index out of range");
            if (seen[idx]) throw ConfigError("partition: duplicated index " + std::to_string(idx));
            seen[idx] = 1;
            ++total;
        }
    }
    if (total != rows) throw ConfigError("partition: dropped indices");
}

// Random even split: shard sizes differ by at most one, assignment is a
// seeded permutation.
inline Partition partition_iid(const Dataset& ds, int workers, std::uint64_t seed) {
    if (workers < 1) throw ConfigError("partition_iid: worker count must be >= 1");
    if (ds.rows < workers) throw ConfigError("partition_iid: fewer samples than workers");
    std::vector<std::int32_t> perm(ds.rows);
    std::iota(perm.begin(), perm.end(), 0);
    RngStream rng = worker_stream(seed, 0, 0, StreamPurpose::Partition);
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.index(i + 1)]);
    }
    Partition p;
    p.shards.resize(workers);
    const std::int64_t base = ds.rows / workers;
    const std::int64_t extra = ds.rows % workers;
    std::size_t at = 0;
    for (int w = 0; w < workers; ++w) {
        const std::int64_t take = base + (w < extra ? 1 : 0);
        p.shards[w].assign(perm.begin() + at, perm.begin() + at + take);
        at += take;
    }
    validate_partition(p, ds.rows);
    return p;
}

// Non-i.i.d. scheme: every two workers share one class. Workers 2c and 2c+1
// each receive one half of class c's samples. Requires workers == 2*classes.
inline Partition partition_digit_pairs(const Dataset& ds, int workers) {
    if (workers != 2 * ds.class_count) {
        throw ConfigError("partition_digit_pairs: needs exactly 2 workers per class (" +
                          std::to_string(2 * ds.class_count) + " for this dataset, got " +
                          std::to_string(workers) + ")");
    }
    std::vector<std::vector<std::int32_t>> by_class(ds.class_count);
    for (std::int64_t i = 0; i < ds.rows; ++i)
        by_class[ds.labels[i]].push_back(static_cast<std::int32_t>(i));
    Partition p;
    p.shards.resize(workers);
    for (std::int32_t c = 0; c < ds.class_count; ++c) {
        const auto& idx = by_class[c];
        if (idx.size() < 2)
            throw ConfigError("partition_digit_pairs: class " + std::to_string(c) +
                              " has fewer than 2 samples");
        const std::size_t half = idx.size() / 2;
        p.shards[2 * c].assign(idx.begin(), idx.begin() + half);
        p.shards[2 * c + 1].assign(idx.begin() + half, idx.end());
    }
    validate_partition(p, ds.rows);
    return p;
}

// batch_size indices drawn uniformly with replacement from the shard
inline std::vector<std::int32_t> sample_batch(std::span<const std::int32_t> shard, int batch_size,
                                              RngStream& rng) {
    if (shard.empty()) throw ConfigError("sample_batch: empty shard");
    std::vector<std::int32_t> batch(batch_size);
    for (int t = 0; t < batch_size; ++t) batch[t] = shard[rng.index(shard.size())];
    return batch;
}

// ---------------------------------------------------------------------------
// Desk-scale helpers
// ---------------------------------------------------------------------------

// Seeded per-class subsample of at most `cap` rows, keeping class proportions.
inline Dataset stratified_subsample(const Dataset& ds, std::int64_t cap, std::uint64_t seed) {
    if (cap >= ds.rows) return ds;
    std::vector<std::vector<std::int32_t>> by_class(ds.class_count);
    for (std::int64_t i = 0; i < ds.rows; ++i)
        by_class[ds.labels[i]].push_back(static_cast<std::int32_t>(i));

    RngStream rng = worker_stream(seed, 1, 0, StreamPurpose::Partition);
    std::vector<std::int32_t> keep;
    keep.reserve(cap);
    // largest-remainder apportionment of cap across classes
    std::vector<std::int64_t> take(ds.class_count, 0);
    std::vector<std::pair<double, std::int32_t>> remainders;
    std::int64_t assigned = 0;
    for (std::int32_t c = 0; c < ds.class_count; ++c) {
        const double exact = static_cast<double>(cap) * by_class[c].size() / ds.rows;
        take[c] = static_cast<std::int64_t>(exact);
        assigned += take[c];
        remainders.push_back({exact - static_cast<double>(take[c]), c});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::int64_t t = 0; assigned < cap && t < ds.class_count; ++t, ++assigned)
        ++take[remainders[t].second];

    for (std::int32_t c = 0; c < ds.class_count; ++c) {
        auto& idx = by_class[c];
        for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.index(i + 1)]);
        const std::int64_t n = std::min<std::int64_t>(take[c], idx.size());
        keep.insert(keep.end(), idx.begin(), idx.begin() + n);
    }
    std::sort(keep.begin(), keep.end());

    Dataset out;
    out.rows = static_cast<std::int64_t>(keep.size());
    out.feature_count = ds.feature_count;
    out.class_count = ds.class_count;
    out.features.reserve(out.rows * out.feature_count);
    out.labels.reserve(out.rows);
    for (std::int32_t i : keep) {
        const auto r = ds.row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

// Deterministic synthetic classification set: one byte-quantized template
// image per class plus per-sample noise. Used for fixtures and desk-scale
// runs when no real dataset is on disk. Rows generated with the same seed
// but different sample_offset share class templates and draw disjoint noise
// streams, which is how matching train/test splits are produced.
inline Dataset synthetic_clusters(std::int32_t classes, std::int32_t features, std::int64_t rows,
                                  std::uint64_t seed, double noise = 0.35,
                                  std::int64_t sample_offset = 0) {
    if (classes < 2 || features < 1 || rows < classes)
        throw ConfigError("synthetic_clusters: degenerate shape");
    RngStream tmpl_rng = worker_stream(seed, 0, 0, StreamPurpose::Synthetic);
    std::vector<double> templates(static_cast<std::size_t>(classes) * features);
    for (auto& v : templates) v = tmpl_rng.next_unit();

    Dataset ds;
    ds.rows = rows;
    ds.feature_count = features;
    ds.class_count = classes;
    ds.features.resize(rows * static_cast<std::int64_t>(features));
    ds.labels.resize(rows);
    for (std::int64_t i = 0; i < rows; ++i) {
        const std::int32_t c = static_cast<std::int32_t>(i % classes);
        ds.labels[i] = c;
        RngStream rng = worker_stream(seed, static_cast<std::uint64_t>(sample_offset + i) + 1, 0,
                                      StreamPurpose::Synthetic);
        for (std::int32_t f = 0; f < features; ++f) {
            double v = templates[static_cast<std::size_t>(c) * features + f] + noise * rng.normal();
            v = std::clamp(v, 0.0, 1.0);
            // quantize to byte resolution so IDX round-trips are exact
            ds.features[i * features + f] = std::lround(v * 255.0) / 255.0;
        }
    }
    return ds;
}

} // namespace byzadmm

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "byzadmm/engine.hpp"
#include "byzadmm/errors.hpp"

namespace byzadmm {

inline std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_cell(const std::optional<double>& v) {
    return v ? format_value(*v) : std::string();
}

// temp-file + rename so partially written outputs never shadow good ones
inline void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write file: " + tmp);
        out << content;
        if (!out) throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp + " -> " + path + ": " + ec.message());
}

inline const char* kMetricsHeader =
    "k,algorithm,top1_accuracy,master_error,worker_error,consensus_gap,lyapunov,ergodic_gap";

inline std::string metrics_to_csv(const std::vector<MetricsRecord>& records,
                                  const std::string& algorithm) {
    if (records.empty()) throw ConfigError("emit_metrics: empty record stream");
    std::ostringstream out;
    out << kMetricsHeader << '\n';
    for (const auto& r : records) {
        out << r.k << ',' << algorithm << ',' << format_cell(r.top1_accuracy) << ','
            << format_cell(r.master_error) << ',' << format_cell(r.worker_error) << ','
            << format_cell(r.consensus_gap) << ',' << format_cell(r.lyapunov) << ','
            << format_cell(r.ergodic_gap) << '\n';
    }
    return out.str();
}

inline void emit_metrics(const std::vector<MetricsRecord>& records, const std::string& path,
                         const std::string& algorithm) {
    atomic_write_file(path, metrics_to_csv(records, algorithm));
}

// Reads back a metrics CSV produced by emit_metrics.
struct ParsedMetrics {
    std::string algorithm;
    std::vector<MetricsRecord> records;
};

inline ParsedMetrics parse_metrics_csv(std::string_view text) {
    ParsedMetrics out;
    std::size_t pos = 0;
    bool header = true;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string line(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        if (header) {
            if (line != kMetricsHeader) throw ParseError("metrics csv: unexpected header");
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        cells.resize(8);
        MetricsRecord r;
        r.k = std::stol(cells[0]);
        out.algorithm = cells[1];
        const auto opt = [&](const std::string& c) -> std::optional<double> {
            if (c.empty()) return std::nullopt;
            return std::stod(c);
        };
        r.top1_accuracy = opt(cells[2]);
        r.master_error = opt(cells[3]);
        r.worker_error = opt(cells[4]);
        r.consensus_gap = opt(cells[5]);
        r.lyapunov = opt(cells[6]);
        r.ergodic_gap = opt(cells[7]);
        out.records.push_back(r);
    }
    if (header) throw ParseError("metrics csv: missing header");
    return out;
}

// Picks the headline metric of a record: accuracy when present, otherwise
// squared master error.
inline std::optional<double> headline_metric(const MetricsRecord& r) {
    if (r.top1_accuracy) return r.top1_accuracy;
    if (r.master_error) return r.master_error;
    return r.consensus_gap;
}

// Space-separated k + one headline column per run, consumable by any
// generic plotting tool.
inline std::string plot_dat_text(const std::vector<std::string>& names,
                                 const std::vector<std::vector<MetricsRecord>>& runs) {
    if (runs.empty()) throw ConfigError("plot_dat: no runs");
    std::ostringstream out;
    out << "# k";
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
    const std::size_t rows = runs.front().size();
    for (const auto& r : runs)
        if (r.size() != rows) throw ConfigError("plot_dat: runs disagree on record count");
    for (std::size_t i = 0; i < rows; ++i) {
        out << runs.front()[i].k;
        for (const auto& r : runs) {
            const auto v = headline_metric(r[i]);
            out << ' ' << (v ? format_value(*v) : std::string("nan"));
        }
        out << '\n';
    }
    return out.str();
}

// summary.csv: one row per run, holding the final record verbatim.
inline std::string summary_csv_text(const std::vector<std::string>& run_names,
                                    const std::vector<std::string>& algorithms,
                                    const std::vector<MetricsRecord>& finals) {
    std::ostringstream out;
    out << "run," << kMetricsHeader << '\n';
    for (std::size_t i = 0; i < finals.size(); ++i) {
        const auto& r = finals[i];
        out << run_names[i] << ',' << r.k << ',' << algorithms[i] << ','
            << format_cell(r.top1_accuracy) << ',' << format_cell(r.master_error) << ','
            << format_cell(r.worker_error) << ',' << format_cell(r.consensus_gap) << ','
            << format_cell(r.lyapunov) << ',' << format_cell(r.ergodic_gap) << '\n';
    }
    return out.str();
}

} // namespace byzadmm

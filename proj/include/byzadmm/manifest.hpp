#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "byzadmm/config.hpp"
#include "byzadmm/csv.hpp"
#include "byzadmm/engine.hpp"
#include "byzadmm/errors.hpp"

namespace byzadmm {

// A declarative description of what `run`/`sweep` should execute: one config,
// a roster of algorithms, and at most one sweep axis.
struct RunManifest {
    std::string config_path;
    std::string out_dir;
    bool overwrite = false;
    std::vector<std::string> algorithms;        // empty: derive from the config
    std::vector<double> lambda_sweep;           // optional sweep axis
    std::vector<int> q_sweep;                   // optional sweep axis
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> attack_override; // attack kind name
    bool force_desk_scale = false;
};

namespace detail {

inline ExperimentConfig apply_algorithm(ExperimentConfig cfg, const std::string& name) {
    if (name == "admm") {
        cfg.protocol = Protocol::Admm;
    } else if (name == "rsa") {
        cfg.protocol = Protocol::Rsa;
    } else if (name == "sgd-mean") {
        cfg.protocol = Protocol::AggSgd;
        cfg.aggregation = AggregationRule::Mean;
    } else if (name == "sgd-median") {
        cfg.protocol = Protocol::AggSgd;
        cfg.aggregation = AggregationRule::CoordinateMedian;
    } else if (name == "sgd-geomed") {
        cfg.protocol = Protocol::AggSgd;
        cfg.aggregation = AggregationRule::GeometricMedian;
    } else if (name == "ideal-sgd") {
        cfg.protocol = Protocol::AggSgd;
        cfg.aggregation = AggregationRule::Mean;
        cfg.attack = AttackSpec{}; // no attack, no byzantine workers
        cfg.hyper.q = 0;
    } else {
        throw ConfigError("unknown algorithm '" + name +
                          "' (want admm/rsa/sgd-mean/sgd-median/sgd-geomed/ideal-sgd)");
    }
    return cfg;
}

inline std::string algorithm_name_of(const ExperimentConfig& cfg) {
    switch (cfg.protocol) {
        case Protocol::Admm: return "admm";
        case Protocol::Rsa: return "rsa";
        case Protocol::AggSgd:
            switch (cfg.aggregation) {
                case AggregationRule::Mean: return "sgd-mean";
                case AggregationRule::CoordinateMedian: return "sgd-median";
                case AggregationRule::GeometricMedian: return "sgd-geomed";
            }
    }
    return "unknown";
}

inline AttackSpec::Kind attack_kind_from_name(const std::string& name) {
    if (name == "none") return AttackSpec::Kind::None;
    if (name == "gaussian") return AttackSpec::Kind::Gaussian;
    if (name == "sign-flip") return AttackSpec::Kind::SignFlip;
    if (name == "small-value") return AttackSpec::Kind::SmallValue;
    if (name == "large-value") return AttackSpec::Kind::LargeValue;
    if (name == "copy-regular") return AttackSpec::Kind::CopyRegular;
    throw ConfigError("unknown attack '" + name + "'");
}

inline std::string sweep_label(const RunManifest& m, std::size_t i) {
    if (!m.lambda_sweep.empty()) {
        std::string v = format_value(m.lambda_sweep[i]);
        return "lambda_" + v;
    }
    return "q_" + std::to_string(m.q_sweep[i]);
}

} // namespace detail

// Executes the manifest's roster x sweep grid sequentially. Returns 0 on
// success; on failure the partial outputs survive next to a FAILED marker.
inline int run_manifest(const RunManifest& manifest, std::ostream& log = std::cerr) {
    namespace fs = std::filesystem;
    if (!manifest.lambda_sweep.empty() && !manifest.q_sweep.empty())
        throw ConfigError("sweep: choose one axis, lambda or q");

    const LoadedConfig loaded = load_config(manifest.config_path, manifest.force_desk_scale);

    const fs::path out(manifest.out_dir);
    if (fs::exists(out) && !fs::is_empty(out) && !manifest.overwrite)
        throw IoError("output directory '" + manifest.out_dir +
                      "' is not empty; pass --overwrite to replace its contents");
    fs::create_directories(out);
    atomic_write_file((out / "config.ini").string(), loaded.raw);

    std::vector<std::string> roster = manifest.algorithms;
    if (roster.empty()) roster.push_back(detail::algorithm_name_of(loaded.base));

    const std::size_t sweep_count =
        std::max<std::size_t>(1, manifest.lambda_sweep.size() + manifest.q_sweep.size());
    const bool sweeping = sweep_count > 1 || !manifest.lambda_sweep.empty() || !manifest.q_sweep.empty();

    std::vector<std::string> run_names, run_algs;
    std::vector<MetricsRecord> finals;
    bool failed = false;

    for (std::size_t s = 0; s < sweep_count; ++s) {
        fs::path cell_dir = out;
        std::string cell_label;
        if (sweeping) {
            cell_label = detail::sweep_label(manifest, s);
            cell_dir = out / cell_label;
            fs::create_directories(cell_dir);
        }
        std::vector<std::string> cell_names;
        std::vector<std::vector<MetricsRecord>> cell_runs;
        for (const auto& alg : roster) {
            ExperimentConfig cfg = detail::apply_algorithm(loaded.base, alg);
            if (manifest.seed_override) cfg.seed = *manifest.seed_override;
            if (manifest.attack_override && alg != "ideal-sgd")
                cfg.attack.kind = detail::attack_kind_from_name(*manifest.attack_override);
            if (!manifest.lambda_sweep.empty()) cfg.hyper.lambda = manifest.lambda_sweep[s];
            if (!manifest.q_sweep.empty()) {
                const int q = manifest.q_sweep[s];
                cfg.hyper.q = q;
                cfg.attack.byzantine_ids.clear();
                for (int w = cfg.hyper.m - q; w < cfg.hyper.m; ++w)
                    cfg.attack.byzantine_ids.push_back(w);
                if (alg == "ideal-sgd") {
                    cfg.hyper.q = 0;
                    cfg.attack.byzantine_ids.clear();
                }
            }
            const std::string run_name = cell_label.empty() ? alg : cell_label + "/" + alg;
            try {
                log << "running " << run_name << " ..." << std::endl;
                const auto records = run_experiment(cfg);
                emit_metrics(records, (cell_dir / (alg + ".csv")).string(), alg);
                cell_names.push_back(alg);
                cell_runs.push_back(records);
                run_names.push_back(run_name);
                run_algs.push_back(alg);
                finals.push_back(records.back());
            } catch (const std::exception& ex) {
                failed = true;
                log << "FAILED " << run_name << ": " << ex.what() << std::endl;
                atomic_write_file((cell_dir / (alg + ".FAILED")).string(),
                                  std::string(ex.what()) + "\n");
            }
        }
        if (!cell_runs.empty())
            atomic_write_file((cell_dir / "plot.dat").string(),
                              plot_dat_text(cell_names, cell_runs));
    }

    if (!finals.empty())
        atomic_write_file((out / "summary.csv").string(),
                          summary_csv_text(run_names, run_algs, finals));
    return failed ? 1 : 0;
}

} // namespace byzadmm

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "byzadmm/engine.hpp"
#include "byzadmm/errors.hpp"

namespace byzadmm {

// ---------------------------------------------------------------------------
// Flat INI-style config text:  [section] headers, key = value lines,
// '#'/';' comments. Every key must be consumed; unknown keys are hard errors
// so a typo in an attack name cannot silently fall back to a default.
// ---------------------------------------------------------------------------

class IniConfig {
public:
    static IniConfig parse(std::string_view text) {
        IniConfig ini;
        std::string section;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string_view::npos) eol = text.size();
            std::string line(text.substr(pos, eol - pos));
            pos = eol + 1;
            ++line_no;

            const std::size_t comment = line.find_first_of("#;");
            if (comment != std::string::npos) line.erase(comment);
            trim(line);
            if (line.empty()) {
                if (pos > text.size()) break;
                continue;
            }
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ParseError("config: bad section header (line " + std::to_string(line_no) + ")");
                section = line.substr(1, line.size() - 2);
                trim(section);
                ini.sections_.insert(section);
            } else {
                const std::size_t eq = line.find('=');
                if (eq == std::string::npos)
                    throw ParseError("config: expected 'key = value' (line " + std::to_string(line_no) + ")");
                std::string key = line.substr(0, eq);
                std::string value = line.substr(eq + 1);
                trim(key);
                trim(value);
                if (key.empty())
                    throw ParseError("config: empty key (line " + std::to_string(line_no) + ")");
                if (section.empty())
                    throw ParseError("config: key outside any [section] (line " + std::to_string(line_no) + ")");
                const std::string full = section + "." + key;
                if (ini.values_.count(full))
                    throw ParseError("config: duplicate key '" + full + "' (line " + std::to_string(line_no) + ")");
                ini.values_[full] = value;
            }
            if (pos > text.size()) break;
        }
        return ini;
    }

    std::optional<std::string> maybe(const std::string& section, const std::string& key) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) return std::nullopt;
        consumed_.insert(section + "." + key);
        return it->second;
    }

    std::string require(const std::string& section, const std::string& key) const {
        auto v = maybe(section, key);
        if (!v) throw ConfigError("config: " + key + " required in [" + section + "]");
        return *v;
    }

    double get_double(const std::string& section, const std::string& key, double def) const {
        auto v = maybe(section, key);
        return v ? to_double(section + "." + key, *v) : def;
    }

    double require_double(const std::string& section, const std::string& key) const {
        return to_double(section + "." + key, require(section, key));
    }

    long get_long(const std::string& section, const std::string& key, long def) const {
        auto v = maybe(section, key);
        return v ? to_long(section + "." + key, *v) : def;
    }

    long require_long(const std::string& section, const std::string& key) const {
        return to_long(section + "." + key, require(section, key));
    }

    bool get_bool(const std::string& section, const std::string& key, bool def) const {
        auto v = maybe(section, key);
        if (!v) return def;
        if (*v == "true" || *v == "on" || *v == "1") return true;
        if (*v == "false" || *v == "off" || *v == "0") return false;
        throw ConfigError("config: " + section + "." + key + " must be a boolean, got '" + *v + "'");
    }

    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& def) const {
        auto v = maybe(section, key);
        return v ? *v : def;
    }

    bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

    // rejects any key that was never read
    void reject_unknown() const {
        for (const auto& [full, value] : values_) {
            (void)value;
            if (!consumed_.count(full))
                throw ConfigError("config: unknown key '" + full + "'");
        }
    }

    static double to_double(const std::string& what, const std::string& v) {
        try {
            std::size_t used = 0;
            const double out = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument("trailing");
            return out;
        } catch (const std::exception&) {
            throw ConfigError("config: " + what + " must be a number, got '" + v + "'");
        }
    }

    static long to_long(const std::string& what, const std::string& v) {
        try {
            std::size_t used = 0;
            const long out = std::stol(v, &used);
            if (used != v.size()) throw std::invalid_argument("trailing");
            return out;
        } catch (const std::exception&) {
            throw ConfigError("config: " + what + " must be an integer, got '" + v + "'");
        }
    }

private:
    static void trim(std::string& s) {
        const auto begin = s.find_first_not_of(" \t\r");
        const auto end = s.find_last_not_of(" \t\r");
        s = begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> sections_;
    mutable std::set<std::string> consumed_;
};

// ---------------------------------------------------------------------------
// ExperimentConfig construction
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> parse_number_list(const std::string& what, const std::string& text,
                                             char sep = ',') {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        const auto begin = tok.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        const auto end = tok.find_last_not_of(" \t");
        out.push_back(IniConfig::to_double(what, tok.substr(begin, end - begin + 1)));
    }
    if (out.empty()) throw ConfigError("config: " + what + " is empty");
    return out;
}

inline std::vector<ModelVector> parse_vector_list(const std::string& what, const std::string& text) {
    std::vector<ModelVector> out;
    std::stringstream ss(text);
    std::string group;
    while (std::getline(ss, group, ';')) out.push_back(parse_number_list(what, group));
    if (out.empty()) throw ConfigError("config: " + what + " is empty");
    return out;
}

inline std::string resolve_path(const std::string& path, const std::string& base_dir) {
    namespace fs = std::filesystem;
    if (fs::path(path).is_absolute()) return path;
    const fs::path local = fs::path(base_dir) / path;
    if (fs::exists(local)) return local.string();
    if (const char* env = std::getenv("BYZADMM_DATA_DIR")) {
        const fs::path shared = fs::path(env) / path;
        if (fs::exists(shared)) return shared.string();
    }
    return local.string();
}

inline StepsizeSchedule parse_schedule(const IniConfig& ini, const std::string& role) {
    const std::string kind = ini.require("schedule", role);
    const double c = ini.require_double("schedule", role + "_c");
    const double offset = ini.require_double("schedule", role + "_offset");
    if (kind == "inv-k") {
        InverseK s{c, offset, std::numeric_limits<double>::infinity()};
        if (auto cap = ini.maybe("schedule", role + "_cap"))
            s.cap = IniConfig::to_double("schedule." + role + "_cap", *cap);
        return s;
    }
    if (kind == "inv-sqrt-k") {
        if (ini.maybe("schedule", role + "_cap"))
            throw ConfigError("config: schedule." + role + "_cap is only valid for inv-k");
        return InverseSqrtK{c, offset};
    }
    throw ConfigError("config: schedule." + role + " must be inv-k or inv-sqrt-k, got '" + kind + "'");
}

inline Toggle parse_toggle(const IniConfig& ini, const std::string& section, const std::string& key) {
    const std::string v = ini.get_str(section, key, "auto");
    if (v == "auto") return Toggle::Auto;
    if (v == "on" || v == "true") return Toggle::On;
    if (v == "off" || v == "false") return Toggle::Off;
    throw ConfigError("config: " + section + "." + key + " must be auto/on/off");
}

} // namespace detail

struct LoadedConfig {
    ExperimentConfig base;
    std::string raw; // verbatim config text, preserved next to the outputs
};

inline LoadedConfig load_config_text(std::string_view text, const std::string& base_dir,
                                     bool force_desk_scale = false) {
    const IniConfig ini = IniConfig::parse(text);
    ExperimentConfig cfg;

    // [run]
    if (!ini.maybe("run", "seed")) throw ConfigError("config: seed required in [run]");
    cfg.seed = static_cast<std::uint64_t>(ini.require_long("run", "seed"));
    // require() above consumed the key twice-safe; re-fetch value
    cfg.rounds = ini.require_long("run", "rounds");
    cfg.eval_every = ini.get_long("run", "eval_every", 10);
    cfg.lyapunov = detail::parse_toggle(ini, "run", "lyapunov");
    cfg.compute_optimum = detail::parse_toggle(ini, "run", "compute_optimum");
    cfg.ergodic = ini.get_bool("run", "ergodic", false);

    // [algorithm]
    const std::string protocol = ini.get_str("algorithm", "protocol", "admm");
    if (protocol == "admm") cfg.protocol = Protocol::Admm;
    else if (protocol == "rsa") cfg.protocol = Protocol::Rsa;
    else if (protocol == "sgd") cfg.protocol = Protocol::AggSgd;
    else throw ConfigError("config: algorithm.protocol must be admm/rsa/sgd, got '" + protocol + "'");

    const std::string agg = ini.get_str("algorithm", "aggregation", "mean");
    if (agg == "mean") cfg.aggregation = AggregationRule::Mean;
    else if (agg == "median") cfg.aggregation = AggregationRule::CoordinateMedian;
    else if (agg == "geomed") cfg.aggregation = AggregationRule::GeometricMedian;
    else throw ConfigError("config: algorithm.aggregation must be mean/median/geomed, got '" + agg + "'");

    cfg.hyper.lambda = ini.get_double("algorithm", "lambda", 0.0);
    cfg.hyper.beta = ini.get_double("algorithm", "beta", 1.0);
    cfg.hyper.m = static_cast<int>(ini.require_long("algorithm", "workers"));
    cfg.hyper.q = static_cast<int>(ini.get_long("algorithm", "byzantine", 0));
    cfg.batch_size = static_cast<int>(ini.get_long("algorithm", "batch_size", 32));
    if (cfg.batch_size < 1) throw ConfigError("config: algorithm.batch_size must be >= 1");
    const std::string grads = ini.get_str("algorithm", "gradients", "stochastic");
    if (grads == "exact") cfg.exact_gradients = true;
    else if (grads == "stochastic") cfg.exact_gradients = false;
    else throw ConfigError("config: algorithm.gradients must be exact/stochastic");

    if (auto ids = ini.maybe("algorithm", "byzantine_ids")) {
        for (double v : detail::parse_number_list("algorithm.byzantine_ids", *ids))
            cfg.attack.byzantine_ids.push_back(static_cast<int>(v));
    } else {
        for (int w = cfg.hyper.m - cfg.hyper.q; w < cfg.hyper.m; ++w)
            cfg.attack.byzantine_ids.push_back(w);
    }

    // [attack]
    const std::string kind = ini.get_str("attack", "kind", "none");
    if (kind == "none") cfg.attack.kind = AttackSpec::Kind::None;
    else if (kind == "gaussian") cfg.attack.kind = AttackSpec::Kind::Gaussian;
    else if (kind == "sign-flip") cfg.attack.kind = AttackSpec::Kind::SignFlip;
    else if (kind == "small-value") cfg.attack.kind = AttackSpec::Kind::SmallValue;
    else if (kind == "large-value") cfg.attack.kind = AttackSpec::Kind::LargeValue;
    else if (kind == "copy-regular") cfg.attack.kind = AttackSpec::Kind::CopyRegular;
    else
        throw ConfigError("config: attack.kind must be one of none/gaussian/sign-flip/"
                          "small-value/large-value/copy-regular, got '" + kind + "'");
    cfg.attack.stddev = ini.get_double("attack", "std", 100.0);
    if (auto eps = ini.maybe("attack", "epsilon"))
        cfg.attack.epsilon = IniConfig::to_double("attack.epsilon", *eps);
    if (auto tgt = ini.maybe("attack", "target"))
        cfg.attack.copy_target = static_cast<int>(IniConfig::to_long("attack.target", *tgt));
    else if (cfg.attack.kind == AttackSpec::Kind::CopyRegular)
        throw ConfigError("config: attack.target required for copy-regular");

    // [schedule]
    cfg.master_schedule = detail::parse_schedule(ini, "master");
    cfg.worker_schedule = detail::parse_schedule(ini, "worker");

    // [problem]
    const std::string pkind = ini.require("problem", "kind");
    if (pkind == "quadratic") {
        QuadraticProblemSpec q;
        q.centers = detail::parse_vector_list("problem.centers", ini.require("problem", "centers"));
        q.scales = detail::parse_number_list("problem.scales", ini.require("problem", "scales"), ';');
        if (auto f0c = ini.maybe("problem", "f0_center"))
            q.f0_center = detail::parse_number_list("problem.f0_center", *f0c);
        q.f0_scale = ini.get_double("problem", "f0_scale", 1.0);
        cfg.problem = std::move(q);
        const std::string init = ini.get_str("problem", "init", "zeros");
        if (init == "zeros") cfg.worker_init = WorkerInit::Zeros;
        else if (init == "local-optima") cfg.worker_init = WorkerInit::LocalOptima;
        else throw ConfigError("config: problem.init must be zeros/local-optima");
        if (auto im = ini.maybe("problem", "init_master"))
            cfg.master_init = detail::parse_number_list("problem.init_master", *im);
    } else if (pkind == "softmax") {
        SoftmaxProblemSpec s;
        const std::string dataset = ini.require("problem", "dataset");
        const bool desk = ini.get_bool("problem", "desk_scale", true) || force_desk_scale;
        const long train_cap = ini.get_long("problem", "train_cap", 2000);
        const long test_cap = ini.get_long("problem", "test_cap", 500);
        if (dataset == "synthetic") {
            const auto classes = static_cast<std::int32_t>(ini.get_long("problem", "classes", 10));
            const auto features = static_cast<std::int32_t>(ini.get_long("problem", "features", 784));
            const long train_rows = ini.get_long("problem", "train_rows", 2000);
            const long test_rows = ini.get_long("problem", "test_rows", 500);
            const double noise = ini.get_double("problem", "noise", 0.35);
            s.train = std::make_shared<Dataset>(
                synthetic_clusters(classes, features, train_rows, cfg.seed, noise, 0));
            s.test = std::make_shared<Dataset>(
                synthetic_clusters(classes, features, test_rows, cfg.seed, noise, train_rows));
        } else if (dataset == "idx") {
            auto train = load_idx_files(
                detail::resolve_path(ini.require("problem", "train_images"), base_dir),
                detail::resolve_path(ini.require("problem", "train_labels"), base_dir));
            auto test = load_idx_files(
                detail::resolve_path(ini.require("problem", "test_images"), base_dir),
                detail::resolve_path(ini.require("problem", "test_labels"), base_dir));
            s.train = std::make_shared<Dataset>(std::move(train));
            s.test = std::make_shared<Dataset>(std::move(test));
        } else if (dataset == "libsvm") {
            const auto features = static_cast<std::int32_t>(ini.require_long("problem", "features"));
            auto train = load_libsvm_file(
                detail::resolve_path(ini.require("problem", "train_path"), base_dir), features);
            auto test = load_libsvm_file(
                detail::resolve_path(ini.require("problem", "test_path"), base_dir), features);
            if (ini.get_bool("problem", "standardize", true)) {
                standardize_columns(train);
                standardize_columns(test);
            }
            s.train = std::make_shared<Dataset>(std::move(train));
            s.test = std::make_shared<Dataset>(std::move(test));
        } else {
            throw ConfigError("config: problem.dataset must be synthetic/idx/libsvm, got '" +
                              dataset + "'");
        }
        if (desk) {
            s.train = std::make_shared<Dataset>(stratified_subsample(*s.train, train_cap, cfg.seed));
            s.test = std::make_shared<Dataset>(stratified_subsample(*s.test, test_cap, cfg.seed + 1));
        }
        const std::string part = ini.get_str("problem", "partition", "iid");
        if (part == "iid") s.partition = PartitionMode::Iid;
        else if (part == "digit-pairs") s.partition = PartitionMode::DigitPairs;
        else throw ConfigError("config: problem.partition must be iid/digit-pairs");
        s.f0_scale = ini.get_double("problem", "f0_scale", 0.01);
        cfg.problem = std::move(s);
    } else {
        throw ConfigError("config: problem.kind must be quadratic/softmax, got '" + pkind + "'");
    }

    ini.reject_unknown();

    LoadedConfig out;
    out.base = std::move(cfg);
    out.raw = std::string(text);
    return out;
}

inline LoadedConfig load_config(const std::string& path, bool force_desk_scale = false) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return load_config_text(ss.str(), dir.empty() ? "." : dir, force_desk_scale);
}

} // namespace byzadmm

// Command-line front end: declarative experiment runs, sweeps, the derivation
// verification suite, and config/dataset sanity checks. Everything here is a
// thin wrapper over the library; no behavior lives only in the CLI.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "byzadmm/byzadmm.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

int print_results(const std::vector<byzadmm::CheckResult>& results) {
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " -- " << r.detail << "\n";
        all_pass = all_pass && r.pass;
    }
    std::cout << (all_pass ? "verification suite: all checks passed"
                           : "verification suite: FAILURES above")
              << std::endl;
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine-robust distributed learning simulator"};
    app.require_subcommand(1);

    byzadmm::RunManifest manifest;
    std::string algs_csv, lambda_csv, q_csv, attack_name;
    long seed_override = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", manifest.config_path, "experiment config file")->required();
        cmd->add_option("--out", manifest.out_dir, "output directory")->required();
        cmd->add_flag("--overwrite", manifest.overwrite, "allow writing into a non-empty directory");
        cmd->add_option("--algs", algs_csv,
                        "comma list of admm,rsa,sgd-mean,sgd-median,sgd-geomed,ideal-sgd");
        cmd->add_option("--seed-override", seed_override, "replace the config seed");
        cmd->add_option("--attack", attack_name, "override the configured attack kind");
        cmd->add_flag("--desk-scale", manifest.force_desk_scale,
                      "shrink datasets to desk scale (configs default to desk scale already)");
    };

    CLI::App* run = app.add_subcommand("run", "execute one config across a roster of algorithms");
    add_common(run);

    CLI::App* sweep = app.add_subcommand("sweep", "run a lambda or q sweep of the config");
    add_common(sweep);
    sweep->add_option("--lambda", lambda_csv, "comma list of penalty weights to sweep");
    sweep->add_option("--q", q_csv, "comma list of byzantine counts to sweep");

    CLI::App* verify =
        app.add_subcommand("verify", "run the derivation oracle suite and print a pass/fail table");

    std::string check_path;
    CLI::App* parse_check =
        app.add_subcommand("parse-check", "validate a config file and any datasets it references");
    parse_check->add_option("--config", check_path, "config file to validate")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) {
            return print_results(byzadmm::run_verification_suite());
        }
        if (parse_check->parsed()) {
            const auto loaded = byzadmm::load_config(check_path);
            byzadmm::Simulation sim(loaded.base); // constructs losses, partitions, state
            std::cout << "config ok: " << check_path << "\n"
                      << "  workers " << loaded.base.hyper.m << " (byzantine "
                      << loaded.base.hyper.q << "), dimension " << sim.dimension() << ", rounds "
                      << loaded.base.rounds << "\n";
            if (sim.is_softmax()) {
                const auto& spec = std::get<byzadmm::SoftmaxProblemSpec>(loaded.base.problem);
                std::cout << "  train rows " << spec.train->rows << ", test rows "
                          << spec.test->rows << ", classes " << spec.train->class_count << "\n";
            }
            return 0;
        }

        if (seed_override >= 0) manifest.seed_override = static_cast<std::uint64_t>(seed_override);
        if (!attack_name.empty()) manifest.attack_override = attack_name;
        manifest.algorithms = split_list(algs_csv);
        for (const auto& v : split_list(lambda_csv))
            manifest.lambda_sweep.push_back(byzadmm::IniConfig::to_double("--lambda", v));
        for (const auto& v : split_list(q_csv))
            manifest.q_sweep.push_back(
                static_cast<int>(byzadmm::IniConfig::to_long("--q", v)));
        if (run->parsed() && (!manifest.lambda_sweep.empty() || !manifest.q_sweep.empty()))
            throw byzadmm::ConfigError("sweep axes are only valid with the sweep subcommand");

        return byzadmm::run_manifest(manifest, std::cerr);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << std::endl;
        return 2;
    }
}

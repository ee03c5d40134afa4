#pragma once

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "byzadmm/engine.hpp"
#include "byzadmm/three_block.hpp"

namespace byzadmm {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Independent brute-force minimizer for the coupled pair prox: a zooming 2-d
// grid search that never touches the closed form it is checking.
// ---------------------------------------------------------------------------

inline double prox_pair_objective(double z1, double z2, double a1, double a2, double lambda) {
    return lambda * std::abs(z1 - z2) + 0.5 * (z1 - a1) * (z1 - a1) + 0.5 * (z2 - a2) * (z2 - a2);
}

inline std::pair<double, double> prox_pair_brute_force(double a1, double a2, double lambda) {
    double c1 = 0.5 * (a1 + a2), c2 = c1;
    double radius = std::abs(a1 - a2) + lambda + 1.0;
    double best1 = c1, best2 = c2;
    for (int zoom = 0; zoom < 14; ++zoom) {
        double best = 1e300;
        constexpr int n = 40;
        for (int i = 0; i <= n; ++i) {
            const double z1 = c1 - radius + 2.0 * radius * i / n;
            for (int j = 0; j <= n; ++j) {
                const double z2 = c2 - radius + 2.0 * radius * j / n;
                const double obj = prox_pair_objective(z1, z2, a1, a2, lambda);
                if (obj < best) {
                    best = obj;
                    best1 = z1;
                    best2 = z2;
                }
            }
        }
        c1 = best1;
        c2 = best2;
        radius *= 2.5 / n; // keep the previous grid cell covered while zooming
    }
    return {best1, best2};
}

inline CheckResult check_prox_pair(int trials = 1000, std::uint64_t seed = 20240001) {
    RngStream rng(seed);
    double worst_gap = 0.0, worst_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        const double a1 = 10.0 * rng.next_unit() - 5.0;
        const double a2 = 10.0 * rng.next_unit() - 5.0;
        const double lambda = 2.0 * rng.next_unit();
        const auto [z1, z2] = prox_pair_closed_form(a1, a2, lambda);
        const auto [b1, b2] = prox_pair_brute_force(a1, a2, lambda);
        const double gap = prox_pair_objective(z1, z2, a1, a2, lambda) -
                           prox_pair_objective(b1, b2, a1, a2, lambda);
        worst_gap = std::max(worst_gap, gap);
        worst_sum = std::max(worst_sum, std::abs(z1 + z2 - (a1 + a2)));
    }
    std::ostringstream detail;
    detail << "objective gap " << worst_gap << " (<= 1e-8), sum identity " << worst_sum
           << " (<= 1e-12) over " << trials << " triples";
    return {"prox pair closed form vs brute force", worst_gap <= 1e-8 && worst_sum <= 1e-12,
            detail.str()};
}

// ---------------------------------------------------------------------------
// Compact (primal + projected dual) vs explicit three-block trajectories
// ---------------------------------------------------------------------------

// Deterministic heterogeneous quadratic problem on 5 workers used by several
// oracles below.
inline ExperimentConfig five_worker_quadratic() {
    ExperimentConfig cfg;
    cfg.protocol = Protocol::Admm;
    cfg.hyper = HyperParams{1.0, 0.5, 5, 0};
    QuadraticProblemSpec q;
    q.centers = {{-0.8, 0.4, 0.1}, {-0.4, -0.2, 0.3}, {0.0, 0.6, -0.5}, {0.4, -0.6, 0.2},
                 {0.8, 0.2, -0.1}};
    q.scales = {0.6, 0.8, 1.0, 1.2, 1.4};
    q.f0_scale = 1.0;
    cfg.problem = q;
    // one sigma^k behind both stepsizes: offsets m*beta and beta
    cfg.master_schedule = InverseK{0.2, 5 * 0.5};
    cfg.worker_schedule = InverseK{0.2, 0.5};
    cfg.exact_gradients = true;
    cfg.rounds = 100;
    cfg.seed = 1;
    return cfg;
}

inline CheckResult check_three_block_equivalence(int rounds = 100, double tol = 1e-9) {
    ExperimentConfig cfg = five_worker_quadratic();
    cfg.rounds = rounds;
    Simulation sim(cfg);

    const auto& q = std::get<QuadraticProblemSpec>(cfg.problem);
    std::vector<ModelVector> init_x(q.centers.size(), vec::zeros(3));
    ThreeBlockState ref = three_block_init(vec::zeros(3), init_x);
    std::vector<LossModel> losses;
    for (std::size_t w = 0; w < q.centers.size(); ++w)
        losses.push_back(QuadraticLoss{q.centers[w], q.scales[w]});
    const LossModel f0 = QuadraticLoss{vec::zeros(3), q.f0_scale};

    double worst = 0.0;
    double eta_sum_residual = 0.0;
    for (int k = 0; k < rounds; ++k) {
        sim.step();
        std::vector<ModelVector> grads;
        for (std::size_t w = 0; w < losses.size(); ++w)
            grads.push_back(exact_gradient(losses[w], ref.x[w]));
        three_block_round(ref, grads, exact_gradient(f0, ref.x0),
                          stepsize(cfg.master_schedule, k), stepsize(cfg.worker_schedule, k),
                          cfg.hyper);
        worst = std::max(worst, vec::dist_inf(sim.master(), ref.x0));
        for (int w = 0; w < cfg.hyper.m; ++w) {
            worst = std::max(worst, vec::dist_inf(sim.admm_worker(w).x, ref.x[w]));
            eta_sum_residual = std::max(
                eta_sum_residual,
                vec::norm_inf(vec::add(ref.eta_to_master[w], ref.eta_to_worker[w])));
        }
    }
    std::ostringstream detail;
    detail << "max coordinate deviation " << worst << " (< " << tol
           << ") over " << rounds << " rounds; eta(i,0)+eta(0,i) residual " << eta_sum_residual;
    return {"compact vs three-block trajectories", worst < tol && eta_sum_residual < 1e-12,
            detail.str()};
}

// ---------------------------------------------------------------------------
// Optimality conditions as a fixed point: one exact-gradient round started
// at (x*, eta*) must not move.
// ---------------------------------------------------------------------------

inline CheckResult check_optimality_fixed_point(double tol = 1e-12) {
    ExperimentConfig cfg = five_worker_quadratic();
    cfg.rounds = 1;
    Simulation sim(cfg);

    const ModelVector x_star = sim.optimum();
    const double lambda0 = consensus_threshold(sim.problem(), x_star);
    if (cfg.hyper.lambda < lambda0)
        return {"optimality fixed point", false,
                "problem setup broken: lambda below the consensus threshold"};
    const auto& eta_star = sim.optimal_duals();
    std::vector<ModelVector> xs(cfg.hyper.m, x_star);
    sim.set_admm_state(x_star, xs, eta_star);
    sim.step();

    double moved = vec::dist_inf(sim.master(), x_star);
    for (int w = 0; w < cfg.hyper.m; ++w) {
        moved = std::max(moved, vec::dist_inf(sim.admm_worker(w).x, x_star));
        moved = std::max(moved, vec::dist_inf(sim.admm_worker(w).eta_curr, eta_star[w]));
    }
    std::ostringstream detail;
    detail << "state moved by " << moved << " (< " << tol << "), lambda0 = " << lambda0;
    return {"optimality fixed point", moved < tol, detail.str()};
}

// ---------------------------------------------------------------------------
// Decay-rate fits on the squared-error potential
// ---------------------------------------------------------------------------

inline double log_log_slope(const std::vector<MetricsRecord>& records, long k_lo, long k_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (const auto& r : records) {
        if (r.k < k_lo || r.k > k_hi || !r.lyapunov || *r.lyapunov <= 0.0) continue;
        const double x = std::log(static_cast<double>(r.k));
        const double y = std::log(*r.lyapunov);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw NumericError("log_log_slope: not enough samples in fit window");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Theorem-style 1/k stepsizes derived from the curvature profile:
//   alpha_0 = min{1/(c k + m beta), A},  alpha_i = min{1/(c k + beta), A}
inline std::pair<StepsizeSchedule, StepsizeSchedule> theorem_schedules(
    const ConvergenceProfile& prof, const HyperParams& hp, double c_fraction = 0.5) {
    double ratio = prof.mu0 * prof.L0 / (prof.mu0 + prof.L0);
    double cap = 1.0 / (prof.mu0 + prof.L0);
    for (std::size_t i = 0; i < prof.mu.size(); ++i) {
        ratio = std::min(ratio, prof.mu[i] * prof.L[i] / (prof.mu[i] + prof.L[i]));
        cap = std::min(cap, 1.0 / (prof.mu[i] + prof.L[i]));
    }
    const double c = c_fraction * ratio;
    return {InverseK{c, hp.m * hp.beta, cap}, InverseK{c, hp.beta, cap}};
}

// Attack-free run: the potential must decay at an empirical O(1/k) rate.
inline CheckResult check_rate_decay(long rounds = 100000) {
    ExperimentConfig cfg;
    cfg.protocol = Protocol::Admm;
    cfg.hyper = HyperParams{0.6, 0.5, 5, 0};
    QuadraticProblemSpec q;
    q.centers = {{-0.5}, {-0.25}, {0.0}, {0.25}, {0.5}};
    q.scales = {1.0, 1.0, 1.0, 1.0, 1.0};
    q.f0_scale = 1.0;
    cfg.problem = q;
    cfg.exact_gradients = true;
    cfg.rounds = rounds;
    cfg.eval_every = 10;
    cfg.seed = 3;
    cfg.lyapunov = Toggle::On;

    Simulation probe(cfg);
    const auto prof = profile_for(probe.problem());
    std::tie(cfg.master_schedule, cfg.worker_schedule) = theorem_schedules(prof, cfg.hyper);

    const auto records = run_experiment(cfg);
    const double slope = log_log_slope(records, 1000, rounds);
    std::ostringstream detail;
    detail << "log V vs log k slope " << slope << " in [-1.3, -0.8] over k in [1e3, " << rounds
           << "]";
    return {"potential decays at O(1/k) without attack", slope >= -1.3 && slope <= -0.8,
            detail.str()};
}

// Same problem plus two byzantine workers flooding the dual channel with
// clamped noise: the potential must level off at a positive floor.
inline CheckResult check_rate_plateau(long rounds = 100000) {
    ExperimentConfig cfg;
    cfg.protocol = Protocol::Admm;
    cfg.hyper = HyperParams{0.6, 0.5, 7, 2};
    QuadraticProblemSpec q;
    q.centers = {{-0.5}, {-0.25}, {0.0}, {0.25}, {0.5}, {0.0}, {0.0}};
    q.scales = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    q.f0_scale = 1.0;
    cfg.problem = q;
    cfg.exact_gradients = true;
    cfg.rounds = rounds;
    cfg.eval_every = 10;
    cfg.seed = 3;
    cfg.lyapunov = Toggle::On;
    cfg.attack.kind = AttackSpec::Kind::Gaussian;
    cfg.attack.stddev = 100.0;
    cfg.attack.byzantine_ids = {5, 6};

    // keep the regular-worker problem identical to the decay check
    ExperimentConfig probe_cfg = cfg;
    probe_cfg.rounds = 1;
    Simulation probe(probe_cfg);
    const auto prof = profile_for(probe.problem());
    std::tie(cfg.master_schedule, cfg.worker_schedule) = theorem_schedules(prof, cfg.hyper);

    const auto records = run_experiment(cfg);
    const double slope = log_log_slope(records, rounds / 10, rounds);
    double floor = 1e300;
    for (const auto& r : records)
        if (r.k >= rounds / 10 && r.lyapunov) floor = std::min(floor, *r.lyapunov);
    std::ostringstream detail;
    detail << "final-decade slope " << slope << " in [-0.2, 0.2], potential floor " << floor
           << " (> 0)";
    return {"potential plateaus under dual-channel noise", slope >= -0.2 && slope <= 0.2 &&
                                                                floor > 1e-6,
            detail.str()};
}

// ---------------------------------------------------------------------------
// One-dimensional two-regular-worker reproduction (small/large value attacks)
// ---------------------------------------------------------------------------

inline ExperimentConfig toy_two_worker_config(AttackSpec::Kind kind, Protocol protocol) {
    ExperimentConfig cfg;
    cfg.protocol = protocol;
    cfg.hyper = HyperParams{0.5, 1.0, 3, 1};
    QuadraticProblemSpec q;
    q.centers = {{1.0}, {1.0}, {1.0}};
    q.scales = {0.5, 0.5, 0.5};
    q.f0_scale = 1.0;
    cfg.problem = q;
    cfg.worker_init = WorkerInit::LocalOptima;
    cfg.master_init = {0.0};
    cfg.master_schedule = InverseK{1.0 / 8.0, 3.0};
    cfg.worker_schedule = InverseK{1.0 / 8.0, 1.0};
    cfg.exact_gradients = true;
    cfg.rounds = 10000;
    cfg.eval_every = 100;
    cfg.seed = 11;
    cfg.attack.kind = kind;
    cfg.attack.epsilon = 0.5;
    cfg.attack.byzantine_ids = {2};
    return cfg;
}

struct ToyRunSummary {
    double master_abs_err = 0.0; // |x0 - 1/2|
    double master_error = 0.0;   // squared
    double consensus_gap = 0.0;
};

inline ToyRunSummary toy_final(AttackSpec::Kind kind, Protocol protocol) {
    const auto records = run_experiment(toy_two_worker_config(kind, protocol));
    const auto& last = records.back();
    ToyRunSummary s;
    s.master_error = last.master_error.value();
    s.master_abs_err = std::sqrt(s.master_error);
    s.consensus_gap = last.consensus_gap.value();
    return s;
}

inline CheckResult check_toy_reproduction() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto admm_large = toy_final(AttackSpec::Kind::LargeValue, Protocol::Admm);
    const auto rsa_large = toy_final(AttackSpec::Kind::LargeValue, Protocol::Rsa);
    const auto admm_small = toy_final(AttackSpec::Kind::SmallValue, Protocol::Admm);
    const auto rsa_small = toy_final(AttackSpec::Kind::SmallValue, Protocol::Rsa);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const bool large_ok = admm_large.master_abs_err < 0.05 && rsa_large.master_abs_err < 0.05 &&
                          admm_large.consensus_gap < 0.05 && rsa_large.consensus_gap < 0.05;
    const bool ordering_ok = admm_small.master_error < rsa_small.master_error;
    const bool consensus_ok = admm_small.consensus_gap < 0.05 && rsa_small.consensus_gap < 0.05;
    const bool time_ok = elapsed < 1.0;

    std::ostringstream detail;
    detail << "large-value |x0-1/2|: admm " << admm_large.master_abs_err << ", rsa "
           << rsa_large.master_abs_err << "; small-value master error: admm "
           << admm_small.master_error << " < rsa " << rsa_small.master_error
           << "; consensus gaps: " << admm_large.consensus_gap << "/" << rsa_large.consensus_gap
           << "/" << admm_small.consensus_gap << "/" << rsa_small.consensus_gap << "; " << elapsed
           << " s (< 1 s)";
    return {"two-worker toy reproduction", large_ok && ordering_ok && consensus_ok && time_ok,
            detail.str()};
}

inline std::vector<CheckResult> run_verification_suite() {
    std::vector<CheckResult> results;
    results.push_back(check_prox_pair());
    results.push_back(check_three_block_equivalence());
    results.push_back(check_optimality_fixed_point());
    results.push_back(check_toy_reproduction());
    results.push_back(check_rate_decay());
    results.push_back(check_rate_plateau());
    return results;
}

} // namespace byzadmm

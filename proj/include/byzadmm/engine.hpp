#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "byzadmm/aggregation.hpp"
#include "byzadmm/attacks.hpp"
#include "byzadmm/data.hpp"
#include "byzadmm/errors.hpp"
#include "byzadmm/model.hpp"
#include "byzadmm/rng.hpp"
#include "byzadmm/schedule.hpp"
#include "byzadmm/updates.hpp"
#include "byzadmm/vec.hpp"

namespace byzadmm {

// ---------------------------------------------------------------------------
// Experiment description
// ---------------------------------------------------------------------------

enum class PartitionMode { Iid, DigitPairs };
enum class WorkerInit { Zeros, LocalOptima };
enum class Toggle { Auto, On, Off };

struct QuadraticProblemSpec {
    std::vector<ModelVector> centers; // one per worker, byzantine included
    std::vector<double> scales;
    ModelVector f0_center; // empty means zeros
    double f0_scale = 1.0;
};

struct SoftmaxProblemSpec {
    std::shared_ptr<const Dataset> train;
    std::shared_ptr<const Dataset> test;
    PartitionMode partition = PartitionMode::Iid;
    double f0_scale = 0.01;
};

using ProblemSpec = std::variant<QuadraticProblemSpec, SoftmaxProblemSpec>;

struct ExperimentConfig {
    Protocol protocol = Protocol::Admm;
    AggregationRule aggregation = AggregationRule::Mean;
    AttackSpec attack;
    HyperParams hyper;
    StepsizeSchedule master_schedule = InverseK{};
    StepsizeSchedule worker_schedule = InverseK{};
    ProblemSpec problem;
    long rounds = 1;
    long eval_every = 10;
    std::uint64_t seed = 0;
    int batch_size = 32;
    bool exact_gradients = false;
    WorkerInit worker_init = WorkerInit::Zeros;
    ModelVector master_init; // empty means zeros
    Toggle lyapunov = Toggle::Auto;        // auto: on for quadratic ADMM runs
    Toggle compute_optimum = Toggle::Auto; // auto: on for quadratic problems
    bool ergodic = false;
};

struct MetricsRecord {
    long k = 0;
    std::optional<double> top1_accuracy;
    std::optional<double> master_error;  // ||x0 - x*||^2
    std::optional<double> worker_error;  // sum_i ||x_i - x*||^2 over regular workers
    std::optional<double> consensus_gap; // max_i ||x_i - x0||_inf over regular workers
    std::optional<double> lyapunov;
    std::optional<double> ergodic_gap;
};

// ---------------------------------------------------------------------------
// Standalone metric helpers
// ---------------------------------------------------------------------------

// Fraction of test rows whose best-scoring class matches the label; ties go
// to the lowest class index.
inline double top1_accuracy(const ModelVector& weights, const Dataset& test,
                            std::int32_t classes, std::int32_t features) {
    if (static_cast<std::size_t>(classes) * features != weights.size())
        throw ConfigError("top1_accuracy: weight shape does not match test set");
    if (features != test.feature_count)
        throw ConfigError("top1_accuracy: feature count mismatch");
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < test.rows; ++i) {
        const auto feat = test.row(i);
        std::int32_t best = 0;
        double best_score = -1e300;
        for (std::int32_t c = 0; c < classes; ++c) {
            double s = 0.0;
            const double* wc = weights.data() + static_cast<std::size_t>(c) * features;
            for (std::int32_t f = 0; f < features; ++f) s += wc[f] * feat[f];
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        if (best == test.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(test.rows);
}

// Weighted running average sum_l a_l x_l / sum_l a_l.
inline ModelVector ergodic_average(std::span<const std::pair<double, ModelVector>> history) {
    if (history.empty()) throw ConfigError("ergodic_average: empty history");
    ModelVector out = vec::zeros(history.front().second.size());
    double total = 0.0;
    for (const auto& [w, x] : history) {
        if (w <= 0.0) throw ConfigError("ergodic_average: weights must be positive");
        vec::axpy(out, w, x);
        total += w;
    }
    for (double& t : out) t /= total;
    return out;
}

// ---------------------------------------------------------------------------
// Simulation: the synchronous master/worker round loop
// ---------------------------------------------------------------------------

class Simulation {
public:
    explicit Simulation(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.hyper.validate();
        validate_schedule(cfg_.master_schedule);
        validate_schedule(cfg_.worker_schedule);
        if (cfg_.rounds < 1) throw ConfigError("config: rounds must be >= 1");
        if (cfg_.eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
        if (static_cast<int>(cfg_.attack.byzantine_ids.size()) != cfg_.hyper.q)
            throw ConfigError("config: byzantine id list must have exactly q entries");
        cfg_.attack.validate(cfg_.hyper.m);

        build_losses();
        build_problem();
        init_state();
    }

    const ExperimentConfig& config() const { return cfg_; }
    long round() const { return k_; }
    int dimension() const { return static_cast<int>(dim_); }

    bool is_softmax() const { return std::holds_alternative<SoftmaxProblemSpec>(cfg_.problem); }

    const ModelVector& master() const {
        switch (cfg_.protocol) {
            case Protocol::Admm: return admm_master_.x0;
            case Protocol::Rsa: return rsa_x0_;
            case Protocol::AggSgd: return sgd_x0_;
        }
        throw ConfigError("master: bad protocol");
    }

    const AdmmWorkerState& admm_worker(int w) const { return admm_workers_.at(w); }
    const AdmmMasterState& admm_master() const { return admm_master_; }
    const ModelVector& rsa_worker(int w) const { return rsa_x_.at(w); }
    const std::vector<ModelVector>& last_messages() const { return last_messages_; }
    const Problem& problem() const { return problem_; }
    const LossModel& worker_loss(int w) const { return losses_.at(w); }

    bool regular(int w) const { return !cfg_.attack.is_byzantine(w); }

    // Places a full state (x0, worker primals, duals) into an ADMM run; the
    // master message history is aligned with the supplied duals.
    void set_admm_state(const ModelVector& x0, const std::vector<ModelVector>& xs,
                        const std::vector<ModelVector>& etas) {
        if (cfg_.protocol != Protocol::Admm)
            throw ConfigError("set_admm_state: only valid on an ADMM run");
        if (xs.size() != static_cast<std::size_t>(cfg_.hyper.m) || etas.size() != xs.size())
            throw ConfigError("set_admm_state: need one primal and one dual per worker");
        admm_master_.x0 = x0;
        for (int w = 0; w < cfg_.hyper.m; ++w) {
            admm_workers_[w].x = xs[w];
            admm_workers_[w].eta_curr = etas[w];
            admm_workers_[w].eta_prev = etas[w];
            admm_master_.received_curr[w] = etas[w];
            admm_master_.received_prev[w] = etas[w];
            byz_dual_[w] = etas[w];
        }
    }

    // Lazily solved minimizer of the regular-worker problem.
    const ModelVector& optimum() {
        if (!x_star_) {
            x_star_ = exact_minimizer(problem_);
            eta_star_.clear();
            for (const auto& loss : problem_.worker_losses)
                eta_star_.push_back(vec::scale(exact_gradient(loss, *x_star_), -1.0));
        }
        return *x_star_;
    }

    double optimum_value() {
        return problem_value(problem_, optimum());
    }

    // dual state an optimal consensus run would hold: eta_i* = -grad_i(x*)
    const std::vector<ModelVector>& optimal_duals() {
        optimum();
        return eta_star_;
    }

    void step() {
        switch (cfg_.protocol) {
            case Protocol::Admm: admm_round(); break;
            case Protocol::Rsa: rsa_round(); break;
            case Protocol::AggSgd: sgd_round(); break;
        }
        ++k_;
        check_finite();
    }

    // Weighted squared-error potential of the current ADMM state against the
    // optimal primal/dual pair.
    double lyapunov_value() {
        if (cfg_.protocol != Protocol::Admm)
            throw ConfigError("lyapunov: only defined for ADMM runs");
        const ModelVector& xs = optimum();
        const double alpha_prev = stepsize(cfg_.worker_schedule, k_ > 0 ? k_ - 1 : 0);
        double v = vec::dist2_sq(admm_master_.x0, xs);
        std::size_t reg = 0;
        for (int w = 0; w < cfg_.hyper.m; ++w) {
            if (!regular(w)) continue;
            const auto& ws = admm_workers_[w];
            v += vec::dist2_sq(ws.x, xs);
            v += 2.0 * alpha_prev / cfg_.hyper.beta * vec::dist2_sq(ws.eta_prev, eta_star_[reg]);
            ++reg;
        }
        return v;
    }

    MetricsRecord metrics() {
        MetricsRecord rec;
        rec.k = k_;
        if (is_softmax()) {
            const auto& spec = std::get<SoftmaxProblemSpec>(cfg_.problem);
            if (spec.test && spec.test->rows > 0)
                rec.top1_accuracy = top1_accuracy(master(), *spec.test, classes_, features_);
        }
        if (want_optimum()) {
            rec.master_error = vec::dist2_sq(master(), optimum());
            if (cfg_.protocol != Protocol::AggSgd) {
                double werr = 0.0;
                for (int w = 0; w < cfg_.hyper.m; ++w) {
                    if (!regular(w)) continue;
                    werr += vec::dist2_sq(worker_primal(w), *x_star_);
                }
                rec.worker_error = werr;
            }
        }
        if (cfg_.protocol != Protocol::AggSgd) {
            double gap = 0.0;
            for (int w = 0; w < cfg_.hyper.m; ++w) {
                if (!regular(w)) continue;
                gap = std::max(gap, vec::dist_inf(worker_primal(w), master()));
            }
            rec.consensus_gap = gap;
        }
        if (want_lyapunov()) rec.lyapunov = lyapunov_value();
        if (cfg_.ergodic && ergodic_weight_ > 0.0) rec.ergodic_gap = ergodic_gap();
        return rec;
    }

    std::vector<MetricsRecord> run() {
        std::vector<MetricsRecord> records;
        records.push_back(metrics());
        while (k_ < cfg_.rounds) {
            step();
            if (cfg_.ergodic) accumulate_ergodic();
            if (k_ % cfg_.eval_every == 0 || k_ == cfg_.rounds) records.push_back(metrics());
        }
        return records;
    }

private:
    // --- construction -------------------------------------------------------

    void build_losses() {
        if (const auto* q = std::get_if<QuadraticProblemSpec>(&cfg_.problem)) {
            if (q->centers.size() != static_cast<std::size_t>(cfg_.hyper.m) ||
                q->scales.size() != q->centers.size())
                throw ConfigError("config: quadratic problem needs one center and scale per worker");
            dim_ = q->centers.front().size();
            for (const auto& c : q->centers)
                if (c.size() != dim_) throw ConfigError("config: quadratic centers disagree on dimension");
            for (int w = 0; w < cfg_.hyper.m; ++w)
                losses_.push_back(QuadraticLoss{q->centers[w], q->scales[w]});
            ModelVector f0c = q->f0_center.empty() ? vec::zeros(dim_) : q->f0_center;
            if (f0c.size() != dim_) throw ConfigError("config: f0 center has wrong dimension");
            f0_ = QuadraticLoss{std::move(f0c), q->f0_scale};
        } else {
            const auto& s = std::get<SoftmaxProblemSpec>(cfg_.problem);
            if (!s.train) throw ConfigError("config: softmax problem needs a training set");
            classes_ = s.train->class_count;
            features_ = s.train->feature_count;
            dim_ = static_cast<std::size_t>(classes_) * features_;
            Partition part = s.partition == PartitionMode::Iid
                                 ? partition_iid(*s.train, cfg_.hyper.m, cfg_.seed)
                                 : partition_digit_pairs(*s.train, cfg_.hyper.m);
            for (int w = 0; w < cfg_.hyper.m; ++w)
                losses_.push_back(SoftmaxLoss{s.train, std::move(part.shards[w]), classes_, features_});
            f0_ = QuadraticLoss{vec::zeros(dim_), s.f0_scale};
        }
    }

    void build_problem() {
        for (int w = 0; w < cfg_.hyper.m; ++w)
            if (regular(w)) problem_.worker_losses.push_back(losses_[w]);
        problem_.regularizer = f0_;
    }

    void init_state() {
        ModelVector x0 = cfg_.master_init.empty() ? vec::zeros(dim_) : cfg_.master_init;
        if (x0.size() != dim_) throw ConfigError("config: master init has wrong dimension");
        std::vector<ModelVector> xs(cfg_.hyper.m, vec::zeros(dim_));
        if (cfg_.worker_init == WorkerInit::LocalOptima) {
            const auto* q = std::get_if<QuadraticProblemSpec>(&cfg_.problem);
            if (q == nullptr)
                throw ConfigError("config: local-optima init is only defined for quadratic problems");
            xs = q->centers;
        }
        switch (cfg_.protocol) {
            case Protocol::Admm: {
                admm_master_.x0 = std::move(x0);
                admm_master_.received_curr.assign(cfg_.hyper.m, vec::zeros(dim_));
                admm_master_.received_prev.assign(cfg_.hyper.m, vec::zeros(dim_));
                for (int w = 0; w < cfg_.hyper.m; ++w)
                    admm_workers_.push_back({xs[w], vec::zeros(dim_), vec::zeros(dim_)});
                byz_dual_.assign(cfg_.hyper.m, vec::zeros(dim_));
                break;
            }
            case Protocol::Rsa:
                rsa_x0_ = std::move(x0);
                rsa_x_ = std::move(xs);
                break;
            case Protocol::AggSgd:
                sgd_x0_ = std::move(x0);
                break;
        }
        last_messages_.assign(cfg_.hyper.m, vec::zeros(dim_));
    }

    // --- per-round machinery -------------------------------------------------

    ModelVector worker_gradient(int w, const ModelVector& at, long k) {
        if (cfg_.exact_gradients || std::holds_alternative<QuadraticLoss>(losses_[w]))
            return exact_gradient(losses_[w], at);
        const auto& shard = std::get<SoftmaxLoss>(losses_[w]).shard;
        RngStream rng = worker_stream(cfg_.seed, w, k, StreamPurpose::Batch);
        const auto batch = sample_batch(shard, cfg_.batch_size, rng);
        return stochastic_gradient(losses_[w], at, batch);
    }

    const ModelVector& worker_primal(int w) const {
        return cfg_.protocol == Protocol::Admm ? admm_workers_[w].x : rsa_x_[w];
    }

    bool needs_honest_state(AttackSpec::Kind kind) const {
        return kind == AttackSpec::Kind::None || kind == AttackSpec::Kind::SignFlip;
    }

    void admm_round() {
        const long k = k_;
        const double a0 = stepsize(cfg_.master_schedule, k);
        const double ai = stepsize(cfg_.worker_schedule, k);
        const ModelVector grad0 = exact_gradient(f0_, admm_master_.x0);
        const ModelVector x0_new = admm_master_step(admm_master_, grad0, a0);

        std::vector<ModelVector> msgs(cfg_.hyper.m);
        // regular workers (and the honest shadow state of byzantine ones)
        for (int w = 0; w < cfg_.hyper.m; ++w) {
            const bool byz = !regular(w);
            if (byz && !needs_honest_state(cfg_.attack.kind)) continue;
            auto& ws = admm_workers_[w];
            const ModelVector g = worker_gradient(w, ws.x, k);
            ModelVector x_new = admm_worker_step(ws, g, ai);
            ModelVector eta_new = admm_dual_step(ws, x_new, x0_new, cfg_.hyper);
            if (!byz) msgs[w] = eta_new;
            ws.x = std::move(x_new);
            ws.eta_prev = std::move(ws.eta_curr);
            ws.eta_curr = std::move(eta_new);
        }
        // byzantine uploads
        for (int w : cfg_.attack.byzantine_ids) {
            AttackContext ctx;
            ctx.k = k + 1; // the message being forged carries index k+1
            ctx.x0 = &x0_new;
            ctx.hp = &cfg_.hyper;
            ctx.own_dual = &byz_dual_[w];
            ctx.honest_value = &admm_workers_[w].eta_curr;
            if (cfg_.attack.kind == AttackSpec::Kind::CopyRegular)
                ctx.copy_source = &msgs[cfg_.attack.copy_target];
            RngStream rng = worker_stream(cfg_.seed, w, k, StreamPurpose::Attack);
            msgs[w] = byzantine_payload(cfg_.attack, Protocol::Admm, ctx, rng);
            byz_dual_[w] = msgs[w];
        }
        // synchronous receive: clamp onto the dual box, shift history
        for (int w = 0; w < cfg_.hyper.m; ++w) {
            if (msgs[w].size() != dim_)
                throw ProtocolError("round " + std::to_string(k) + ": missing message from worker " +
                                    std::to_string(w));
            admm_master_.received_prev[w] = std::move(admm_master_.received_curr[w]);
            admm_master_.received_curr[w] = proj_box(msgs[w], cfg_.hyper.lambda);
        }
        admm_master_.x0 = x0_new;
        last_messages_ = std::move(msgs);
        check_dual_box(k);
    }

    void rsa_round() {
        const long k = k_;
        const double a0 = stepsize(cfg_.master_schedule, k);
        const double ai = stepsize(cfg_.worker_schedule, k);
        std::vector<ModelVector> msgs(cfg_.hyper.m);
        for (int w = 0; w < cfg_.hyper.m; ++w)
            if (regular(w)) msgs[w] = rsa_x_[w];
        for (int w : cfg_.attack.byzantine_ids) {
            AttackContext ctx;
            ctx.k = k;
            ctx.x0 = &rsa_x0_;
            ctx.hp = &cfg_.hyper;
            ctx.honest_value = &rsa_x_[w];
            if (cfg_.attack.kind == AttackSpec::Kind::CopyRegular)
                ctx.copy_source = &msgs[cfg_.attack.copy_target];
            RngStream rng = worker_stream(cfg_.seed, w, k, StreamPurpose::Attack);
            msgs[w] = byzantine_payload(cfg_.attack, Protocol::Rsa, ctx, rng);
        }
        const ModelVector grad0 = exact_gradient(f0_, rsa_x0_);
        ModelVector x0_new = rsa_master_step(rsa_x0_, msgs, grad0, a0, cfg_.hyper.lambda);
        for (int w = 0; w < cfg_.hyper.m; ++w) {
            if (!regular(w) && !needs_honest_state(cfg_.attack.kind)) continue;
            const ModelVector g = worker_gradient(w, rsa_x_[w], k);
            rsa_x_[w] = rsa_worker_step(rsa_x_[w], rsa_x0_, g, ai, cfg_.hyper.lambda);
        }
        rsa_x0_ = std::move(x0_new);
        last_messages_ = std::move(msgs);
    }

    void sgd_round() {
        const long k = k_;
        const double a0 = stepsize(cfg_.master_schedule, k);
        std::vector<ModelVector> msgs(cfg_.hyper.m);
        for (int w = 0; w < cfg_.hyper.m; ++w)
            if (regular(w)) msgs[w] = worker_gradient(w, sgd_x0_, k);
        for (int w : cfg_.attack.byzantine_ids) {
            ModelVector honest;
            if (needs_honest_state(cfg_.attack.kind)) honest = worker_gradient(w, sgd_x0_, k);
            AttackContext ctx;
            ctx.k = k;
            ctx.x0 = &sgd_x0_;
            ctx.hp = &cfg_.hyper;
            ctx.honest_value = &honest;
            if (cfg_.attack.kind == AttackSpec::Kind::CopyRegular)
                ctx.copy_source = &msgs[cfg_.attack.copy_target];
            RngStream rng = worker_stream(cfg_.seed, w, k, StreamPurpose::Attack);
            msgs[w] = byzantine_payload(cfg_.attack, Protocol::AggSgd, ctx, rng);
        }
        const ModelVector agg = aggregate(cfg_.aggregation, msgs);
        const ModelVector grad0 = exact_gradient(f0_, sgd_x0_);
        sgd_x0_ = sgd_master_step(sgd_x0_, agg, grad0, a0);
        last_messages_ = std::move(msgs);
    }

    // --- invariants & metrics internals --------------------------------------

    void check_finite() const {
        const auto bad = [&](const ModelVector& v) { return !vec::all_finite(v); };
        if (bad(master()))
            throw NumericError("non-finite master state at round " + std::to_string(k_));
        if (cfg_.protocol == Protocol::AggSgd) return;
        for (int w = 0; w < cfg_.hyper.m; ++w) {
            if (!regular(w)) continue;
            if (bad(worker_primal(w)))
                throw NumericError("non-finite state at round " + std::to_string(k_) +
                                   ", worker " + std::to_string(w));
        }
    }

    void check_dual_box(long k) const {
        const double bound = cfg_.hyper.lambda * (1.0 + 1e-12) + 1e-300;
        for (int w = 0; w < cfg_.hyper.m; ++w) {
            if (regular(w) && vec::norm_inf(admm_workers_[w].eta_curr) > bound)
                throw NumericError("dual box violated at round " + std::to_string(k) + ", worker " +
                                   std::to_string(w));
            if (vec::norm_inf(admm_master_.received_curr[w]) > bound)
                throw NumericError("received message outside dual box at round " +
                                   std::to_string(k) + ", worker " + std::to_string(w));
        }
    }

    bool want_optimum() {
        if (cfg_.compute_optimum == Toggle::On) return true;
        if (cfg_.compute_optimum == Toggle::Off) return false;
        return !is_softmax();
    }

    bool want_lyapunov() {
        if (cfg_.lyapunov == Toggle::Off) return false;
        if (cfg_.lyapunov == Toggle::On) {
            if (cfg_.protocol != Protocol::Admm)
                throw ConfigError("config: lyapunov tracking requires the ADMM protocol");
            if (is_softmax())
                throw ConfigError("config: lyapunov tracking requires a quadratic problem");
            return true;
        }
        return cfg_.protocol == Protocol::Admm && !is_softmax();
    }

    void accumulate_ergodic() {
        if (cfg_.protocol == Protocol::AggSgd) return;
        const double w = stepsize(cfg_.master_schedule, k_ - 1);
        if (ergodic_master_.empty()) {
            ergodic_master_ = vec::zeros(dim_);
            ergodic_workers_.assign(cfg_.hyper.m, vec::zeros(dim_));
        }
        vec::axpy(ergodic_master_, w, master());
        for (int i = 0; i < cfg_.hyper.m; ++i)
            if (regular(i)) vec::axpy(ergodic_workers_[i], w, worker_primal(i));
        ergodic_weight_ += w;
    }

    double ergodic_gap() {
        const double f_star = optimum_value();
        double f_bar = loss_value(f0_, vec::scale(ergodic_master_, 1.0 / ergodic_weight_));
        for (int w = 0; w < cfg_.hyper.m; ++w) {
            if (!regular(w)) continue;
            f_bar += loss_value(losses_[w], vec::scale(ergodic_workers_[w], 1.0 / ergodic_weight_));
        }
        return f_bar - f_star;
    }

    // --- members -------------------------------------------------------------

    ExperimentConfig cfg_;
    std::size_t dim_ = 0;
    std::int32_t classes_ = 0, features_ = 0;
    std::vector<LossModel> losses_; // one per worker
    LossModel f0_;
    Problem problem_; // regular workers + regularizer

    long k_ = 0;
    AdmmMasterState admm_master_;
    std::vector<AdmmWorkerState> admm_workers_;
    std::vector<ModelVector> byz_dual_; // forged dual state per worker id
    ModelVector rsa_x0_;
    std::vector<ModelVector> rsa_x_;
    ModelVector sgd_x0_;
    std::vector<ModelVector> last_messages_;

    std::optional<ModelVector> x_star_;
    std::vector<ModelVector> eta_star_;

    ModelVector ergodic_master_;
    std::vector<ModelVector> ergodic_workers_;
    double ergodic_weight_ = 0.0;
};

inline std::vector<MetricsRecord> run_experiment(const ExperimentConfig& cfg) {
    Simulation sim(cfg);
    return sim.run();
}

} // namespace byzadmm

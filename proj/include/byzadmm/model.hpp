#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "byzadmm/data.hpp"
#include "byzadmm/errors.hpp"
#include "byzadmm/vec.hpp"

namespace byzadmm {

// (scale/2)||x - center||^2
struct QuadraticLoss {
    ModelVector center;
    double scale = 1.0;
};

// Multi-class softmax regression over a shard of a dataset. The parameter
// vector stacks one weight row per class: w[c * features + f].
struct SoftmaxLoss {
    std::shared_ptr<const Dataset> data;
    std::vector<std::int32_t> shard; // dataset row indices this loss averages over
    std::int32_t classes = 0;
    std::int32_t features = 0;
};

using LossModel = std::variant<QuadraticLoss, SoftmaxLoss>;

inline std::size_t dimension(const LossModel& model) {
    if (const auto* q = std::get_if<QuadraticLoss>(&model)) return q->center.size();
    const auto& s = std::get<SoftmaxLoss>(model);
    return static_cast<std::size_t>(s.classes) * s.features;
}

namespace detail {

inline void require_model_dim(const LossModel& model, const ModelVector& x, const char* where) {
    if (x.size() != dimension(model))
        throw ConfigError(std::string(where) + ": parameter dimension " + std::to_string(x.size()) +
                          " does not match model dimension " + std::to_string(dimension(model)));
}

// scores -> stable log-sum-exp and probabilities
inline double softmax_row(const SoftmaxLoss& m, const ModelVector& w, std::span<const double> feat,
                          std::vector<double>& probs) {
    probs.resize(m.classes);
    double max_score = -1e300;
    for (std::int32_t c = 0; c < m.classes; ++c) {
        double s = 0.0;
        const double* wc = w.data() + static_cast<std::size_t>(c) * m.features;
        for (std::int32_t f = 0; f < m.features; ++f) s += wc[f] * feat[f];
        probs[c] = s;
        max_score = std::max(max_score, s);
    }
    double z = 0.0;
    for (std::int32_t c = 0; c < m.classes; ++c) {
        probs[c] = std::exp(probs[c] - max_score);
        z += probs[c];
    }
    const double log_z = std::log(z) + max_score;
    for (std::int32_t c = 0; c < m.classes; ++c) probs[c] /= z;
    return log_z;
}

// accumulates the cross-entropy gradient of one sample into g
inline double softmax_sample(const SoftmaxLoss& m, const ModelVector& w, std::int32_t row,
                             ModelVector* g, std::vector<double>& probs) {
    const auto feat = m.data->row(row);
    const std::int32_t label = m.data->labels[row];
    const double log_z = softmax_row(m, w, feat, probs);
    double score_label = 0.0;
    const double* wl = w.data() + static_cast<std::size_t>(label) * m.features;
    for (std::int32_t f = 0; f < m.features; ++f) score_label += wl[f] * feat[f];
    if (g) {
        for (std::int32_t c = 0; c < m.classes; ++c) {
            const double coeff = probs[c] - (c == label ? 1.0 : 0.0);
            double* gc = g->data() + static_cast<std::size_t>(c) * m.features;
            for (std::int32_t f = 0; f < m.features; ++f) gc[f] += coeff * feat[f];
        }
    }
    return log_z - score_label; // -log p(label)
}

} // namespace detail

// Loss value. For SoftmaxLoss this is the average cross-entropy over the
// shard, matching the expectation the stochastic gradients estimate.
inline double loss_value(const LossModel& model, const ModelVector& x) {
    detail::require_model_dim(model, x, "loss_value");
    if (const auto* q = std::get_if<QuadraticLoss>(&model))
        return 0.5 * q->scale * vec::dist2_sq(x, q->center);
    const auto& m = std::get<SoftmaxLoss>(model);
    if (m.shard.empty()) throw ConfigError("loss_value: softmax loss has an empty shard");
    std::vector<double> probs;
    double total = 0.0;
    for (std::int32_t row : m.shard) total += detail::softmax_sample(m, x, row, nullptr, probs);
    return total / static_cast<double>(m.shard.size());
}

// Full-batch (deterministic) gradient.
inline ModelVector exact_gradient(const LossModel& model, const ModelVector& x) {
    detail::require_model_dim(model, x, "exact_gradient");
    if (const auto* q = std::get_if<QuadraticLoss>(&model)) {
        ModelVector g = vec::sub(x, q->center);
        for (double& v : g) v *= q->scale;
        return g;
    }
    const auto& m = std::get<SoftmaxLoss>(model);
    if (m.shard.empty()) throw ConfigError("exact_gradient: softmax loss has an empty shard");
    ModelVector g = vec::zeros(x.size());
    std::vector<double> probs;
    for (std::int32_t row : m.shard) detail::softmax_sample(m, x, row, &g, probs);
    const double inv = 1.0 / static_cast<double>(m.shard.size());
    for (double& v : g) v *= inv;
    return g;
}

// Mini-batch gradient over explicit dataset row indices; unbiased for
// exact_gradient when the batch is drawn uniformly from the shard.
inline ModelVector stochastic_gradient(const LossModel& model, const ModelVector& x,
                                       std::span<const std::int32_t> batch) {
    detail::require_model_dim(model, x, "stochastic_gradient");
    if (batch.empty()) throw ConfigError("stochastic_gradient: empty batch");
    if (std::holds_alternative<QuadraticLoss>(model)) return exact_gradient(model, x);
    const auto& m = std::get<SoftmaxLoss>(model);
    ModelVector g = vec::zeros(x.size());
    std::vector<double> probs;
    for (std::int32_t row : batch) {
        if (row < 0 || row >= m.data->rows)
            throw ConfigError("stochastic_gradient: batch index out of range");
        detail::softmax_sample(m, x, row, &g, probs);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : g) v *= inv;
    return g;
}

// ---------------------------------------------------------------------------
// The optimization problem the regular workers and the master jointly solve.
// ---------------------------------------------------------------------------

struct Problem {
    std::vector<LossModel> worker_losses; // regular workers only
    LossModel regularizer;                // the master's deterministic term
};

inline double problem_value(const Problem& p, const ModelVector& x) {
    double v = loss_value(p.regularizer, x);
    for (const auto& loss : p.worker_losses) v += loss_value(loss, x);
    return v;
}

inline ModelVector problem_gradient(const Problem& p, const ModelVector& x) {
    ModelVector g = exact_gradient(p.regularizer, x);
    for (const auto& loss : p.worker_losses) vec::axpy(g, 1.0, exact_gradient(loss, x));
    return g;
}

inline bool all_quadratic(const Problem& p) {
    if (!std::holds_alternative<QuadraticLoss>(p.regularizer)) return false;
    for (const auto& loss : p.worker_losses)
        if (!std::holds_alternative<QuadraticLoss>(loss)) return false;
    return true;
}

// Minimizer of sum_i E[F_i](x) + f0(x). Closed form for all-quadratic
// problems; full-gradient descent with Armijo backtracking otherwise.
inline ModelVector exact_minimizer(const Problem& p, double grad_tol = 1e-10,
                                   long max_iters = 200000) {
    if (p.worker_losses.empty() && std::get_if<QuadraticLoss>(&p.regularizer) == nullptr)
        throw ConfigError("exact_minimizer: empty problem");

    if (all_quadratic(p)) {
        const auto& f0 = std::get<QuadraticLoss>(p.regularizer);
        const std::size_t d = f0.center.size();
        double total_scale = f0.scale;
        ModelVector weighted = vec::scale(f0.center, f0.scale);
        for (const auto& loss : p.worker_losses) {
            const auto& q = std::get<QuadraticLoss>(loss);
            if (q.center.size() != d)
                throw ConfigError("exact_minimizer: mixed dimensions in quadratic problem");
            total_scale += q.scale;
            vec::axpy(weighted, q.scale, q.center);
        }
        if (total_scale <= 0.0)
            throw ConfigError("exact_minimizer: quadratic problem has no curvature");
        return vec::scale(weighted, 1.0 / total_scale);
    }

    // Armijo-backtracked gradient descent; the strongly convex regularizer
    // guarantees a unique minimizer.
    ModelVector x = vec::zeros(dimension(p.regularizer));
    double fx = problem_value(p, x);
    double step = 1.0;
    for (long it = 0; it < max_iters; ++it) {
        ModelVector g = problem_gradient(p, x);
        const double gnorm_sq = vec::norm2_sq(g);
        if (std::sqrt(gnorm_sq) <= grad_tol) return x;
        double t = step;
        for (int bt = 0; bt < 60; ++bt) {
            ModelVector cand = x;
            vec::axpy(cand, -t, g);
            const double fc = problem_value(p, cand);
            if (fc <= fx - 0.5 * t * gnorm_sq) {
                x = std::move(cand);
                fx = fc;
                step = t * 1.5; // let the step grow back
                break;
            }
            t *= 0.5;
            if (bt == 59)
                throw NumericError("exact_minimizer: line search failed at iteration " +
                                   std::to_string(it));
        }
    }
    const double gnorm = vec::norm2(problem_gradient(p, x));
    if (gnorm > 1e-8)
        throw NumericError("exact_minimizer: no convergence within iteration cap, |grad| = " +
                           std::to_string(gnorm));
    return x;
}

// Minimum penalty weight that makes the consensus formulation solve the
// original problem: max over workers of ||grad E[F_i](x*)||_inf.
inline double consensus_threshold(const Problem& p, const ModelVector& x_star) {
    double t = 0.0;
    for (const auto& loss : p.worker_losses)
        t = std::max(t, vec::norm_inf(exact_gradient(loss, x_star)));
    return t;
}

inline double consensus_threshold(const Problem& p) {
    return consensus_threshold(p, exact_minimizer(p));
}

// Strong convexity / smoothness constants, exact for quadratics.
struct ConvergenceProfile {
    double mu0 = 0.0, L0 = 0.0;
    std::vector<double> mu, L;
    std::vector<double> delta; // stochastic-gradient std bounds; diagnostic only

    void validate() const {
        if (!(mu0 > 0.0 && mu0 <= L0)) throw ConfigError("profile: need 0 < mu0 <= L0");
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (!(mu[i] > 0.0 && mu[i] <= L[i]))
                throw ConfigError("profile: need 0 < mu <= L for worker " + std::to_string(i));
    }
};

inline ConvergenceProfile profile_for(const Problem& p) {
    if (!all_quadratic(p))
        throw ConfigError("profile_for: curvature constants are only exact for quadratic problems");
    ConvergenceProfile prof;
    prof.mu0 = prof.L0 = std::get<QuadraticLoss>(p.regularizer).scale;
    for (const auto& loss : p.worker_losses) {
        const double s = std::get<QuadraticLoss>(loss).scale;
        prof.mu.push_back(s);
        prof.L.push_back(s);
        prof.delta.push_back(0.0);
    }
    prof.validate();
    return prof;
}

} // namespace byzadmm

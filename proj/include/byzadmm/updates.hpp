#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "byzadmm/errors.hpp"
#include "byzadmm/vec.hpp"

namespace byzadmm {

struct HyperParams {
    double lambda = 0.0; // consensus-penalty weight; also the dual box radius
    double beta = 1.0;   // augmented-Lagrangian constant / dual stepsize
    int m = 1;           // total workers
    int q = 0;           // byzantine workers

    int r() const { return m - q; }

    void validate() const {
        if (lambda < 0.0) throw ConfigError("hyper: lambda must be >= 0");
        if (beta <= 0.0) throw ConfigError("hyper: beta must be > 0");
        if (m < 1 || q < 0 || q > m) throw ConfigError("hyper: need m >= 1 and 0 <= q <= m");
        if (r() < 1) throw ConfigError("hyper: at least one regular worker required");
    }
};

// Per-dimension clamp onto [-lambda, lambda].
inline ModelVector proj_box(const ModelVector& v, double lambda) {
    if (lambda < 0.0) throw ConfigError("proj_box: lambda must be >= 0");
    ModelVector out(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) out[t] = std::clamp(v[t], -lambda, lambda);
    return out;
}

// Element-wise sign with sign(0) = 0.
inline ModelVector elementwise_sign(const ModelVector& v) {
    ModelVector out(v.size());
    for (std::size_t t = 0; t < v.size(); ++t)
        out[t] = v[t] > 0.0 ? 1.0 : (v[t] < 0.0 ? -1.0 : 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Simplified stochastic ADMM (primal + projected dual form)
// ---------------------------------------------------------------------------

struct AdmmWorkerState {
    ModelVector x;
    ModelVector eta_curr; // eta^k
    ModelVector eta_prev; // eta^{k-1}
};

// x^{k+1} = x^k - alpha * (grad + 2*eta^k - eta^{k-1})
inline ModelVector admm_worker_step(const AdmmWorkerState& s, const ModelVector& grad,
                                    double alpha) {
    vec::require_same_dim(s.x, grad, "admm_worker_step");
    if (!vec::all_finite(grad)) throw NumericError("admm_worker_step: non-finite gradient");
    ModelVector out(s.x.size());
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = s.x[t] - alpha * (grad[t] + 2.0 * s.eta_curr[t] - s.eta_prev[t]);
    return out;
}

// eta^{k+1} = proj_lambda(eta^k + (beta/2) * (x^{k+1} - x0^{k+1}))
inline ModelVector admm_dual_step(const AdmmWorkerState& s, const ModelVector& x_new,
                                  const ModelVector& x0_new, const HyperParams& hp) {
    vec::require_same_dim(x_new, x0_new, "admm_dual_step");
    ModelVector out(x_new.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
        const double v = s.eta_curr[t] + 0.5 * hp.beta * (x_new[t] - x0_new[t]);
        out[t] = std::clamp(v, -hp.lambda, hp.lambda);
    }
    return out;
}

// The master's view: the last two messages received from every worker,
// regular and byzantine alike. Entries are clamped onto the dual box on
// receipt; anything outside it is self-evidently malicious.
struct AdmmMasterState {
    ModelVector x0;
    std::vector<ModelVector> received_curr; // eta^k per worker
    std::vector<ModelVector> received_prev; // eta^{k-1} per worker
};

// x0^{k+1} = x0^k - alpha0 * (grad_f0 - sum_w (2*eta_w^k - eta_w^{k-1}))
inline ModelVector admm_master_step(const AdmmMasterState& s, const ModelVector& grad_f0,
                                    double alpha0) {
    vec::require_same_dim(s.x0, grad_f0, "admm_master_step");
    if (s.received_curr.size() != s.received_prev.size())
        throw ProtocolError("admm_master_step: mismatched message histories");
    ModelVector pull = vec::zeros(s.x0.size());
    for (std::size_t w = 0; w < s.received_curr.size(); ++w) {
        const auto& curr = s.received_curr[w];
        const auto& prev = s.received_prev[w];
        if (curr.size() != s.x0.size() || prev.size() != s.x0.size())
            throw ProtocolError("admm_master_step: missing message from worker " +
                                std::to_string(w));
        for (std::size_t t = 0; t < pull.size(); ++t) pull[t] += 2.0 * curr[t] - prev[t];
    }
    ModelVector out(s.x0.size());
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = s.x0[t] - alpha0 * (grad_f0[t] - pull[t]);
    return out;
}

// ---------------------------------------------------------------------------
// RSA subgradient baseline (workers exchange primals, sign corrections)
// ---------------------------------------------------------------------------

// x^{k+1} = x^k - alpha * (grad + lambda * sign(x^k - x0^k))
inline ModelVector rsa_worker_step(const ModelVector& x_i, const ModelVector& x0,
                                   const ModelVector& grad, double alpha, double lambda) {
    vec::require_same_dim(x_i, x0, "rsa_worker_step");
    vec::require_same_dim(x_i, grad, "rsa_worker_step");
    if (!vec::all_finite(grad)) throw NumericError("rsa_worker_step: non-finite gradient");
    ModelVector out(x_i.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
        const double diff = x_i[t] - x0[t];
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        out[t] = x_i[t] - alpha * (grad[t] + lambda * sgn);
    }
    return out;
}

// x0^{k+1} = x0^k - alpha * (grad_f0 - lambda * sum_w sign(v_w^k - x0^k))
inline ModelVector rsa_master_step(const ModelVector& x0, const std::vector<ModelVector>& received,
                                   const ModelVector& grad_f0, double alpha, double lambda) {
    vec::require_same_dim(x0, grad_f0, "rsa_master_step");
    ModelVector pull = vec::zeros(x0.size());
    for (std::size_t w = 0; w < received.size(); ++w) {
        if (received[w].size() != x0.size())
            throw ProtocolError("rsa_master_step: missing message from worker " + std::to_string(w));
        for (std::size_t t = 0; t < pull.size(); ++t) {
            const double diff = received[w][t] - x0[t];
            pull[t] += diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        }
    }
    ModelVector out(x0.size());
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = x0[t] - alpha * (grad_f0[t] - lambda * pull[t]);
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation-based SGD baselines
// ---------------------------------------------------------------------------

// x0^{k+1} = x0^k - alpha * (aggregated + grad_f0)
inline ModelVector sgd_master_step(const ModelVector& x0, const ModelVector& aggregated,
                                   const ModelVector& grad_f0, double alpha) {
    vec::require_same_dim(x0, aggregated, "sgd_master_step");
    vec::require_same_dim(x0, grad_f0, "sgd_master_step");
    ModelVector out(x0.size());
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = x0[t] - alpha * (aggregated[t] + grad_f0[t]);
    return out;
}

} // namespace byzadmm

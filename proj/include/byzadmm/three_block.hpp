#pragma once

#include <utility>
#include <vector>

#include "byzadmm/errors.hpp"
#include "byzadmm/schedule.hpp"
#include "byzadmm/updates.hpp"
#include "byzadmm/vec.hpp"

namespace byzadmm {

// Closed-form minimizer of
//   lambda*|z1 - z2| + (1/2)(z1 - a1)^2 + (1/2)(z2 - a2)^2
// The pair keeps the sum a1 + a2 and splits the difference through a clamp.
inline std::pair<double, double> prox_pair_closed_form(double a1, double a2, double lambda) {
    if (lambda < 0.0) throw ConfigError("prox_pair_closed_form: lambda must be >= 0");
    const double half_gap = 0.5 * (a2 - a1);
    const double shift = std::clamp(half_gap, -lambda, lambda);
    return {a1 + shift, a2 - shift};
}

// Three-block consensus ADMM with explicit per-edge auxiliary variables and
// two multipliers per worker. This is the pre-reduction form of the compact
// worker/master updates in updates.hpp and exists as a cross-check: with the
// same stepsizes, gradients and compatible initialization the two forms
// produce identical primal trajectories.
struct ThreeBlockState {
    ModelVector x0;
    std::vector<ModelVector> x;           // per worker
    std::vector<ModelVector> z_to_master; // z(i,0), co-located with x0's constraint
    std::vector<ModelVector> z_to_worker; // z(0,i), co-located with x_i's constraint
    std::vector<ModelVector> eta_to_master; // eta(i,0)
    std::vector<ModelVector> eta_to_worker; // eta(0,i)
};

// Initialization that matches zero duals in the compact form: the auxiliary
// variables start on their constraints and every multiplier starts at zero.
inline ThreeBlockState three_block_init(const ModelVector& x0,
                                        const std::vector<ModelVector>& workers) {
    ThreeBlockState s;
    s.x0 = x0;
    s.x = workers;
    const std::size_t r = workers.size();
    s.z_to_master.assign(r, x0);
    s.z_to_worker = workers;
    s.eta_to_master.assign(r, vec::zeros(x0.size()));
    s.eta_to_worker.assign(r, vec::zeros(x0.size()));
    return s;
}

// One x -> z -> eta sweep. `grads` holds the per-worker (stochastic or exact)
// gradients evaluated at x^k; `grad_f0` the regularizer gradient at x0^k.
inline void three_block_round(ThreeBlockState& s, const std::vector<ModelVector>& grads,
                              const ModelVector& grad_f0, double alpha0, double alpha_i,
                              const HyperParams& hp) {
    const std::size_t r = s.x.size();
    if (grads.size() != r) throw ProtocolError("three_block_round: gradient count mismatch");
    const std::size_t d = s.x0.size();

    // x-block
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t t = 0; t < d; ++t) {
            s.x[i][t] -= alpha_i * (grads[i][t] + hp.beta * s.x[i][t] -
                                    hp.beta * s.z_to_worker[i][t] - s.eta_to_worker[i][t]);
        }
    }
    {
        ModelVector pull = vec::zeros(d);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t t = 0; t < d; ++t)
                pull[t] += hp.beta * s.x0[t] - hp.beta * s.z_to_master[i][t] - s.eta_to_master[i][t];
        }
        for (std::size_t t = 0; t < d; ++t) s.x0[t] -= alpha0 * (grad_f0[t] + pull[t]);
    }

    // z-block: separable per worker and per coordinate; after dividing by
    // beta it is exactly the coupled pair prox with radius lambda/beta.
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t t = 0; t < d; ++t) {
            const double a1 = s.x0[t] - s.eta_to_master[i][t] / hp.beta;
            const double a2 = s.x[i][t] - s.eta_to_worker[i][t] / hp.beta;
            const auto [z1, z2] = prox_pair_closed_form(a1, a2, hp.lambda / hp.beta);
            s.z_to_master[i][t] = z1;
            s.z_to_worker[i][t] = z2;
        }
    }

    // dual ascent
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t t = 0; t < d; ++t) {
            s.eta_to_master[i][t] += hp.beta * (s.z_to_master[i][t] - s.x0[t]);
            s.eta_to_worker[i][t] += hp.beta * (s.z_to_worker[i][t] - s.x[i][t]);
        }
    }
}

} // namespace byzadmm

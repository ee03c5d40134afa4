#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "byzadmm/errors.hpp"
#include "byzadmm/rng.hpp"
#include "byzadmm/updates.hpp"
#include "byzadmm/vec.hpp"

namespace byzadmm {

enum class Protocol { Admm, Rsa, AggSgd };

struct AttackSpec {
    enum class Kind { None, Gaussian, SignFlip, SmallValue, LargeValue, CopyRegular };

    Kind kind = Kind::None;
    double stddev = 100.0;  // Gaussian
    double epsilon = 0.0;   // SignFlip wants < 0, SmallValue wants > 0
    int copy_target = -1;   // CopyRegular: id of the mimicked regular worker
    std::vector<int> byzantine_ids;

    bool is_byzantine(int worker) const {
        return std::find(byzantine_ids.begin(), byzantine_ids.end(), worker) !=
               byzantine_ids.end();
    }

    void validate(int m) const {
        for (int id : byzantine_ids)
            if (id < 0 || id >= m)
                throw ConfigError("attack: byzantine id " + std::to_string(id) + " out of range");
        for (std::size_t a = 0; a < byzantine_ids.size(); ++a)
            for (std::size_t b = a + 1; b < byzantine_ids.size(); ++b)
                if (byzantine_ids[a] == byzantine_ids[b])
                    throw ConfigError("attack: duplicate byzantine id");
        if (kind == Kind::SignFlip && !(epsilon < 0.0))
            throw ConfigError("attack: sign-flip requires epsilon < 0");
        if (kind == Kind::SmallValue && !(epsilon > 0.0))
            throw ConfigError("attack: small-value requires epsilon > 0");
        if (kind == Kind::Gaussian && !(stddev > 0.0))
            throw ConfigError("attack: gaussian requires std > 0");
        if (kind == Kind::CopyRegular) {
            if (copy_target < 0 || copy_target >= m)
                throw ConfigError("attack: copy-regular target out of range");
            if (is_byzantine(copy_target))
                throw ConfigError("attack: copy-regular target must be a regular worker");
        }
        if (kind != Kind::None && byzantine_ids.empty())
            throw ConfigError("attack: attack kind set but no byzantine workers");
    }
};

// Everything a byzantine worker can see when forging its round-k message.
// `k` indexes the message being generated (the master iterate `x0` carries
// the same index).
struct AttackContext {
    long k = 0;
    const ModelVector* x0 = nullptr;
    const ModelVector* own_dual = nullptr;     // byzantine dual state (dual channel only)
    const ModelVector* honest_value = nullptr; // the message an honest worker would send
    const ModelVector* copy_source = nullptr;  // the copy target's message this round
    const HyperParams* hp = nullptr;
};

namespace detail {

inline const ModelVector& need(const ModelVector* v, const char* what) {
    if (v == nullptr) throw ConfigError(std::string("byzantine_payload: missing context field ") + what);
    return *v;
}

// The value-forging attacks pick a malicious primal u and, on the dual
// channel, push it through the same projected dual recursion an honest
// worker runs, so the forged message always lands inside the box.
inline ModelVector dual_from_forged_primal(const ModelVector& u, const AttackContext& ctx) {
    const auto& x0 = need(ctx.x0, "x0");
    const auto& eta = need(ctx.own_dual, "own_dual");
    const auto& hp = *ctx.hp;
    ModelVector out(x0.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
        const double v = eta[t] + 0.5 * hp.beta * (u[t] - x0[t]);
        out[t] = std::clamp(v, -hp.lambda, hp.lambda);
    }
    return out;
}

} // namespace detail

// u^k = x0^k - epsilon / max{k(k+1), 1}, a perturbation that vanishes with k
inline ModelVector small_value_primal(const ModelVector& x0, double epsilon, long k) {
    const double denom = std::max(static_cast<double>(k) * (static_cast<double>(k) + 1.0), 1.0);
    ModelVector u(x0.size());
    for (std::size_t t = 0; t < u.size(); ++t) u[t] = x0[t] - epsilon / denom;
    return u;
}

// u^k = x0^k - (4*lambda/beta) * (-1)^k, alternating at the largest magnitude
// the dual box will pass through
inline ModelVector large_value_primal(const ModelVector& x0, const HyperParams& hp, long k) {
    const double swing = 4.0 * hp.lambda / hp.beta * (k % 2 == 0 ? 1.0 : -1.0);
    ModelVector u(x0.size());
    for (std::size_t t = 0; t < u.size(); ++t) u[t] = x0[t] - swing;
    return u;
}

inline ModelVector byzantine_payload(const AttackSpec& spec, Protocol protocol,
                                     const AttackContext& ctx, RngStream& rng) {
    using Kind = AttackSpec::Kind;
    switch (spec.kind) {
        case Kind::None:
            return detail::need(ctx.honest_value, "honest_value");

        case Kind::Gaussian: {
            const auto& x0 = detail::need(ctx.x0, "x0");
            ModelVector payload(x0.size());
            for (double& t : payload) t = rng.normal(0.0, spec.stddev);
            if (protocol == Protocol::Admm) return proj_box(payload, ctx.hp->lambda);
            return payload;
        }

        case Kind::SignFlip: {
            // flip whatever the honest protocol would have sent
            ModelVector payload = vec::scale(detail::need(ctx.honest_value, "honest_value"),
                                             spec.epsilon);
            if (protocol == Protocol::Admm) return proj_box(payload, ctx.hp->lambda);
            return payload;
        }

        case Kind::SmallValue: {
            ModelVector u = small_value_primal(detail::need(ctx.x0, "x0"), spec.epsilon, ctx.k);
            if (protocol == Protocol::Admm) return detail::dual_from_forged_primal(u, ctx);
            return u;
        }

        case Kind::LargeValue: {
            ModelVector u = large_value_primal(detail::need(ctx.x0, "x0"), *ctx.hp, ctx.k);
            if (protocol == Protocol::Admm) return detail::dual_from_forged_primal(u, ctx);
            return u;
        }

        case Kind::CopyRegular:
            return detail::need(ctx.copy_source, "copy_source");
    }
    throw ConfigError("byzantine_payload: unknown attack kind");
}

} // namespace byzadmm

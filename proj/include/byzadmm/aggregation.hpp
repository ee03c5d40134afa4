#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "byzadmm/errors.hpp"
#include "byzadmm/vec.hpp"

namespace byzadmm {

enum class AggregationRule { Mean, CoordinateMedian, GeometricMedian };

inline ModelVector aggregate_mean(std::span<const ModelVector> vs) {
    ModelVector out = vec::zeros(vs[0].size());
    for (const auto& v : vs) vec::axpy(out, 1.0, v);
    for (double& t : out) t /= static_cast<double>(vs.size());
    return out;
}

// Per-coordinate median; even counts take the midpoint of the two central
// order statistics.
inline ModelVector aggregate_coordinate_median(std::span<const ModelVector> vs) {
    const std::size_t n = vs.size();
    ModelVector out(vs[0].size());
    std::vector<double> col(n);
    for (std::size_t t = 0; t < out.size(); ++t) {
        for (std::size_t w = 0; w < n; ++w) col[w] = vs[w][t];
        std::nth_element(col.begin(), col.begin() + n / 2, col.end());
        double med = col[n / 2];
        if (n % 2 == 0) {
            const double lo = *std::max_element(col.begin(), col.begin() + n / 2);
            med = 0.5 * (lo + med);
        }
        out[t] = med;
    }
    return out;
}

// Weiszfeld iteration for the point minimizing sum_i ||v_i - m||. Starts at
// the coordinate-wise mean; a denominator hitting an anchor point is nudged
// by 1e-12 to keep the iteration defined.
inline ModelVector geometric_median(std::span<const ModelVector> vs, double tol = 1e-9,
                                    int max_iters = 200) {
    ModelVector m = aggregate_mean(vs);
    if (vs.size() == 1) return m;
    ModelVector next(m.size());
    for (int it = 0; it < max_iters; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        double weight_sum = 0.0;
        for (const auto& v : vs) {
            double dist = vec::dist2(v, m);
            if (dist < 1e-12) dist += 1e-12;
            const double w = 1.0 / dist;
            weight_sum += w;
            vec::axpy(next, w, v);
        }
        for (double& t : next) t /= weight_sum;
        const double moved = vec::dist2(next, m);
        m.swap(next);
        if (moved <= tol) break;
    }
    return m;
}

inline ModelVector aggregate(AggregationRule rule, std::span<const ModelVector> gradients) {
    if (gradients.empty()) throw ProtocolError("aggregate: no gradients received");
    for (const auto& g : gradients) vec::require_same_dim(gradients[0], g, "aggregate");
    switch (rule) {
        case AggregationRule::Mean: return aggregate_mean(gradients);
        case AggregationRule::CoordinateMedian: return aggregate_coordinate_median(gradients);
        case AggregationRule::GeometricMedian: return geometric_median(gradients);
    }
    throw ConfigError("aggregate: unknown rule");
}

} // namespace byzadmm

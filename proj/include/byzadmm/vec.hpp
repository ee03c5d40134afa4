#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "byzadmm/errors.hpp"

namespace byzadmm {

// All iterates, duals, gradients and messages are plain dense d-vectors.
using ModelVector = std::vector<double>;

namespace vec {

inline ModelVector zeros(std::size_t d) { return ModelVector(d, 0.0); }

inline void require_same_dim(const ModelVector& a, const ModelVector& b, const char* where) {
    if (a.size() != b.size()) {
        throw ConfigError(std::string(where) + ": dimension mismatch (" +
                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

inline ModelVector add(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b, "vec::add");
    ModelVector out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) out[t] = a[t] + b[t];
    return out;
}

inline ModelVector sub(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b, "vec::sub");
    ModelVector out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) out[t] = a[t] - b[t];
    return out;
}

inline ModelVector scale(const ModelVector& a, double s) {
    ModelVector out(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) out[t] = s * a[t];
    return out;
}

// y += s * x
inline void axpy(ModelVector& y, double s, const ModelVector& x) {
    require_same_dim(y, x, "vec::axpy");
    for (std::size_t t = 0; t < y.size(); ++t) y[t] += s * x[t];
}

inline double dot(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b, "vec::dot");
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += a[t] * b[t];
    return s;
}

inline double norm2_sq(const ModelVector& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double norm2(const ModelVector& a) { return std::sqrt(norm2_sq(a)); }

inline double norm_inf(const ModelVector& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::abs(v));
    return s;
}

inline double dist2_sq(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b, "vec::dist2_sq");
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const double d = a[t] - b[t];
        s += d * d;
    }
    return s;
}

inline double dist2(const ModelVector& a, const ModelVector& b) { return std::sqrt(dist2_sq(a, b)); }

inline double dist_inf(const ModelVector& a, const ModelVector& b) {
    require_same_dim(a, b, "vec::dist_inf");
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s = std::max(s, std::abs(a[t] - b[t]));
    return s;
}

inline bool all_finite(const ModelVector& a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace vec
} // namespace byzadmm

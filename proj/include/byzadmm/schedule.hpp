#pragma once

#include <cmath>
#include <limits>
#include <variant>

#include "byzadmm/errors.hpp"

namespace byzadmm {

// alpha(k) = min{ 1/(c*k + offset), cap }
struct InverseK {
    double c = 0.0;
    double offset = 1.0;
    double cap = std::numeric_limits<double>::infinity();
};

// alpha(k) = 1/(offset + c*sqrt(k))
struct InverseSqrtK {
    double c = 0.0;
    double offset = 1.0;
};

using StepsizeSchedule = std::variant<InverseK, InverseSqrtK>;

inline void validate_schedule(const StepsizeSchedule& s) {
    if (const auto* ik = std::get_if<InverseK>(&s)) {
        if (ik->c < 0.0 || ik->offset <= 0.0 || ik->cap <= 0.0)
            throw ConfigError("schedule: inv-k needs c >= 0, offset > 0, cap > 0");
        return;
    }
    const auto& sk = std::get<InverseSqrtK>(s);
    if (sk.c < 0.0 || sk.offset <= 0.0)
        throw ConfigError("schedule: inv-sqrt-k needs c >= 0, offset > 0");
}

inline double stepsize(const StepsizeSchedule& s, long k) {
    if (k < 0) throw ConfigError("stepsize: round index must be >= 0");
    if (const auto* ik = std::get_if<InverseK>(&s))
        return std::min(1.0 / (ik->c * static_cast<double>(k) + ik->offset), ik->cap);
    const auto& sk = std::get<InverseSqrtK>(s);
    return 1.0 / (sk.offset + sk.c * std::sqrt(static_cast<double>(k)));
}

} // namespace byzadmm

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace byzadmm {

// splitmix64: tiny, fast, and fully portable. Every random draw in a run is
// produced by a stream keyed on (seed, worker, round, purpose), so reruns and
// any parallel execution order give bit-identical results.
namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}

} // namespace detail

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {
        // burn-in so nearby seeds decorrelate
        detail::splitmix64(state_);
        detail::splitmix64(state_);
    }

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    // uniform in (0, 1]
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // uniform index in [0, n), n > 0
    std::size_t index(std::size_t n) {
        using u128 = unsigned __int128;
        return static_cast<std::size_t>((static_cast<u128>(next_u64()) * n) >> 64);
    }

    // Box-Muller; two uniform draws per sample.
    double normal(double mean = 0.0, double stddev = 1.0) {
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

enum class StreamPurpose : std::uint64_t {
    Batch = 1,
    Attack = 2,
    Partition = 3,
    Synthetic = 4,
};

inline RngStream worker_stream(std::uint64_t seed, std::uint64_t worker, std::uint64_t round,
                               StreamPurpose purpose) {
    std::uint64_t key = detail::mix(seed, static_cast<std::uint64_t>(purpose));
    key = detail::mix(key, worker + 1);
    key = detail::mix(key, round + 1);
    return RngStream(key);
}

} // namespace byzadmm

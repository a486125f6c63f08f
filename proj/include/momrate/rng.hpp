#pragma once

#include <momrate/exact.hpp>

#include <cmath>
#include <cstdint>

namespace momrate {

/**
 * @brief Counter-based random stream: 64-bit avalanche mix of (key, counter).
 *
 * Each (master seed, stream id) pair names an independent stream, and every
 * draw is a pure function of (key, counter). Streams can therefore be split
 * per chunk or per row with no state hand-off, which is what makes Monte
 * Carlo results independent of the worker count. The mixer is the splitmix64
 * finalizer; output sequences pass the usual sanity moments (see tests).
 */
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : key_(mix64(master_seed ^ mix64(stream_id + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

    /// Uniform double strictly inside (0, 1): ((bits >> 11) + 0.5) * 2^-53.
    double next_u01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53; }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/**
 * @brief Standard normal quantile by safeguarded Newton on Phi(x) = u.
 *
 * Phi is evaluated through erfc, the derivative is the normal density, and a
 * bisection bracket guarantees convergence from the crude initial guess.
 * Deterministic and platform-stable: no rejection sampling, no lookup tables.
 */
inline double inverse_normal_cdf(double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("inverse_normal_cdf: u must lie in (0,1)");
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;

    bool flip = u > 0.5;
    double uu = flip ? 1.0 - u : u;

    // crude tail guess x0 ~ -(t - polynomial(t)), t = sqrt(-2 ln u)
    double t = std::sqrt(-2.0 * std::log(uu));
    double x = -(t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t));

    double lo = -40.0, hi = 0.0;  // uu <= 1/2 puts the root at x <= 0
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        double f = 0.5 * std::erfc(-x * kInvSqrt2) - uu;
        if (f >= 0.0)
            hi = x;
        else
            lo = x;
        double density = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        double next = x - f / density;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(next))) {
            x = next;
            break;
        }
        x = next;
    }
    return flip ? -x : x;
}

}  // namespace momrate

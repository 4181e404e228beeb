#pragma once

#include <cstdint>
#include <random>

namespace clmrc::num {

/// Seeded pseudo-random source with platform-independent output.
///
/// Wraps std::mt19937_64, whose sequence is fixed by the standard, and
/// derives bounded integers, uniforms and normals itself because the
/// std distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t between(std::int64_t lo, std::int64_t hi);

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal (Box-Muller, one draw per call).
    double normal();

    /// Normal(0, std) resampled until it falls within two standard deviations.
    double truncated_normal(double stddev);

    /// Deterministic child seed for a sub-stream (splitmix64 mixing).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

}  // namespace clmrc::num

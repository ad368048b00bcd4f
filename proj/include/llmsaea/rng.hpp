#pragma once

#include <cstdint>
#include <random>

namespace llmsaea {

/// Run-local random source.
///
/// Wraps a 64-bit Mersenne twister and derives uniform reals and bounded
/// integers with fixed bit manipulations, so streams are identical across
/// standard library implementations (std::uniform_*_distribution is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n)
    {
        // rejection sampling over the largest multiple of n
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

    /// Fresh seed for a derived stream (sub-optimizers, model fitting).
    std::uint64_t split() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace llmsaea

#pragma once

#include <cstdint>
#include <random>

namespace glr {

// Portable random stream. std::*_distribution is implementation-defined, so
// draws are derived from raw mt19937_64 output to keep traces identical
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (no cached spare).
    double normal();

    /// Uniform integer in [0, n), rejection-sampled. n must be > 0.
    std::uint64_t below(std::uint64_t n);

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a lane index.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t lane) noexcept;

} // namespace glr

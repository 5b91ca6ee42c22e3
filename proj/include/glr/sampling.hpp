#pragma once

#include "glr/core.hpp"
#include "glr/rng.hpp"

namespace glr {

struct SamplerConfig {
    double temperature = 0.6;
    double top_p = 0.95;
    std::size_t top_k = 20;
    double min_p = 0.0;

    void validate() const;
};

/// Truncates `dist` in the order top-k, min-p, top-p and renormalizes the
/// survivors. The argmax always survives. Temperature is not applied here;
/// `dist` is expected to be the temperature-scaled softmax already.
ProbDist filter_distribution(const ProbDist& dist, const SamplerConfig& cfg);

/// Inverse-CDF draw; consumes exactly one uniform from rng.
TokenId sample(const ProbDist& dist, Rng& rng);

} // namespace glr

#include "glr/gate.hpp"

#include "glr/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace glr {

double truncated_entropy(const TopKCandidates& candidates) {
    double h = 0.0;
    for (double p : candidates.probs()) {
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    // Rounding can leave -0.0 or a hair below zero on one-hot input.
    return std::max(h, 0.0);
}

double normalized_entropy(double h, std::size_t k) {
    if (k < 2) {
        throw Error(ErrorKind::invalid_parameter, "normalized entropy needs k >= 2, got " + std::to_string(k));
    }
    if (!(h >= 0.0)) {
        throw Error(ErrorKind::invalid_input, "entropy must be non-negative");
    }
    return std::clamp(h / std::log(static_cast<double>(k)), 0.0, 1.0);
}

EntropyReading read_entropy(const TopKCandidates& candidates) {
    const double h = truncated_entropy(candidates);
    return EntropyReading{h, normalized_entropy(h, candidates.k()), candidates.k()};
}

GateDecision gate_decision(const EntropyReading& reading, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "tau must lie in [0, 1]");
    }
    const GateMode mode = reading.normalized <= tau ? GateMode::deterministic : GateMode::exploratory;
    return GateDecision{mode, tau, reading, false};
}

std::string_view to_string(GateMode mode) noexcept {
    return mode == GateMode::deterministic ? "deterministic" : "exploratory";
}

} // namespace glr

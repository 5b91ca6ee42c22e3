#pragma once

#include "glr/core.hpp"

#include <string_view>

namespace glr {

struct EntropyReading {
    double raw = 0.0;        ///< truncated entropy, nats
    double normalized = 0.0; ///< clamp(raw / ln k, 0, 1)
    std::size_t k = 0;
};

enum class GateMode { deterministic, exploratory };

struct GateDecision {
    GateMode mode = GateMode::deterministic;
    double threshold = 0.0;
    EntropyReading reading;
    /// Set when a controller bypassed the threshold test (global soft
    /// inputs, the no-gating ablation). mode is then exploratory regardless.
    bool forced = false;
};

/// -sum p ln p over the renormalized candidates, with 0 ln 0 = 0.
double truncated_entropy(const TopKCandidates& candidates);

/// clamp(h / ln k, 0, 1). Requires k >= 2.
double normalized_entropy(double h, std::size_t k);

/// Truncated entropy of the top-k renormalized distribution, raw and normalized.
EntropyReading read_entropy(const TopKCandidates& candidates);

/// Deterministic iff normalized <= tau; the boundary itself is deterministic.
GateDecision gate_decision(const EntropyReading& reading, double tau);

std::string_view to_string(GateMode mode) noexcept;

} // namespace glr

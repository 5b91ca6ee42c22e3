#pragma once

#include "glr/core.hpp"

namespace glr {

struct RegularizationConfig {
    double epsilon = 1e-6;
    bool enabled = true;
};

/// Probability-weighted mixture of the candidates' embedding rows.
EmbeddingVector soft_embedding(const TopKCandidates& candidates, const EmbeddingTable& table);

/// Mixture over the full vocabulary: sum_v p(v) e_v.
EmbeddingVector soft_embedding(const ProbDist& dist, const EmbeddingTable& table);

/// Pushes `soft` away from `dominant` by an entropy-scaled step:
///   delta = soft - dominant
///   out   = soft + h * delta / (|delta| + eps) * |delta|
/// The step is zero when h = 0 or soft == dominant, and never points toward
/// `dominant`. `cfg.enabled` is not consulted here; callers decide.
EmbeddingVector contrastive_regularize(std::span<const double> soft, std::span<const double> dominant,
                                       double normalized_entropy, const RegularizationConfig& cfg);

} // namespace glr

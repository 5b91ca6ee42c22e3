#include "glr/latent.hpp"

#include "glr/error.hpp"

#include <cmath>

namespace glr {

EmbeddingVector soft_embedding(const TopKCandidates& candidates, const EmbeddingTable& table) {
    EmbeddingVector out(table.dim(), 0.0);
    const auto tokens = candidates.tokens();
    const auto probs = candidates.probs();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto row = table.row(tokens[i]);
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += probs[i] * row[j];
        }
    }
    return out;
}

EmbeddingVector soft_embedding(const ProbDist& dist, const EmbeddingTable& table) {
    if (dist.size() != table.rows()) {
        throw Error(ErrorKind::invalid_input, "distribution size does not match embedding table rows");
    }
    EmbeddingVector out(table.dim(), 0.0);
    for (std::size_t v = 0; v < dist.size(); ++v) {
        if (dist[v] == 0.0) {
            continue;
        }
        const auto row = table.row(static_cast<TokenId>(v));
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += dist[v] * row[j];
        }
    }
    return out;
}

EmbeddingVector contrastive_regularize(std::span<const double> soft, std::span<const double> dominant,
                                       double normalized_entropy, const RegularizationConfig& cfg) {
    if (soft.size() != dominant.size()) {
        throw Error(ErrorKind::invalid_input, "soft and dominant embeddings differ in dimension");
    }
    if (!(cfg.epsilon > 0.0)) {
        throw Error(ErrorKind::invalid_parameter, "epsilon must be positive");
    }
    EmbeddingVector delta(soft.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < soft.size(); ++i) {
        delta[i] = soft[i] - dominant[i];
        sq += delta[i] * delta[i];
    }
    const double norm = std::sqrt(sq);
    const double scale = normalized_entropy * norm / (norm + cfg.epsilon);
    EmbeddingVector out(soft.begin(), soft.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += scale * delta[i];
    }
    return out;
}

} // namespace glr

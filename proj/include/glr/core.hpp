#pragma once

/**
 * Vocabulary-level value types and the distribution transforms the rest of
 * the engine is built on.
 *
 * Probability arithmetic is done in double throughout. Entropies are in nats.
 */

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace glr {

using TokenId = std::uint32_t;

/// Raw next-token scores. All entries finite.
class Logits {
public:
    Logits() = default;
    explicit Logits(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Lowest index among the maximal entries.
    TokenId argmax() const;

private:
    std::vector<double> values_;
};

/// Probability vector over the vocabulary. Non-negative, sums to 1 within 1e-9.
class ProbDist {
public:
    ProbDist() = default;
    explicit ProbDist(std::vector<double> probs);

    std::span<const double> probs() const noexcept { return probs_; }
    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    TokenId argmax() const;

    static constexpr double kSumTolerance = 1e-9;

private:
    std::vector<double> probs_;
};

/// The k highest-probability tokens with their mass renormalized to 1.
/// tokens[0] is the dominant token, tokens[1] (if k >= 2) the runner-up.
class TopKCandidates {
public:
    TopKCandidates(std::vector<TokenId> tokens, std::vector<double> probs);

    std::span<const TokenId> tokens() const noexcept { return tokens_; }
    std::span<const double> probs() const noexcept { return probs_; }
    std::size_t k() const noexcept { return tokens_.size(); }

    TokenId dominant() const noexcept { return tokens_.front(); }

private:
    std::vector<TokenId> tokens_;
    std::vector<double> probs_;
};

using EmbeddingVector = std::vector<double>;

/// Row-major |V| x d matrix of token embeddings.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> row(TokenId id) const;
    std::span<const double> data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// exp(logits / temperature), max-subtracted and normalized.
ProbDist softmax(const Logits& logits, double temperature);

/// Keep the k most probable tokens (ties to the lowest id) and renormalize.
TopKCandidates topk_renormalize(const ProbDist& dist, std::size_t k);

/// Indices sorted by descending value, ties broken by ascending index.
std::vector<TokenId> descending_order(std::span<const double> values);

bool all_finite(std::span<const double> values) noexcept;

} // namespace glr

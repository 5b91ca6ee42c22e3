#include "glr/core.hpp"

#include "glr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace glr {

namespace {

TokenId first_max(std::span<const double> values) {
    if (values.empty()) {
        throw Error(ErrorKind::invalid_input, "argmax of empty vector");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return static_cast<TokenId>(best);
}

} // namespace

bool all_finite(std::span<const double> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Logits::Logits(std::vector<double> values) : values_(std::move(values)) {
    if (!all_finite(values_)) {
        throw Error(ErrorKind::invalid_input, "logits contain non-finite entries");
    }
}

TokenId Logits::argmax() const { return first_max(values_); }

ProbDist::ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) {
        throw Error(ErrorKind::invalid_input, "empty probability vector");
    }
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || p > 1.0) {
            throw Error(ErrorKind::invalid_input, "probability outside [0, 1]: " + std::to_string(p));
        }
        total += p;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
        throw Error(ErrorKind::invalid_input, "probabilities sum to " + std::to_string(total));
    }
}

TokenId ProbDist::argmax() const { return first_max(probs_); }

TopKCandidates::TopKCandidates(std::vector<TokenId> tokens, std::vector<double> probs)
    : tokens_(std::move(tokens)), probs_(std::move(probs)) {
    if (tokens_.empty() || tokens_.size() != probs_.size()) {
        throw Error(ErrorKind::invalid_input, "top-k candidates need k >= 1 tokens with one prob each");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        if (!(probs_[i] >= 0.0)) {
            throw Error(ErrorKind::invalid_input, "negative candidate probability");
        }
        if (i > 0 && probs_[i] > probs_[i - 1]) {
            throw Error(ErrorKind::invalid_input, "candidate probabilities must be non-increasing");
        }
        total += probs_[i];
    }
    if (std::abs(total - 1.0) > ProbDist::kSumTolerance) {
        throw Error(ErrorKind::invalid_input, "candidate probabilities sum to " + std::to_string(total));
    }
    std::vector<TokenId> sorted = tokens_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(ErrorKind::invalid_input, "duplicate candidate token");
    }
}

EmbeddingTable::EmbeddingTable(std::size_t rows, std::size_t dim, std::vector<double> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
    if (rows_ == 0 || dim_ == 0 || data_.size() != rows_ * dim_) {
        throw Error(ErrorKind::invalid_input, "embedding table data does not match rows x dim");
    }
    if (!all_finite(data_)) {
        throw Error(ErrorKind::invalid_input, "embedding table contains non-finite entries");
    }
}

std::span<const double> EmbeddingTable::row(TokenId id) const {
    if (id >= rows_) {
        throw Error(ErrorKind::invalid_input,
                    "token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(rows_));
    }
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(id) * dim_, dim_);
}

std::vector<TokenId> descending_order(std::span<const double> values) {
    std::vector<TokenId> order(values.size());
    std::iota(order.begin(), order.end(), TokenId{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](TokenId a, TokenId b) { return values[a] > values[b]; });
    return order;
}

ProbDist softmax(const Logits& logits, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw Error(ErrorKind::invalid_parameter, "temperature must be positive");
    }
    const auto values = logits.values();
    if (values.empty()) {
        throw Error(ErrorKind::invalid_input, "softmax of empty logits");
    }
    const double max_value = *std::max_element(values.begin(), values.end());
    std::vector<double> probs(values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        probs[i] = std::exp((values[i] - max_value) / temperature);
        total += probs[i];
    }
    for (double& p : probs) {
        p /= total;
    }
    return ProbDist(std::move(probs));
}

TopKCandidates topk_renormalize(const ProbDist& dist, std::size_t k) {
    if (k < 1 || k > dist.size()) {
        throw Error(ErrorKind::invalid_parameter,
                    "k = " + std::to_string(k) + " outside [1, " + std::to_string(dist.size()) + "]");
    }
    const auto probs = dist.probs();
    std::vector<TokenId> order(probs.size());
    std::iota(order.begin(), order.end(), TokenId{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](TokenId a, TokenId b) {
                          return probs[a] > probs[b] || (probs[a] == probs[b] && a < b);
                      });
    order.resize(k);

    double mass = 0.0;
    for (TokenId id : order) {
        mass += probs[id];
    }
    if (!(mass > 0.0)) {
        throw Error(ErrorKind::degenerate_distribution, "top-k mass is zero");
    }
    std::vector<double> renorm(k);
    for (std::size_t i = 0; i < k; ++i) {
        renorm[i] = probs[order[i]] / mass;
    }
    return TopKCandidates(std::move(order), std::move(renorm));
}

} // namespace glr

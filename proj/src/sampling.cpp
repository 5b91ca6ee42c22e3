#include "glr/sampling.hpp"

#include "glr/error.hpp"

#include <algorithm>
#include <cmath>

namespace glr {

namespace {
// Cumulative sums are compared with a little slack so that e.g. 0.5 + 0.3 +
// 0.15 counts as reaching 0.95.
constexpr double kCumulativeSlack = 1e-12;
} // namespace

void SamplerConfig::validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw Error(ErrorKind::invalid_parameter, "sampler temperature must be positive");
    }
    if (!(top_p > 0.0 && top_p <= 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "top_p must lie in (0, 1]");
    }
    if (top_k < 1) {
        throw Error(ErrorKind::invalid_parameter, "top_k must be >= 1");
    }
    if (!(min_p >= 0.0 && min_p < 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "min_p must lie in [0, 1)");
    }
}

ProbDist filter_distribution(const ProbDist& dist, const SamplerConfig& cfg) {
    cfg.validate();
    const auto probs = dist.probs();
    std::vector<TokenId> order = descending_order(probs);

    order.resize(std::min(cfg.top_k, order.size()));

    if (cfg.min_p > 0.0) {
        const double floor = cfg.min_p * probs[order.front()];
        auto keep_end = std::find_if(order.begin() + 1, order.end(), [&](TokenId id) { return probs[id] < floor; });
        order.erase(keep_end, order.end());
    }

    double cumulative = 0.0;
    std::size_t keep = 0;
    while (keep < order.size()) {
        cumulative += probs[order[keep]];
        ++keep;
        if (cumulative >= cfg.top_p - kCumulativeSlack) {
            break;
        }
    }
    order.resize(keep);

    double mass = 0.0;
    for (TokenId id : order) {
        mass += probs[id];
    }
    std::vector<double> out(probs.size(), 0.0);
    for (TokenId id : order) {
        out[id] = probs[id] / mass;
    }
    return ProbDist(std::move(out));
}

TokenId sample(const ProbDist& dist, Rng& rng) {
    const double u = rng.uniform();
    const auto probs = dist.probs();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) {
            continue;
        }
        last_positive = i;
        cumulative += probs[i];
        if (u < cumulative) {
            return static_cast<TokenId>(i);
        }
    }
    return static_cast<TokenId>(last_positive);
}

} // namespace glr

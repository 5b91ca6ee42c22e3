#include "glr/error.hpp"
#include "glr/latent.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace glr;

namespace {

const EmbeddingTable kTable(3, 2, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0});

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

std::vector<double> sub(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = a[i] - b[i];
    }
    return d;
}

} // namespace

TEST_CASE("soft_embedding examples") {
    const auto one = soft_embedding(TopKCandidates({1, 0}, {1.0, 0.0}), kTable);
    CHECK(one == std::vector<double>{0.0, 1.0});

    const auto two = soft_embedding(TopKCandidates({0, 1}, {0.6, 0.4}), kTable);
    CHECK(two[0] == doctest::Approx(0.6));
    CHECK(two[1] == doctest::Approx(0.4));

    const auto three = soft_embedding(TopKCandidates({0, 1, 2}, {0.5, 0.3, 0.2}), kTable);
    CHECK(three[0] == doctest::Approx(0.7));
    CHECK(three[1] == doctest::Approx(0.5));

    CHECK_THROWS_AS(soft_embedding(TopKCandidates({0, 5}, {0.5, 0.5}), kTable), Error);
}

TEST_CASE("full-vocabulary soft embedding") {
    const auto e = soft_embedding(ProbDist({0.5, 0.3, 0.2}), kTable);
    CHECK(e[0] == doctest::Approx(0.7));
    CHECK(e[1] == doctest::Approx(0.5));
}

TEST_CASE("contrastive_regularize examples") {
    const RegularizationConfig cfg;
    CHECK(cfg.epsilon == 1e-6);
    const std::vector<double> e{0.6, 0.4};
    const std::vector<double> dom{1.0, 0.0};

    CHECK(contrastive_regularize(e, dom, 0.0, cfg) == e);
    CHECK(contrastive_regularize(e, e, 0.9, cfg) == e);

    const auto out = contrastive_regularize(e, dom, 0.5, cfg);
    CHECK(std::abs(out[0] - 0.4) < 1e-6);
    CHECK(std::abs(out[1] - 0.6) < 1e-6);

    CHECK_THROWS_AS(contrastive_regularize(e, std::vector<double>{1.0}, 0.5, cfg), Error);
}

TEST_CASE("property: closed form, repulsion and magnitude law") {
    const RegularizationConfig cfg;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        const std::size_t d = 1 + rng.below(32);
        const auto e = test::random_vector(rng, d, 0.5 + 3.0 * rng.uniform());
        const auto star = test::random_vector(rng, d, 0.5 + 3.0 * rng.uniform());
        const double h = rng.uniform();
        const auto out = contrastive_regularize(e, star, h, cfg);

        const auto delta = sub(e, star);
        const double dn = test::norm(delta);
        std::vector<double> limit(d);
        for (std::size_t i = 0; i < d; ++i) {
            limit[i] = (1.0 + h) * e[i] - h * star[i];
        }
        REQUIRE(test::norm(sub(out, limit)) <= h * dn * cfg.epsilon / (dn + cfg.epsilon) + 1e-9);

        const auto moved = sub(out, e);
        REQUIRE(dot(moved, delta) >= 0.0);
        REQUIRE(std::abs(test::norm(moved) - h * dn * dn / (dn + cfg.epsilon)) <= 1e-9 * (1.0 + dn * dn));

        const double h2 = std::min(1.0, h + 0.1);
        if (h2 > h && dn > 0.0) {
            REQUIRE(test::norm(sub(contrastive_regularize(e, star, h2, cfg), e)) > test::norm(moved));
        }
    }
}

TEST_CASE("property: soft embedding stays inside the candidates' coordinate range") {
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        Rng rng(seed);
        const std::size_t vocab = 8;
        const std::size_t d = 5;
        const EmbeddingTable table(vocab, d, test::random_vector(rng, vocab * d));
        const TopKCandidates c = topk_renormalize(test::random_dist(rng, vocab), 1 + rng.below(vocab));
        const auto e = soft_embedding(c, table);
        for (std::size_t j = 0; j < d; ++j) {
            double lo = HUGE_VAL;
            double hi = -HUGE_VAL;
            for (TokenId id : c.tokens()) {
                lo = std::min(lo, table.row(id)[j]);
                hi = std::max(hi, table.row(id)[j]);
            }
            REQUIRE(e[j] >= lo - 1e-12);
            REQUIRE(e[j] <= hi + 1e-12);
        }
    }
}

#include "glr/error.hpp"
#include "glr/gate.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace glr;

TEST_CASE("truncated_entropy examples") {
    CHECK(truncated_entropy(TopKCandidates({4}, {1.0})) == 0.0);
    CHECK(truncated_entropy(TopKCandidates({4, 1, 2}, {1.0, 0.0, 0.0})) == 0.0);
    CHECK(truncated_entropy(TopKCandidates({0, 1, 2}, {1.0 / 3, 1.0 / 3, 1.0 / 3})) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(std::abs(truncated_entropy(TopKCandidates({0, 1}, {0.625, 0.375})) - 0.6616) < 1e-3);
}

TEST_CASE("normalized_entropy examples") {
    CHECK(normalized_entropy(std::log(5.0), 5) == 1.0);
    CHECK(normalized_entropy(0.0, 3) == 0.0);
    const double h = -(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2));
    CHECK(std::abs(h - 1.0297) < 1e-4);
    CHECK(std::abs(normalized_entropy(1.0297, 3) - 0.9372) < 1e-3);
    CHECK(normalized_entropy(2.0, 2) == 1.0);
    CHECK_THROWS_AS(normalized_entropy(0.5, 1), Error);
}

TEST_CASE("gate_decision examples") {
    auto at = [](double n) { return EntropyReading{n * std::log(3.0), n, 3}; };
    CHECK(gate_decision(at(0.2), 0.5).mode == GateMode::deterministic);
    CHECK(gate_decision(at(0.93), 0.5).mode == GateMode::exploratory);
    CHECK(gate_decision(at(0.5), 0.5).mode == GateMode::deterministic);
    CHECK(gate_decision(at(0.5), 0.5).threshold == 0.5);
    CHECK_FALSE(gate_decision(at(0.9), 0.5).forced);
    for (double bad : {-0.01, 1.01, std::nan("")}) {
        try {
            gate_decision(at(0.5), bad);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::invalid_parameter);
        }
    }
}

TEST_CASE("property: reading stays in range and matches its definition") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        const std::size_t k = 2 + rng.below(8);
        const ProbDist p = softmax(test::random_logits(rng, k + rng.below(10), 4.0), 1.0);
        const TopKCandidates c = topk_renormalize(p, k);
        const EntropyReading r = read_entropy(c);
        REQUIRE(r.k == k);
        REQUIRE(r.normalized >= 0.0);
        REQUIRE(r.normalized <= 1.0);
        REQUIRE(r.raw <= std::log(static_cast<double>(k)) + 1e-9);
        const double expected = std::clamp(r.raw / std::log(static_cast<double>(k)), 0.0, 1.0);
        REQUIRE(std::abs(r.normalized - expected) <= 1e-12);
    }
}

TEST_CASE("property: mixing one-hot toward uniform never lowers entropy") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed + 99);
        const std::size_t k = 2 + rng.below(6);
        double a = rng.uniform();
        double b = rng.uniform();
        if (a > b) {
            std::swap(a, b);
        }
        auto mixed = [&](double lambda) {
            std::vector<TokenId> ids(k);
            std::vector<double> probs(k, lambda / static_cast<double>(k));
            probs[0] += 1.0 - lambda;
            for (std::size_t i = 0; i < k; ++i) {
                ids[i] = static_cast<TokenId>(i);
            }
            return truncated_entropy(TopKCandidates(ids, probs));
        };
        REQUIRE(mixed(a) <= mixed(b) + 1e-15);
    }
}

TEST_CASE("property: exploratory sets shrink as tau grows; tau = 1 is never exploratory") {
    Rng rng(5);
    std::vector<EntropyReading> trace;
    for (int i = 0; i < 500; ++i) {
        trace.push_back(read_entropy(topk_renormalize(softmax(test::random_logits(rng, 12, 2.0), 1.0), 3)));
    }
    trace.push_back(EntropyReading{std::log(3.0), 1.0, 3});
    for (int trial = 0; trial < 200; ++trial) {
        double t1 = rng.uniform();
        double t2 = rng.uniform();
        if (t1 > t2) {
            std::swap(t1, t2);
        }
        for (const EntropyReading& r : trace) {
            if (gate_decision(r, t2).mode == GateMode::exploratory) {
                REQUIRE(gate_decision(r, t1).mode == GateMode::exploratory);
            }
        }
    }
    for (const EntropyReading& r : trace) {
        CHECK(gate_decision(r, 1.0).mode == GateMode::deterministic);
    }
}

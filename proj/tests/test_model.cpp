#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "vaoi/model.hpp"

using namespace vaoi;

namespace {

SystemParams fig2() { return {3, 5, 9, 0.2, 0.5, {0.1, 0.2, 0.3}, {0.2, 0.2, 0.2}}; }

std::string error_of(const SystemParams& p) {
    try {
        validate_params(p);
    } catch (const ParamError& e) {
        return e.what();
    }
    return "";
}

SystemParams random_params(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> k_dist(1, 4);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    SystemParams p;
    p.K = k_dist(rng);
    p.B = k_dist(rng);
    p.delta_max = k_dist(rng);
    p.beta = u(rng);
    p.p_t = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
    double budget = u(rng);
    for (int k = 0; k < p.K; ++k) {
        p.q.push_back(budget / p.K * std::uniform_real_distribution<double>(0.05, 1.0)(rng));
        // Include the boundary gossip probabilities now and then.
        const double l = u(rng);
        p.lambda.push_back(l < 0.1 ? 0.0 : l > 0.9 ? 1.0 : l);
    }
    return p;
}

}  // namespace

TEST_CASE("validate_params accepts the reference configuration") {
    CHECK_NOTHROW(validate_params(fig2()));
}

TEST_CASE("validate_params names the violated constraint") {
    auto p = fig2();
    p.K = 2;
    p.q = {0.6, 0.6};
    p.lambda = {0.2, 0.2};
    CHECK(error_of(p) == "sum(q) > 1");

    p = fig2();
    p.beta = 0.0;
    CHECK(error_of(p) == "beta out of (0,1)");
    p.beta = 1.0;
    CHECK(error_of(p) == "beta out of (0,1)");

    p = fig2();
    p.p_t = 0.0;
    CHECK(error_of(p) == "p_t out of (0,1]");

    p = fig2();
    p.q[1] = 0.0;
    CHECK(error_of(p) == "q[1] out of (0,1)");

    p = fig2();
    p.lambda[2] = 1.5;
    CHECK(error_of(p) == "lambda[2] out of [0,1]");

    p = fig2();
    p.lambda.pop_back();
    CHECK(error_of(p) == "lambda must have K entries");

    p = fig2();
    p.delta_max = 0;
    CHECK(error_of(p) == "delta_max must be >= 1");
}

TEST_CASE("boundary values accepted by design") {
    auto p = fig2();
    p.p_t = 1.0;
    p.lambda = {0.0, 1.0, 1.0};
    CHECK_NOTHROW(validate_params(p));

    // Requests every slot: q_none = 0.
    p.q = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    CHECK_NOTHROW(validate_params(p));
    CHECK(p.q_none() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("outcome_distribution matches the product of the process laws") {
    const auto p = fig2();
    const auto outcomes = outcome_distribution(p);
    CHECK(outcomes.size() == 4u * 8u * 2u * 2u);

    const auto it = std::find_if(outcomes.begin(), outcomes.end(), [](const WeightedOutcome& w) {
        return w.outcome.request == 1 && w.outcome.gossip == 0b001 && w.outcome.energy &&
               !w.outcome.change;
    });
    REQUIRE(it != outcomes.end());
    CHECK(it->probability == doctest::Approx(0.00128).epsilon(1e-12));

    double total = 0.0;
    for (const auto& w : outcomes) total += w.probability;
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("zero gossip probability removes gossip outcomes") {
    SystemParams p{1, 1, 2, 0.5, 0.5, {0.5}, {0.0}};
    for (const auto& w : outcome_distribution(p)) CHECK(w.outcome.gossip == 0u);
    CHECK(outcome_distribution(p).size() == 8u);
}

TEST_CASE("property: outcome probabilities form a distribution") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_params(rng);
        REQUIRE_NOTHROW(validate_params(p));
        double total = 0.0;
        for (const auto& w : outcome_distribution(p)) {
            CHECK(w.probability > 0.0);
            CHECK(w.probability <= 1.0);
            CHECK(w.outcome.request >= 0);
            CHECK(w.outcome.request <= p.K);
            CHECK(w.outcome.gossip < (1u << p.K));
            total += w.probability;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("cost is the mean node age") {
    CHECK(cost(State{0, {3, 1, 2}, 1}, 3) == 2.0);
    CHECK(cost(State{0, {0, 0, 0}, 0}, 3) == 0.0);
    CHECK(cost(State{0, {9, 9, 9}, 9}, 3) == 9.0);
    // Independent of the aggregator age.
    CHECK(cost(State{2, {3, 1, 2}, 0}, 3) == cost(State{2, {3, 1, 2}, 3}, 3));
}

TEST_CASE("property: cost is permutation invariant") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> age(0, 9);
    for (int trial = 0; trial < 100; ++trial) {
        State s{1, {age(rng), age(rng), age(rng), age(rng)}, age(rng)};
        const double c = cost(s, 4);
        std::shuffle(s.delta.begin(), s.delta.end(), rng);
        CHECK(cost(s, 4) == doctest::Approx(c).epsilon(1e-15));
    }
}

TEST_CASE("causal predicate") {
    CHECK(State{0, {3, 1, 2}, 1}.is_causal());
    CHECK_FALSE(State{0, {3, 1, 2}, 2}.is_causal());
    CHECK(State{0, {4, 4, 4}, 4}.is_causal());

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> age(0, 9);
    for (int trial = 0; trial < 100; ++trial) {
        State s{0, {age(rng), age(rng), age(rng)}, 0};
        s.delta_c = *std::min_element(s.delta.begin(), s.delta.end());
        CHECK(s.is_causal());
        bool direct = true;
        for (int d : s.delta) direct = direct && d >= s.delta_c;
        CHECK(s.is_causal() == direct);
        s.delta_c += 1;
        CHECK_FALSE(s.is_causal());
    }
}

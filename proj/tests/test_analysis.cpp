#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "vaoi/analysis.hpp"

using namespace vaoi;

namespace {

SystemParams fig2() { return {3, 5, 9, 0.2, 0.5, {0.1, 0.2, 0.3}, {0.2, 0.2, 0.2}}; }

struct Solved {
    StateSpace space;
    TransitionKernel kernel;
    RviResult rvi;
    Policy policy;

    explicit Solved(const SystemParams& p)
        : space(p), kernel(build_kernel(p)),
          rvi(relative_value_iteration(kernel, state_costs(space))),
          policy(extract_policy(rvi.value, kernel)) {}
};

const Solved& fig2_solved() {
    static const Solved s(fig2());
    return s;
}

// A state is recurrent iff the aggregator age equals the freshest node age.
bool on_recurrent_shell(const State& s) {
    return *std::min_element(s.delta.begin(), s.delta.end()) == s.delta_c;
}

// Policy that is Fresh exactly when b >= 1 and delta_c >= cut[b].
Policy policy_from_rule(const StateSpace& space, const std::vector<int>& cut) {
    Policy p;
    p.actions.resize(space.count());
    for (std::size_t s = 0; s < space.count(); ++s) {
        const int b = space.battery_of(s);
        p.actions[s] = b >= 1 && space.delta_c_of(s) >= cut[b] ? 1 : 0;
    }
    return p;
}

}  // namespace

TEST_CASE("single closed class equals the recurrent shell") {
    for (const auto& p : {fig2(), SystemParams{1, 2, 3, 0.4, 0.5, {0.3}, {0.0}},
                          SystemParams{2, 1, 4, 0.6, 0.3, {0.2, 0.5}, {0.7, 0.0}}}) {
        const StateSpace space(p);
        const auto report = check_weak_accessibility(build_kernel(p), space);
        CHECK(report.weakly_accessible());
        CHECK(report.predicted_transient_ok);
        CHECK(report.predicted_transient_violations.empty());
        std::size_t shell = 0;
        for (std::size_t s = 0; s < space.count(); ++s) {
            const bool expected = on_recurrent_shell(space.decode(s));
            shell += expected;
            CHECK(report.in_closed_class[s] == expected);
        }
        REQUIRE(report.closed_class_sizes.size() == 1u);
        CHECK(report.closed_class_sizes[0] == shell);
        CHECK(report.transient_count == space.count() - shell);
    }
}

TEST_CASE("certain gossip makes part of the shell transient") {
    const SystemParams p{2, 1, 4, 0.6, 0.3, {0.2, 0.5}, {1.0, 0.0}};
    const StateSpace space(p);
    const auto report = check_weak_accessibility(build_kernel(p), space);
    CHECK(report.weakly_accessible());
    CHECK(report.predicted_transient_ok);
    std::size_t shell = 0;
    for (std::size_t s = 0; s < space.count(); ++s) {
        const bool on_shell = on_recurrent_shell(space.decode(s));
        shell += on_shell;
        if (report.in_closed_class[s]) CHECK(on_shell);
    }
    CHECK(report.closed_class_sizes[0] < shell);
}

TEST_CASE("reference configuration class sizes") {
    const StateSpace space(fig2());
    const auto report = check_weak_accessibility(build_kernel(fig2()), space);
    CHECK(report.closed_class_count == 1u);
    // Six battery levels times the 1000 age vectors whose minimum equals delta_c.
    CHECK(report.closed_class_sizes[0] == 6000u);
    CHECK(report.transient_count == 54000u);
}

TEST_CASE("a change every slot keeps node ages spread out") {
    const SystemParams p{3, 1, 4, 0.5, 1.0, {0.2, 0.2, 0.2}, {0.5, 0.5, 0.5}};
    const StateSpace space(p);
    const auto report = check_weak_accessibility(build_kernel(p), space);
    CHECK(report.change_every_slot_ok);
    CHECK(report.change_every_slot_violations.empty());
    CHECK(report.weakly_accessible());
    // All three nodes at age 1 cannot recur: at most one node is fresh per slot.
    CHECK_FALSE(report.in_closed_class[space.encode(State{0, {1, 1, 1}, 1})]);
}

TEST_CASE("optimal policy depends on the battery and aggregator age only") {
    const auto& s = fig2_solved();
    const auto ind = check_delta_independence(s.policy, s.space);
    CHECK(ind.pass);
    CHECK(ind.violations.empty());

    const auto table = extract_thresholds(s.policy, s.space);
    CHECK(table.pass());
    REQUIRE(table.threshold.size() == 6u);
    CHECK_FALSE(table.threshold[0].has_value());
    // The table reproduces the policy on every causal state.
    for (std::size_t i = 0; i < s.space.count(); ++i) {
        const State st = s.space.decode(i);
        if (!st.is_causal()) continue;
        const auto& t = table.threshold[st.b];
        CHECK((s.policy.actions[i] == 1) == (t.has_value() && st.delta_c >= *t));
    }
}

TEST_CASE("an injected off-class action is reported") {
    const auto& s = fig2_solved();
    Policy bad = s.policy;
    const auto target = s.space.encode(State{3, {7, 5, 8}, 5});
    bad.actions[target] ^= 1;
    const auto ind = check_delta_independence(bad, s.space);
    CHECK_FALSE(ind.pass);
    REQUIRE_FALSE(ind.violations.empty());
    bool found = false;
    for (auto [rep, off] : ind.violations) {
        CHECK(s.space.battery_of(rep) == s.space.battery_of(off));
        CHECK(s.space.delta_c_of(rep) == s.space.delta_c_of(off));
        found = found || rep == target || off == target;
    }
    CHECK(found);
    CHECK_THROWS_AS(extract_thresholds(bad, s.space), IndependenceViolation);
}

TEST_CASE("non-causal states are ignored by the independence check") {
    const auto& s = fig2_solved();
    Policy p = s.policy;
    p.actions[s.space.encode(State{3, {1, 5, 8}, 5})] ^= 1;
    CHECK(check_delta_independence(p, s.space).pass);
}

TEST_CASE("threshold extraction") {
    const StateSpace space(fig2());

    SUBCASE("never updating has no thresholds") {
        const auto t = extract_thresholds(constant_policy(space, Action::Cached), space);
        CHECK(t.pass());
        for (const auto& x : t.threshold) CHECK_FALSE(x.has_value());
    }
    SUBCASE("greedy has threshold zero at every non-empty level") {
        const auto t = extract_thresholds(greedy_policy(space), space);
        CHECK(t.pass());
        for (int b = 1; b <= 5; ++b) CHECK(t.threshold[b] == 0);
        CHECK(t.non_increasing_in_battery);
    }
    SUBCASE("rule-built policy round-trips") {
        const auto t = extract_thresholds(policy_from_rule(space, {99, 7, 5, 5, 3, 2}), space);
        CHECK(t.pass());
        CHECK(t.threshold == std::vector<std::optional<int>>{std::nullopt, 7, 5, 5, 3, 2});
        CHECK(t.non_increasing_in_battery);
    }
    SUBCASE("thresholds rising with battery are flagged as informational only") {
        const auto t = extract_thresholds(policy_from_rule(space, {99, 2, 3, 3, 3, 3}), space);
        CHECK(t.pass());
        CHECK_FALSE(t.non_increasing_in_battery);
    }
    SUBCASE("a 1 -> 0 fallback is a violation") {
        Policy p = policy_from_rule(space, {99, 4, 4, 4, 4, 4});
        // Drop back to Cached at delta_c = 6 for b = 2 on every causal state.
        for (std::size_t s = 0; s < space.count(); ++s)
            if (space.battery_of(s) == 2 && space.delta_c_of(s) == 6) p.actions[s] = 0;
        const auto t = extract_thresholds(p, space);
        CHECK_FALSE(t.pass());
        CHECK(std::find(t.violations.begin(), t.violations.end(), std::pair{2, 6}) !=
              t.violations.end());
    }
}

TEST_CASE("solved value is non-decreasing in the aggregator age") {
    const auto& s = fig2_solved();
    const auto m = check_value_monotone_in_delta_c(s.rvi.value, s.space);
    CHECK(m.pass);
    CHECK(m.violations.empty());
    CHECK(m.pairs_checked > 0u);

    ValueFunction broken = s.rvi.value;
    const auto victim = s.space.encode(State{2, {4, 6, 7}, 4});
    broken.values[victim] += 100.0;
    const auto bad = check_value_monotone_in_delta_c(broken, s.space);
    CHECK_FALSE(bad.pass);
    bool found = false;
    for (auto [lo, hi] : bad.violations) {
        CHECK(s.space.delta_c_of(lo) < s.space.delta_c_of(hi));
        found = found || lo == victim;
    }
    CHECK(found);
}

TEST_CASE("full structure report for the reference configuration") {
    const auto& s = fig2_solved();
    const auto r = analyze_structure(s.kernel, s.space, s.policy, s.rvi.value);
    CHECK(r.pass());
    CHECK(r.accessibility.weakly_accessible());
    REQUIRE(r.thresholds.has_value());
    CHECK(r.thresholds->non_increasing_in_battery);
}

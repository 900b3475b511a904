#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <tuple>

#include <zlib.h>

#include "vaoi/kernel.hpp"

using namespace vaoi;

namespace {

SystemParams fig2() { return {3, 5, 9, 0.2, 0.5, {0.1, 0.2, 0.3}, {0.2, 0.2, 0.2}}; }

EnvOutcome outcome(int request, std::uint32_t gossip, bool energy, bool change) {
    return EnvOutcome{request, gossip, energy, change};
}

// Independent single-node model: (b, node age, aggregator age) -> probability.
// Written straight from the update rules, enumerating request x gossip x
// energy x change. With one node, gossip copies the node onto itself.
using Triple = std::tuple<int, int, int>;
std::map<Triple, double> single_node_row(const SystemParams& p, Triple s, int action) {
    const auto [b, d, c] = s;
    const int M = p.delta_max;
    std::map<Triple, double> row;
    for (int r = 0; r < 2; ++r)
        for (int g = 0; g < 2; ++g)
            for (int e = 0; e < 2; ++e)
                for (int z = 0; z < 2; ++z) {
                    const double pr = (r ? p.q[0] : 1.0 - p.q[0]) *
                                      (g ? p.lambda[0] : 1.0 - p.lambda[0]) *
                                      (e ? p.beta : 1.0 - p.beta) * (z ? p.p_t : 1.0 - p.p_t);
                    if (pr == 0.0) continue;
                    Triple n;
                    if (r == 0) {
                        n = {std::min(b + e, p.B), std::min(d + z, M), std::min(c + z, M)};
                    } else if (action == 0 || b == 0) {
                        const int cn = std::min(c + z, M);
                        n = {std::min(b + e, p.B), cn, cn};
                    } else {
                        n = {std::min(b - 1 + e, p.B), z, z};
                    }
                    row[n] += pr;
                }
    return row;
}

double row_sum(const TransitionKernel& k, std::size_t s, Action a) {
    double sum = 0.0;
    for (double p : k.probabilities(s, a)) sum += p;
    return sum;
}

bool rows_equal(const TransitionKernel& k, std::size_t s) {
    const auto n0 = k.successors(s, Action::Cached);
    const auto n1 = k.successors(s, Action::Fresh);
    const auto p0 = k.probabilities(s, Action::Cached);
    const auto p1 = k.probabilities(s, Action::Fresh);
    return std::equal(n0.begin(), n0.end(), n1.begin(), n1.end()) &&
           std::equal(p0.begin(), p0.end(), p1.begin(), p1.end());
}

SystemParams random_params(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> small(1, 3);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    SystemParams p;
    p.K = small(rng);
    p.B = small(rng);
    p.delta_max = small(rng) + 1;
    p.beta = u(rng);
    p.p_t = u(rng) < 0.2 ? 1.0 : u(rng);
    const double budget = u(rng);
    for (int k = 0; k < p.K; ++k) {
        p.q.push_back(budget / p.K);
        const double l = u(rng);
        p.lambda.push_back(l < 0.15 ? 0.0 : l > 0.85 ? 1.0 : l);
    }
    return p;
}

}  // namespace

TEST_CASE("state index is a mixed-radix bijection") {
    const StateSpace space(fig2());
    CHECK(space.count() == 60000u);
    CHECK(space.encode(State{0, {0, 0, 0}, 0}) == 0u);
    CHECK(space.encode(State{5, {9, 9, 9}, 9}) == space.count() - 1);
    // b is most significant, delta_c least significant.
    CHECK(space.encode(State{1, {0, 0, 0}, 0}) == 10000u);
    CHECK(space.encode(State{0, {0, 0, 0}, 1}) == 1u);
    CHECK(space.encode(State{0, {0, 0, 1}, 0}) == 10u);

    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::size_t> idx(0, space.count() - 1);
    for (int i = 0; i < 1000; ++i) {
        const auto s = idx(rng);
        CHECK(space.encode(space.decode(s)) == s);
        const State st = space.decode(s);
        CHECK(space.decode(space.encode(st)) == st);
        CHECK(space.battery_of(s) == st.b);
        CHECK(space.delta_c_of(s) == st.delta_c);
    }
}

TEST_CASE("state index rejects out-of-range input") {
    const StateSpace space(fig2());
    CHECK_THROWS_AS(space.decode(space.count()), std::out_of_range);
    CHECK_THROWS_AS(space.encode(State{6, {0, 0, 0}, 0}), std::out_of_range);
    CHECK_THROWS_AS(space.encode(State{0, {0, 10, 0}, 0}), std::out_of_range);
    CHECK_THROWS_AS(space.encode(State{0, {0, 0, 0}, -1}), std::out_of_range);
    CHECK_THROWS_AS(space.encode(State{0, {0, 0}, 0}), std::out_of_range);
}

TEST_CASE("next_state: no request, gossip from the old predecessor age") {
    const auto p = fig2();
    const State s{2, {3, 1, 2}, 1};
    const State n = next_state(s, Action::Cached, outcome(0, 0b010, true, true), p);
    CHECK(n == State{3, {4, 2, 3}, 2});
}

TEST_CASE("next_state: fresh update to the requesting node") {
    const auto p = fig2();
    const State n = next_state(State{1, {5, 5, 5}, 5}, Action::Fresh, outcome(1, 0, false, false), p);
    CHECK(n == State{0, {0, 5, 5}, 0});
}

TEST_CASE("next_state: empty battery serves from cache regardless of action") {
    const auto p = fig2();
    const State s{0, {7, 7, 7}, 7};
    const auto o = outcome(2, 0, false, true);
    const State n1 = next_state(s, Action::Fresh, o, p);
    CHECK(n1 == State{0, {8, 8, 8}, 8});
    CHECK(n1 == next_state(s, Action::Cached, o, p));
}

TEST_CASE("next_state: ages saturate at the cap") {
    const auto p = fig2();
    const State s{5, {9, 9, 9}, 9};
    CHECK(next_state(s, Action::Cached, outcome(0, 0b111, false, true), p).delta ==
          std::vector<int>{9, 9, 9});
    CHECK(next_state(s, Action::Cached, outcome(3, 0, true, true), p) == s);
    // Battery saturates at B.
    CHECK(next_state(s, Action::Cached, outcome(0, 0, true, false), p).b == 5);
}

TEST_CASE("next_state: gossip reads pre-transition ages") {
    SystemParams p{2, 2, 9, 0.5, 0.5, {0.3, 0.3}, {0.5, 0.5}};
    // Node 0 gets a fresh update while node 1 copies node 0's old age.
    const State n = next_state(State{1, {5, 7}, 5}, Action::Fresh, outcome(1, 0b10, false, false), p);
    CHECK(n == State{0, {0, 5}, 0});
    // Node 0's predecessor is the last node on the ring.
    const State m = next_state(State{1, {6, 2}, 2}, Action::Cached, outcome(0, 0b01, false, false), p);
    CHECK(m.delta == std::vector<int>{2, 2});
}

TEST_CASE("kernel size of the reference configuration") {
    const auto p = fig2();
    CHECK(outcome_distribution(p).size() == 128u);
    const auto k = build_kernel(p);
    CHECK(k.num_states() == 60000u);
    for (std::size_t s = 0; s < k.num_states(); s += 997)
        for (Action a : {Action::Cached, Action::Fresh}) CHECK(k.successors(s, a).size() <= 128u);
}

TEST_CASE("single-node kernel matches the exhaustive outcome oracle") {
    const std::vector<SystemParams> cases{
        {1, 1, 2, 0.5, 0.5, {0.5}, {0.0}},
        {1, 2, 2, 0.3, 0.7, {0.4}, {0.6}},
        {1, 3, 4, 0.9, 1.0, {0.999}, {1.0}},
    };
    for (const auto& p : cases) {
        const StateSpace space(p);
        const auto k = build_kernel(p);
        for (std::size_t s = 0; s < space.count(); ++s) {
            const State st = space.decode(s);
            for (int a = 0; a < 2; ++a) {
                const auto expected = single_node_row(p, {st.b, st.delta[0], st.delta_c}, a);
                const auto next = k.successors(s, static_cast<Action>(a));
                const auto prob = k.probabilities(s, static_cast<Action>(a));
                REQUIRE(next.size() == expected.size());
                std::size_t i = 0;
                for (const auto& [t, pr] : expected) {
                    const auto [b, d, c] = t;
                    CHECK(next[i] == space.encode(State{b, {d}, c}));
                    CHECK(prob[i] == doctest::Approx(pr).epsilon(1e-14));
                    ++i;
                }
            }
        }
    }
}

TEST_CASE("hand-enumerated row for a tiny instance") {
    // s = (b=1, delta=2, delta_c=2), a = 1. Half the mass has no request and
    // keeps the capped state; the other half splits over energy x change.
    const SystemParams p{1, 1, 2, 0.5, 0.5, {0.5}, {0.0}};
    const StateSpace space(p);
    CHECK(space.count() == 18u);
    const auto k = build_kernel(p);
    const auto s = space.encode(State{1, {2}, 2});
    const auto next = k.successors(s, Action::Fresh);
    const auto prob = k.probabilities(s, Action::Fresh);
    const std::vector<std::uint32_t> want_next{0, 4, 9, 13, 17};
    const std::vector<double> want_prob{0.125, 0.125, 0.125, 0.125, 0.5};
    REQUIRE(next.size() == want_next.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
        CHECK(next[i] == want_next[i]);
        CHECK(prob[i] == want_prob[i]);
    }
    CHECK(space.decode(4) == State{0, {1}, 1});
    CHECK(space.decode(13) == State{1, {1}, 1});
}

TEST_CASE("kernel rows are stochastic with positive entries") {
    std::vector<SystemParams> cases{fig2()};
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 20; ++i) cases.push_back(random_params(rng));
    for (const auto& p : cases) {
        const auto k = build_kernel(p);
        const StateSpace space(p);
        for (std::size_t s = 0; s < k.num_states(); ++s) {
            for (Action a : {Action::Cached, Action::Fresh}) {
                CHECK(std::abs(row_sum(k, s, a) - 1.0) < 1e-12);
                const auto next = k.successors(s, a);
                for (std::size_t i = 0; i < next.size(); ++i) {
                    CHECK(k.probabilities(s, a)[i] > 0.0);
                    if (i > 0) CHECK(next[i - 1] < next[i]);
                }
            }
            if (space.battery_of(s) == 0) CHECK(rows_equal(k, s));
        }
    }
}

TEST_CASE("causal states only lead to causal states") {
    const auto p = fig2();
    const StateSpace space(p);
    const auto k = build_kernel(p);
    std::size_t causal = 0;
    for (std::size_t s = 0; s < space.count(); ++s) {
        if (!space.decode(s).is_causal()) continue;
        ++causal;
        for (Action a : {Action::Cached, Action::Fresh})
            for (auto n : k.successors(s, a)) CHECK(space.decode(n).is_causal());
    }
    CHECK(causal == 6u * (1 + 8 + 27 + 64 + 125 + 216 + 343 + 512 + 729 + 1000));
}

TEST_CASE("property: battery drains by at most one, only on a fresh service") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_params(rng);
        const StateSpace space(p);
        const auto outcomes = outcome_distribution(p);
        for (std::size_t s = 0; s < space.count(); s += 3) {
            const State st = space.decode(s);
            for (Action a : {Action::Cached, Action::Fresh})
                for (const auto& w : outcomes) {
                    const State n = next_state(st, a, w.outcome, p);
                    CHECK(n.b >= st.b - 1);
                    CHECK(n.b <= p.B);
                    if (n.b < st.b) {
                        CHECK(a == Action::Fresh);
                        CHECK(st.b >= 1);
                        CHECK(w.outcome.request != 0);
                        CHECK_FALSE(w.outcome.energy);
                    }
                }
        }
    }
}

TEST_CASE("parallel assembly equals the serial reference bit for bit") {
    CHECK(build_kernel(fig2()) == build_kernel_serial(fig2()));
    std::mt19937_64 rng(99);
    for (int i = 0; i < 5; ++i) {
        const auto p = random_params(rng);
        CHECK(build_kernel(p) == build_kernel_serial(p));
    }
}

TEST_CASE("size guard names the state count") {
    try {
        build_kernel(fig2(), 1000);
        FAIL("expected SizeError");
    } catch (const SizeError& e) {
        CHECK(std::string(e.what()).find("60000") != std::string::npos);
    }
    SystemParams huge{12, 5, 9, 0.2, 0.5, std::vector<double>(12, 0.05), std::vector<double>(12, 0.2)};
    CHECK_THROWS_AS(build_kernel(huge), SizeError);
}

TEST_CASE("from_rows merges duplicates and drops zeros") {
    const auto k = TransitionKernel::from_rows({{{1, 0.25}, {0, 0.5}, {1, 0.25}},
                                                {{0, 1.0}, {1, 0.0}},
                                                {{1, 1.0}},
                                                {{1, 1.0}}});
    CHECK(k.num_states() == 2u);
    CHECK(k.successors(0, Action::Cached).size() == 2u);
    CHECK(k.probabilities(0, Action::Cached)[1] == 0.5);
    CHECK(k.successors(0, Action::Fresh).size() == 1u);
    CHECK_THROWS(TransitionKernel::from_rows({{{2, 1.0}}, {{0, 1.0}}}));
}

TEST_CASE("gzipped kernel export") {
    const SystemParams p{1, 1, 2, 0.5, 0.5, {0.5}, {0.0}};
    const auto k = build_kernel(p);
    const auto path = std::filesystem::temp_directory_path() / "vaoi_kernel_test.csv.gz";
    export_kernel_csv_gz(k, path);

    gzFile f = gzopen(path.string().c_str(), "rb");
    REQUIRE(f != nullptr);
    std::string text;
    char buf[4096];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) text.append(buf, n);
    gzclose(f);
    std::filesystem::remove(path);

    CHECK(text.rfind("state_index,action,next_state_index,probability\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == k.nonzeros() + 1);
    CHECK(text.find("\n17,1,0,0.125\n") != std::string::npos);
}

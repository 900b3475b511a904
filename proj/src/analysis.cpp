#include "vaoi/analysis.hpp"

#include <algorithm>
#include <map>

#include <fmt/core.h>

#include "graph.hpp"

namespace vaoi {

AccessibilityReport check_weak_accessibility(const TransitionKernel& kernel,
                                             const StateSpace& space) {
    const std::size_t n = kernel.num_states();
    if (n != space.count()) throw std::invalid_argument("kernel does not match state space");

    detail::CsrGraph g;
    g.num_vertices = n;
    g.row_start.reserve(n + 1);
    std::vector<std::uint32_t> merged;
    for (std::size_t s = 0; s < n; ++s) {
        const auto s0 = kernel.successors(s, Action::Cached);
        const auto s1 = kernel.successors(s, Action::Fresh);
        merged.clear();
        std::set_union(s0.begin(), s0.end(), s1.begin(), s1.end(), std::back_inserter(merged));
        g.target.insert(g.target.end(), merged.begin(), merged.end());
        g.row_start.push_back(g.target.size());
    }
    const auto comps = detail::closed_components(g);

    AccessibilityReport rep;
    rep.in_closed_class.resize(n);
    for (int c = 0; c < comps.count; ++c) {
        if (comps.closed[c]) {
            ++rep.closed_class_count;
            rep.closed_class_sizes.push_back(comps.size[c]);
        }
    }
    const auto& p = space.params();
    const bool every_slot_changes = p.p_t >= 1.0;
    std::vector<int> digits(space.K() + 1);
    std::vector<int> at_age(p.delta_max + 1);
    for (std::size_t s = 0; s < n; ++s) {
        const bool closed = comps.closed[comps.component[s]];
        rep.in_closed_class[s] = closed;
        if (!closed) ++rep.transient_count;

        space.decode_digits(s, digits);
        const int dc = digits.back();
        bool some_fresher = false;
        bool all_staler = true;
        for (int k = 0; k < space.K(); ++k) {
            some_fresher |= digits[k] < dc;
            all_staler &= digits[k] > dc;
        }
        if ((some_fresher || all_staler) && closed) {
            rep.predicted_transient_ok = false;
            rep.predicted_transient_violations.push_back(s);
        }

        if (every_slot_changes) {
            std::fill(at_age.begin(), at_age.end(), 0);
            for (int k = 0; k < space.K(); ++k) ++at_age[digits[k]];
            bool crowded = false;
            for (int age = 1; age < p.delta_max; ++age) crowded |= at_age[age] > 2 * age - 1;
            if (crowded && closed) {
                rep.change_every_slot_ok = false;
                rep.change_every_slot_violations.push_back(s);
            }
        }
    }
    return rep;
}

IndependenceReport check_delta_independence(const Policy& policy, const StateSpace& space) {
    if (policy.size() != space.count()) throw std::invalid_argument("policy does not match state space");
    const auto& p = space.params();
    const std::size_t groups = static_cast<std::size_t>(p.B + 1) * (p.delta_max + 1);
    std::vector<std::size_t> representative(groups, SIZE_MAX);

    IndependenceReport rep;
    std::vector<int> digits(space.K() + 1);
    for (std::size_t s = 0; s < space.count(); ++s) {
        const int b = space.decode_digits(s, digits);
        const int dc = digits.back();
        if (!std::all_of(digits.begin(), digits.end() - 1, [dc](int d) { return d >= dc; }))
            continue;
        auto& r = representative[static_cast<std::size_t>(b) * (p.delta_max + 1) + dc];
        if (r == SIZE_MAX) {
            r = s;
        } else if (policy.actions[s] != policy.actions[r]) {
            rep.pass = false;
            rep.violations.emplace_back(r, s);
        }
    }
    return rep;
}

ThresholdTable extract_thresholds(const Policy& policy, const StateSpace& space) {
    const auto independence = check_delta_independence(policy, space);
    if (!independence.pass)
        throw IndependenceViolation(fmt::format(
            "policy depends on node ages within {} causal (b, delta_c) classes",
            independence.violations.size()));

    const auto& p = space.params();
    ThresholdTable table;
    table.threshold.resize(p.B + 1);
    // Every node at the cap is causal for any delta_c.
    std::vector<int> digits(space.K() + 1, p.delta_max);
    for (int b = 0; b <= p.B; ++b) {
        std::optional<int> thr;
        for (int dc = 0; dc <= p.delta_max; ++dc) {
            digits.back() = dc;
            const bool fresh = policy.actions[space.encode_digits(b, digits)] != 0;
            if (fresh && b == 0) table.violations.emplace_back(b, dc);
            if (fresh && !thr) thr = dc;
            if (!fresh && thr) table.violations.emplace_back(b, dc);
        }
        table.threshold[b] = thr;
    }

    auto level = [&](int b) { return table.threshold[b].value_or(p.delta_max + 1); };
    for (int b = 2; b <= p.B; ++b)
        if (level(b) > level(b - 1)) table.non_increasing_in_battery = false;
    return table;
}

MonotonicityReport check_value_monotone_in_delta_c(const ValueFunction& value,
                                                   const StateSpace& space, double tolerance) {
    if (value.values.size() != space.count())
        throw std::invalid_argument("value function does not match state space");
    const auto& p = space.params();
    const int K = space.K();
    const auto radix = static_cast<std::size_t>(p.delta_max + 1);

    MonotonicityReport rep;
    std::vector<int> digits(K + 1);
    for (std::size_t s = 0; s < space.count(); ++s) {
        space.decode_digits(s, digits);
        const int dc = digits.back();
        int floor_others = p.delta_max;
        bool causal = true;
        for (int k = 0; k < K; ++k) causal &= digits[k] >= dc;
        if (!causal) continue;

        std::size_t stride = radix;  // stride of delta[K-1]
        for (int i = K - 1; i >= 0; --i, stride *= radix) {
            if (digits[i] != dc) continue;
            floor_others = p.delta_max;
            for (int k = 0; k < K; ++k)
                if (k != i) floor_others = std::min(floor_others, digits[k]);
            // Raise node i and the aggregator together while the state stays causal.
            for (int c2 = dc + 1; c2 <= floor_others; ++c2) {
                const std::size_t s2 = s + static_cast<std::size_t>(c2 - dc) * (stride + 1);
                ++rep.pairs_checked;
                if (value.values[s] > value.values[s2] + tolerance) {
                    rep.pass = false;
                    rep.violations.emplace_back(s, s2);
                }
            }
        }
    }
    return rep;
}

StructureReport analyze_structure(const TransitionKernel& kernel, const StateSpace& space,
                                  const Policy& policy, const ValueFunction& value) {
    StructureReport rep;
    rep.accessibility = check_weak_accessibility(kernel, space);
    rep.independence = check_delta_independence(policy, space);
    if (rep.independence.pass) rep.thresholds = extract_thresholds(policy, space);
    rep.monotonicity = check_value_monotone_in_delta_c(value, space);
    return rep;
}

}  // namespace vaoi

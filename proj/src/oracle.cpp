#include <deque>
#include <limits>

#include <fmt/core.h>

#include "vaoi/io.hpp"
#include "vaoi/solver.hpp"

namespace vaoi {

namespace {

std::vector<bool> reachable_from(const TransitionKernel& kernel, std::size_t start) {
    std::vector<bool> seen(kernel.num_states(), false);
    std::deque<std::size_t> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
        const auto s = queue.front();
        queue.pop_front();
        for (Action a : {Action::Cached, Action::Fresh})
            for (auto n : kernel.successors(s, a))
                if (!seen[n]) {
                    seen[n] = true;
                    queue.push_back(n);
                }
    }
    return seen;
}

}  // namespace

OracleResult brute_force_optimal(const SystemParams& params, const OracleOptions& options) {
    const StateSpace space(params);
    const auto kernel = build_kernel_serial(params);
    const auto costs = state_costs(space);
    if (options.start >= space.count()) throw std::out_of_range("oracle start state out of range");

    std::vector<bool> eligible(space.count(), true);
    if (options.reachable_only) eligible = reachable_from(kernel, options.start);

    std::vector<std::size_t> free_states;
    for (std::size_t s = 0; s < space.count(); ++s)
        if (space.battery_of(s) >= 1 && eligible[s]) free_states.push_back(s);

    if (free_states.size() >= 63 || (std::size_t{1} << free_states.size()) > options.max_policies)
        throw SizeError(fmt::format("instance too large for brute force: {} free states give 2^{} "
                                    "policies (limit {})",
                                    free_states.size(), free_states.size(), options.max_policies));
    const std::size_t count = std::size_t{1} << free_states.size();

    double best_gain = std::numeric_limits<double>::infinity();
    std::size_t best_mask = 0;

#pragma omp parallel
    {
        Policy policy;
        policy.actions.assign(space.count(), 0);
        double local_gain = std::numeric_limits<double>::infinity();
        std::size_t local_mask = 0;

#pragma omp for schedule(static)
        for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(count); ++m) {
            const auto mask = static_cast<std::size_t>(m);
            for (std::size_t i = 0; i < free_states.size(); ++i)
                policy.actions[free_states[i]] = (mask >> i) & 1u;
            const double g = policy_average_cost(policy, kernel, costs, options.start);
            if (g < local_gain) {
                local_gain = g;
                local_mask = mask;
            }
        }

#pragma omp critical
        {
            if (local_gain < best_gain || (local_gain == best_gain && local_mask < best_mask)) {
                best_gain = local_gain;
                best_mask = local_mask;
            }
        }
    }

    OracleResult result;
    result.gain = best_gain;
    result.policies_evaluated = count;
    result.policy.actions.assign(space.count(), 0);
    result.policy.fingerprint = params_fingerprint(params);
    for (std::size_t i = 0; i < free_states.size(); ++i)
        result.policy.actions[free_states[i]] = (best_mask >> i) & 1u;
    return result;
}

}  // namespace vaoi

#include "vaoi/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

namespace vaoi {

namespace {

struct SweepStats {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    bool finite = true;
};

inline double bellman(const TransitionKernel& kernel, std::span<const double> costs,
                      std::span<const double> value, std::size_t s, double self_loop) {
    const double e0 = kernel.expectation(s, Action::Cached, value);
    const double e1 = kernel.expectation(s, Action::Fresh, value);
    double best = std::min(e0, e1);
    if (self_loop > 0.0) best = self_loop * value[s] + (1.0 - self_loop) * best;
    return costs[s] + best;
}

// One sweep: next[s] = min_a {c(s) + sum P V}. Returns bounds of next - value.
SweepStats sweep_parallel(const TransitionKernel& kernel, std::span<const double> costs,
                          std::span<const double> value, std::span<double> next,
                          double self_loop) {
    const auto n = static_cast<std::ptrdiff_t>(kernel.num_states());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int bad = 0;
#pragma omp parallel for reduction(min : lo) reduction(max : hi) reduction(+ : bad) schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const double v = bellman(kernel, costs, value, static_cast<std::size_t>(s), self_loop);
        next[s] = v;
        if (!std::isfinite(v)) ++bad;
        const double d = v - value[s];
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return {lo, hi, bad == 0};
}

SweepStats sweep_serial(const TransitionKernel& kernel, std::span<const double> costs,
                        std::span<const double> value, std::span<double> next, double self_loop) {
    SweepStats st;
    for (std::size_t s = 0; s < kernel.num_states(); ++s) {
        const double v = bellman(kernel, costs, value, s, self_loop);
        next[s] = v;
        if (!std::isfinite(v)) st.finite = false;
        st.lo = std::min(st.lo, v - value[s]);
        st.hi = std::max(st.hi, v - value[s]);
    }
    return st;
}

template <typename Sweep>
RviResult run_rvi(const TransitionKernel& kernel, std::span<const double> costs,
                  const RviOptions& opt, Sweep sweep) {
    const std::size_t n = kernel.num_states();
    if (costs.size() != n) throw std::invalid_argument("cost vector size does not match kernel");
    if (!(opt.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (opt.ref_state >= n) throw std::invalid_argument("reference state out of range");
    if (!(opt.self_loop > 0.0 && opt.self_loop < 1.0))
        throw std::invalid_argument("self_loop must lie in (0,1)");

    std::vector<double> value(n, 0.0);
    std::vector<double> next(n, 0.0);
    SolveReport rep;
    double self_loop = 0.0;
    double prev_span = std::numeric_limits<double>::infinity();
    std::size_t stalled = 0;

    for (std::size_t t = 1; t <= opt.max_iter; ++t) {
        const SweepStats st = sweep(kernel, costs, value, next, self_loop);
        if (!st.finite) throw NumericalError(fmt::format("non-finite value in sweep {}", t));

        const double ref = next[opt.ref_state];
        for (std::size_t s = 0; s < n; ++s) next[s] -= ref;
        value.swap(next);

        rep.iterations = t;
        rep.final_span = st.hi - st.lo;
        rep.gain = ref;
        rep.gain_lower = st.lo;
        rep.gain_upper = st.hi;
        if (rep.final_span < opt.epsilon) {
            rep.converged = true;
            break;
        }

        stalled = rep.final_span >= prev_span ? stalled + 1 : 0;
        prev_span = rep.final_span;
        if (self_loop == 0.0 && stalled >= opt.stall_sweeps) {
            self_loop = opt.self_loop;
            rep.damping_used = true;
            stalled = 0;
            prev_span = std::numeric_limits<double>::infinity();
        }
    }

    // The transformed chain has the same gain; its relative values are
    // scaled by 1/(1 - self_loop).
    if (rep.damping_used)
        for (double& v : value) v *= 1.0 - self_loop;
    return {ValueFunction{std::move(value)}, rep};
}

}  // namespace

RviResult relative_value_iteration(const TransitionKernel& kernel, std::span<const double> costs,
                                   const RviOptions& options) {
    return run_rvi(kernel, costs, options, sweep_parallel);
}

RviResult relative_value_iteration_serial(const TransitionKernel& kernel,
                                          std::span<const double> costs,
                                          const RviOptions& options) {
    return run_rvi(kernel, costs, options, sweep_serial);
}

std::vector<double> action_gaps(const ValueFunction& value, const TransitionKernel& kernel) {
    if (value.values.size() != kernel.num_states())
        throw std::invalid_argument("value function size does not match kernel");
    std::vector<double> gaps(kernel.num_states());
    const auto n = static_cast<std::ptrdiff_t>(gaps.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        gaps[s] = kernel.expectation(s, Action::Fresh, value.values) -
                  kernel.expectation(s, Action::Cached, value.values);
    }
    return gaps;
}

Policy extract_policy(const ValueFunction& value, const TransitionKernel& kernel,
                      double tie_tolerance) {
    const auto gaps = action_gaps(value, kernel);
    Policy p;
    p.actions.resize(gaps.size());
    for (std::size_t s = 0; s < gaps.size(); ++s) p.actions[s] = gaps[s] < -tie_tolerance ? 1 : 0;
    return p;
}

Policy greedy_policy(const StateSpace& space) {
    return constant_policy(space, Action::Fresh);
}

Policy constant_policy(const StateSpace& space, Action a) {
    Policy p;
    p.actions.resize(space.count());
    if (a == Action::Fresh)
        for (std::size_t s = 0; s < p.actions.size(); ++s) p.actions[s] = space.battery_of(s) >= 1;
    return p;
}

}  // namespace vaoi

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vaoi/kernel.hpp"

namespace vaoi {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ValueFunction {
    std::vector<double> values;
};

/// Deterministic stationary policy, one action per state index.
struct Policy {
    std::vector<std::uint8_t> actions;
    std::string fingerprint;  // params fingerprint, empty for ad-hoc kernels

    Action at(std::size_t s) const { return actions[s] ? Action::Fresh : Action::Cached; }
    std::size_t size() const { return actions.size(); }
};

struct SolveReport {
    double gain = 0.0;           // J*, read off the reference state
    double gain_lower = 0.0;     // min_s (v_t - V_{t-1})(s)
    double gain_upper = 0.0;     // max_s (v_t - V_{t-1})(s)
    std::size_t iterations = 0;
    double final_span = 0.0;
    bool converged = false;
    bool damping_used = false;
};

struct RviOptions {
    double epsilon = 1e-6;
    std::size_t max_iter = 10'000;
    std::size_t ref_state = 0;
    /// Consecutive non-decreasing spans before the aperiodicity transform kicks in.
    std::size_t stall_sweeps = 50;
    /// Self-loop weight of the aperiodicity transform.
    double self_loop = 0.1;
};

struct RviResult {
    ValueFunction value;
    SolveReport report;
};

/// Relative value iteration for the average-cost Bellman equation, starting
/// from V = 0 and normalizing V(ref_state) = 0 after every sweep. Stops when
/// sp(V_t - V_{t-1}) < epsilon. Non-convergence sets report.converged = false;
/// a non-finite value throws NumericalError.
RviResult relative_value_iteration(const TransitionKernel& kernel, std::span<const double> costs,
                                   const RviOptions& options = {});

/// Single-threaded reference of the same iteration.
RviResult relative_value_iteration_serial(const TransitionKernel& kernel,
                                          std::span<const double> costs,
                                          const RviOptions& options = {});

inline constexpr double kDefaultTieTolerance = 1e-9;

/// Greedy argmin over the solved values. Fresh is chosen only if it improves
/// the expected continuation value by more than tie_tolerance.
Policy extract_policy(const ValueFunction& value, const TransitionKernel& kernel,
                      double tie_tolerance = kDefaultTieTolerance);

/// Per-state action-value gap sum P(.|s,1)V - sum P(.|s,0)V.
std::vector<double> action_gaps(const ValueFunction& value, const TransitionKernel& kernel);

/// Request a fresh update whenever the battery is non-empty.
Policy greedy_policy(const StateSpace& space);
/// The same action everywhere (Fresh is still masked off where b = 0).
Policy constant_policy(const StateSpace& space, Action a);

class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact long-run average cost from `start` of the chain induced by a policy.
/// Handles several closed classes by weighting each class gain with its
/// absorption probability.
double policy_average_cost(const Policy& policy, const TransitionKernel& kernel,
                           std::span<const double> costs, std::size_t start);

/// Same for a randomized policy: fresh_probability[s] = pi(a=1 | s).
double randomized_policy_average_cost(std::span<const double> fresh_probability,
                                      const TransitionKernel& kernel,
                                      std::span<const double> costs, std::size_t start);

struct OracleOptions {
    std::size_t start = 0;
    std::size_t max_policies = std::size_t{1} << 20;
    /// Only enumerate free states reachable from `start` under some action;
    /// all other states are fixed to Cached.
    bool reachable_only = false;
};

struct OracleResult {
    double gain = 0.0;
    Policy policy;
    std::size_t policies_evaluated = 0;
};

/// Exhaustive search over deterministic stationary policies (Cached forced
/// where b = 0). Throws SizeError when the policy count exceeds the guard.
OracleResult brute_force_optimal(const SystemParams& params, const OracleOptions& options = {});

}  // namespace vaoi

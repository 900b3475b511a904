#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vaoi/kernel.hpp"
#include "vaoi/solver.hpp"

namespace vaoi {

struct GreedySpec {};
struct NeverSpec {};
struct RandomSpec {
    double probability = 0.5;
};
/// Explicit per-state action table, usually the solved optimal policy.
struct TableSpec {
    Policy policy;
};
/// Fresh iff delta_c >= threshold[b]; nullopt means never at that level.
struct ThresholdSpec {
    std::vector<std::optional<int>> threshold;
};
/// Placeholder resolved by the sweep driver: solve the MDP at each point.
struct OptimalSpec {};

struct PolicySpec {
    std::string name;
    std::variant<GreedySpec, NeverSpec, RandomSpec, TableSpec, ThresholdSpec, OptimalSpec> kind;

    static PolicySpec greedy() { return {"greedy", GreedySpec{}}; }
    static PolicySpec never() { return {"never", NeverSpec{}}; }
    static PolicySpec random(double p = 0.5) { return {"random", RandomSpec{p}}; }
    static PolicySpec table(Policy p, std::string name = "optimal") {
        return {std::move(name), TableSpec{std::move(p)}};
    }
    static PolicySpec thresholds(std::vector<std::optional<int>> t) {
        return {"threshold", ThresholdSpec{std::move(t)}};
    }
    static PolicySpec optimal() { return {"optimal", OptimalSpec{}}; }
};

/// Parses "greedy", "never", "optimal", "random" or "random:<p>".
PolicySpec parse_policy_name(const std::string& name);

class FingerprintMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TraceRow {
    std::size_t t = 0;
    double avg_version_aoi = 0.0;
    int b = 0;
    int delta_c = 0;
    int action = 0;
    int request = 0;
    int energy = 0;
    int change = 0;
    std::uint32_t gossip = 0;

    bool operator==(const TraceRow&) const = default;
};

struct SimOptions {
    std::size_t horizon = 4000;
    std::size_t replications = 400;
    std::uint64_t seed = 1;
    /// Defaults to an empty battery with every age at zero.
    std::optional<State> initial;
    /// Replication whose per-slot trace is recorded.
    std::optional<std::size_t> trace_replication;
};

struct SimResult {
    double mean_avg_version_aoi = 0.0;
    double std_error = 0.0;
    std::vector<double> per_replication;
    std::vector<double> per_node_mean;
    std::vector<TraceRow> sample_path;
    std::size_t horizon = 0;
    std::size_t replications = 0;

    bool operator==(const SimResult&) const = default;
};

/// Two independent engines per replication, keyed by (seed, replication):
/// one for the exogenous processes and one for randomized policy coins, so
/// that different policies see identical arrivals, requests and gossip.
struct ReplicationStreams {
    std::mt19937_64 exogenous;
    std::mt19937_64 policy;

    ReplicationStreams(std::uint64_t seed, std::uint64_t replication);
};

/// Draws (energy, change, request, gossip) in that order.
EnvOutcome draw_outcome(const SystemParams& p, std::mt19937_64& rng);

/// Monte Carlo estimate of the time-averaged mean node age. Replications run
/// in parallel; the result is independent of the thread count.
SimResult simulate(const SystemParams& params, const PolicySpec& policy, const SimOptions& options);

/// Single-threaded reference of the same simulation.
SimResult simulate_serial(const SystemParams& params, const PolicySpec& policy,
                          const SimOptions& options);

/// Per-state probability of Fresh implied by a spec (0 where b = 0).
std::vector<double> fresh_probabilities(const StateSpace& space, const PolicySpec& policy);

enum class SweepAxis { QAll, Battery, Beta, ChangeProb, LambdaAll };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);
/// Base parameters with one axis overridden; q_all / lambda_all set every node.
SystemParams apply_axis(SystemParams base, SweepAxis axis, double value);

struct SweepProtocol {
    std::size_t horizon = 4000;
    std::size_t replications = 400;
    std::uint64_t seed = 1;
};

struct SweepSettings {
    RviOptions solver;
    bool exact_costs = true;
};

struct SweepPoint {
    double axis_value = 0.0;
    SolveReport solve;
    bool solved = false;
    std::string error;
};

struct SweepRow {
    double axis_value = 0.0;
    std::string policy;
    SimResult result;
    std::optional<double> exact_cost;
    bool failed = false;
};

struct SweepTable {
    SweepAxis axis = SweepAxis::Beta;
    std::vector<SweepPoint> points;
    std::vector<SweepRow> rows;

    const SweepRow* find(double axis_value, const std::string& policy) const;
};

/// Re-solves the MDP at every point (for OptimalSpec entries) and simulates
/// every policy with the shared protocol seed.
SweepTable sweep(const SystemParams& base, SweepAxis axis, const std::vector<double>& values,
                 const std::vector<PolicySpec>& policies, const SweepProtocol& protocol,
                 const SweepSettings& settings = {});

}  // namespace vaoi

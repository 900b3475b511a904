#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vaoi/kernel.hpp"
#include "vaoi/solver.hpp"

namespace vaoi {

/// Communicating structure of the graph with an edge s -> s' whenever some
/// action moves s to s' with positive probability.
struct AccessibilityReport {
    std::size_t closed_class_count = 0;
    std::size_t transient_count = 0;
    std::vector<std::size_t> closed_class_sizes;
    std::vector<bool> in_closed_class;  // per state

    /// States with some node fresher than the aggregator, or every node
    /// strictly staler than it, are all transient.
    bool predicted_transient_ok = true;
    std::vector<std::size_t> predicted_transient_violations;

    /// When p_t = 1: states where more than 2n-1 nodes share age n (0 < n < delta_max)
    /// are transient. Not evaluated (and left true) for p_t < 1.
    bool change_every_slot_ok = true;
    std::vector<std::size_t> change_every_slot_violations;

    bool weakly_accessible() const { return closed_class_count == 1; }
};

AccessibilityReport check_weak_accessibility(const TransitionKernel& kernel,
                                             const StateSpace& space);

using StatePair = std::pair<std::size_t, std::size_t>;

struct IndependenceReport {
    bool pass = true;
    /// (group representative, offending state) within one causal (b, delta_c) class.
    std::vector<StatePair> violations;
};

/// Action must be constant on every causal (b, delta_c) class.
IndependenceReport check_delta_independence(const Policy& policy, const StateSpace& space);

class IndependenceViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ThresholdTable {
    /// Least delta_c with action Fresh for each battery level, nullopt if none.
    std::vector<std::optional<int>> threshold;
    /// (b, delta_c) points where the reduced policy falls back from 1 to 0,
    /// or any Fresh action at b = 0.
    std::vector<std::pair<int, int>> violations;
    /// Informational only: threshold non-increasing in b (none counts as +inf).
    bool non_increasing_in_battery = true;

    bool pass() const { return violations.empty(); }
};

/// Throws IndependenceViolation if the policy is not a function of (b, delta_c)
/// on causal states.
ThresholdTable extract_thresholds(const Policy& policy, const StateSpace& space);

inline constexpr double kMonotoneTolerance = 1e-9;

struct MonotonicityReport {
    bool pass = true;
    std::size_t pairs_checked = 0;
    /// (lower-age state, higher-age state) with V(first) > V(second) + tolerance.
    std::vector<StatePair> violations;
};

/// Over causal pairs that differ only in delta_c and one node i that sits at
/// delta_c, checks V is non-decreasing in delta_c.
MonotonicityReport check_value_monotone_in_delta_c(const ValueFunction& value,
                                                   const StateSpace& space,
                                                   double tolerance = kMonotoneTolerance);

struct StructureReport {
    AccessibilityReport accessibility;
    IndependenceReport independence;
    std::optional<ThresholdTable> thresholds;  // absent when independence fails
    MonotonicityReport monotonicity;

    bool pass() const {
        return accessibility.weakly_accessible() && accessibility.predicted_transient_ok &&
               accessibility.change_every_slot_ok && independence.pass && thresholds &&
               thresholds->pass() && monotonicity.pass;
    }
};

StructureReport analyze_structure(const TransitionKernel& kernel, const StateSpace& space,
                                  const Policy& policy, const ValueFunction& value);

}  // namespace vaoi

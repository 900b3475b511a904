#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vaoi {

/// Largest node count accepted. Gossip vectors are packed into a 32-bit mask.
inline constexpr int kMaxNodes = 30;

/// Constants of the sensor / aggregator / gossip-ring system.
///
/// Nodes are numbered 0..K-1 here; node k is updated by node k-1 with
/// probability lambda[k], and node 0's predecessor is node K-1.
struct SystemParams {
    int K = 1;
    int B = 1;
    int delta_max = 1;
    double beta = 0.5;   // energy arrival probability per slot
    double p_t = 0.5;    // source state change probability per slot
    std::vector<double> q;       // per-node request service probability
    std::vector<double> lambda;  // per-node gossip probability

    /// Probability that no request is served in a slot.
    double q_none() const;

    bool operator==(const SystemParams&) const = default;
};

class ParamError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws ParamError naming the first violated constraint.
void validate_params(const SystemParams& p);

/// Battery level, node Version AoIs and aggregator Version AoI.
struct State {
    int b = 0;
    std::vector<int> delta;
    int delta_c = 0;

    /// Every node is at least as stale as the aggregator.
    bool is_causal() const;

    bool operator==(const State&) const = default;
};

enum class Action : std::uint8_t { Cached = 0, Fresh = 1 };

/// One joint realization of the four exogenous processes in a slot.
struct EnvOutcome {
    int request = 0;             // 0 = none, i = node i-1 is served
    std::uint32_t gossip = 0;    // bit k set: node k adopts its predecessor's age
    bool energy = false;
    bool change = false;

    bool gossips(int k) const { return (gossip >> k) & 1u; }
};

struct WeightedOutcome {
    EnvOutcome outcome;
    double probability;
};

/// Every outcome with positive probability, in the fixed enumeration order
/// request (outer), gossip mask, energy, change (inner).
std::vector<WeightedOutcome> outcome_distribution(const SystemParams& p);

/// Instantaneous cost: mean node Version AoI.
double cost(const State& s, int K);

}  // namespace vaoi

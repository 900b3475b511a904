#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "vaoi/model.hpp"

namespace vaoi {

inline constexpr std::size_t kDefaultMaxStates = 5'000'000;

class SizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mixed-radix enumeration of (b, delta[0..K-1], delta_c).
/// b is the most significant digit, delta_c the least significant.
class StateSpace {
public:
    explicit StateSpace(SystemParams params);

    const SystemParams& params() const { return params_; }
    int K() const { return params_.K; }
    /// Total state count; saturates at SIZE_MAX for absurd parameters.
    std::size_t count() const { return count_; }

    std::size_t encode(const State& s) const;
    State decode(std::size_t index) const;

    /// Allocation-free variants. `digits` holds delta[0..K-1] followed by delta_c.
    std::size_t encode_digits(int b, std::span<const int> digits) const;
    int decode_digits(std::size_t index, std::span<int> digits) const;

    int battery_of(std::size_t index) const { return static_cast<int>(index / battery_stride_); }
    int delta_c_of(std::size_t index) const {
        return static_cast<int>(index % static_cast<std::size_t>(params_.delta_max + 1));
    }

private:
    SystemParams params_;
    std::size_t count_ = 0;
    std::size_t battery_stride_ = 1;
};

/// Predecessor of node k on the gossip ring.
inline int ring_predecessor(int k, int K) { return k == 0 ? K - 1 : k - 1; }

/// Core transition. `ages` / `ages_out` hold delta[0..K-1] followed by delta_c;
/// they must not alias. Returns the next battery level.
int step(const SystemParams& p, int b, std::span<const int> ages, Action a,
         const EnvOutcome& o, std::span<int> ages_out);

/// Deterministic successor of s under action a and outcome o.
State next_state(const State& s, Action a, const EnvOutcome& o, const SystemParams& p);

/// Sparse P[s'|s,a] in compressed-row form. Row r = 2*s + a lists successors
/// in increasing index order with strictly positive merged probabilities.
class TransitionKernel {
public:
    struct Entry {
        std::uint32_t next;
        double probability;
    };

    TransitionKernel() = default;
    TransitionKernel(std::size_t num_states, std::vector<std::uint64_t> row_start,
                     std::vector<std::uint32_t> next, std::vector<double> probability);

    /// Rows indexed 2*s + a; each row may hold duplicates, which are merged.
    static TransitionKernel from_rows(const std::vector<std::vector<Entry>>& rows);

    std::size_t num_states() const { return num_states_; }
    std::size_t nonzeros() const { return next_.size(); }

    std::span<const std::uint32_t> successors(std::size_t s, Action a) const {
        const auto r = row_index(s, a);
        return {next_.data() + row_start_[r], next_.data() + row_start_[r + 1]};
    }
    std::span<const double> probabilities(std::size_t s, Action a) const {
        const auto r = row_index(s, a);
        return {prob_.data() + row_start_[r], prob_.data() + row_start_[r + 1]};
    }

    /// sum_{s'} P(s'|s,a) * values[s']
    double expectation(std::size_t s, Action a, std::span<const double> values) const {
        const auto r = row_index(s, a);
        double acc = 0.0;
        for (auto i = row_start_[r]; i < row_start_[r + 1]; ++i) acc += prob_[i] * values[next_[i]];
        return acc;
    }

    bool operator==(const TransitionKernel&) const = default;

private:
    static std::size_t row_index(std::size_t s, Action a) {
        return 2 * s + static_cast<std::size_t>(a);
    }

    std::size_t num_states_ = 0;
    std::vector<std::uint64_t> row_start_{0};
    std::vector<std::uint32_t> next_;
    std::vector<double> prob_;
};

/// Assembles P[s'|s,a] over the full product state space. Rows are built in
/// parallel over fixed blocks of states; the result does not depend on the
/// thread count. Throws SizeError if the space exceeds `max_states`.
TransitionKernel build_kernel(const SystemParams& p, std::size_t max_states = kDefaultMaxStates);

/// Single-threaded reference assembly with map-based merging.
TransitionKernel build_kernel_serial(const SystemParams& p,
                                     std::size_t max_states = kDefaultMaxStates);

/// Per-state cost vector (mean node age) over the whole space.
std::vector<double> state_costs(const StateSpace& space);

/// Debug dump: gzipped CSV `state_index,action,next_state_index,probability`.
void export_kernel_csv_gz(const TransitionKernel& kernel, const std::filesystem::path& path);

}  // namespace vaoi

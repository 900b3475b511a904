#include "vaoi/kernel.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include <fmt/core.h>

namespace vaoi {

StateSpace::StateSpace(SystemParams params) : params_(std::move(params)) {
    validate_params(params_);
    constexpr auto kMax = std::numeric_limits<std::size_t>::max();
    const auto radix = static_cast<std::size_t>(params_.delta_max + 1);
    std::size_t stride = 1;
    bool overflow = false;
    for (int i = 0; i <= params_.K; ++i) {
        if (stride > kMax / radix) {
            overflow = true;
            break;
        }
        stride *= radix;
    }
    const auto levels = static_cast<std::size_t>(params_.B + 1);
    if (overflow || stride > kMax / levels) {
        battery_stride_ = kMax;
        count_ = kMax;
    } else {
        battery_stride_ = stride;
        count_ = stride * levels;
    }
}

std::size_t StateSpace::encode_digits(int b, std::span<const int> digits) const {
    const auto radix = static_cast<std::size_t>(params_.delta_max + 1);
    std::size_t index = static_cast<std::size_t>(b);
    for (int d : digits) index = index * radix + static_cast<std::size_t>(d);
    return index;
}

int StateSpace::decode_digits(std::size_t index, std::span<int> digits) const {
    const auto radix = static_cast<std::size_t>(params_.delta_max + 1);
    for (std::size_t i = digits.size(); i-- > 0;) {
        digits[i] = static_cast<int>(index % radix);
        index /= radix;
    }
    return static_cast<int>(index);
}

std::size_t StateSpace::encode(const State& s) const {
    if (s.b < 0 || s.b > params_.B) throw std::out_of_range("battery level out of range");
    if (static_cast<int>(s.delta.size()) != params_.K)
        throw std::out_of_range("state has wrong node count");
    auto in_range = [&](int d) { return d >= 0 && d <= params_.delta_max; };
    if (!std::all_of(s.delta.begin(), s.delta.end(), in_range) || !in_range(s.delta_c))
        throw std::out_of_range("age out of range");

    std::vector<int> digits(s.delta);
    digits.push_back(s.delta_c);
    return encode_digits(s.b, digits);
}

State StateSpace::decode(std::size_t index) const {
    if (index >= count_) throw std::out_of_range(fmt::format("state index {} out of range", index));
    std::vector<int> digits(params_.K + 1);
    State s;
    s.b = decode_digits(index, digits);
    s.delta_c = digits.back();
    digits.pop_back();
    s.delta = std::move(digits);
    return s;
}

int step(const SystemParams& p, int b, std::span<const int> ages, Action a,
         const EnvOutcome& o, std::span<int> ages_out) {
    const int K = p.K;
    const int cap = p.delta_max;
    const int z = o.change ? 1 : 0;
    const int dc = ages[K];

    // Gossip uses the ages at the start of the slot for every node.
    for (int k = 0; k < K; ++k) {
        int age = ages[k];
        if (o.gossips(k)) age = std::min(age, ages[ring_predecessor(k, K)]);
        ages_out[k] = std::min(age + z, cap);
    }

    int next_b = b + (o.energy ? 1 : 0);
    if (o.request == 0) {
        ages_out[K] = std::min(dc + z, cap);
    } else {
        const int served = o.request - 1;
        if (a == Action::Fresh && b >= 1) {
            next_b -= 1;
            ages_out[K] = z;
        } else {
            ages_out[K] = std::min(dc + z, cap);
        }
        ages_out[served] = ages_out[K];
    }
    return std::min(next_b, p.B);
}

State next_state(const State& s, Action a, const EnvOutcome& o, const SystemParams& p) {
    std::vector<int> in(s.delta);
    in.push_back(s.delta_c);
    std::vector<int> out(in.size());
    State n;
    n.b = step(p, s.b, in, a, o, out);
    n.delta_c = out.back();
    out.pop_back();
    n.delta = std::move(out);
    return n;
}

TransitionKernel::TransitionKernel(std::size_t num_states, std::vector<std::uint64_t> row_start,
                                   std::vector<std::uint32_t> next, std::vector<double> probability)
    : num_states_(num_states),
      row_start_(std::move(row_start)),
      next_(std::move(next)),
      prob_(std::move(probability)) {
    if (row_start_.size() != 2 * num_states_ + 1 || next_.size() != prob_.size() ||
        row_start_.back() != next_.size())
        throw std::invalid_argument("inconsistent kernel arrays");
}

TransitionKernel TransitionKernel::from_rows(const std::vector<std::vector<Entry>>& rows) {
    if (rows.size() % 2 != 0) throw std::invalid_argument("rows must come in (a=0, a=1) pairs");
    std::vector<std::uint64_t> start{0};
    std::vector<std::uint32_t> next;
    std::vector<double> prob;
    for (const auto& row : rows) {
        std::map<std::uint32_t, double> merged;
        for (const auto& e : row) {
            if (e.next >= rows.size() / 2) throw std::out_of_range("successor index out of range");
            merged[e.next] += e.probability;
        }
        for (auto [n, pr] : merged) {
            if (pr <= 0.0) continue;
            next.push_back(n);
            prob.push_back(pr);
        }
        start.push_back(next.size());
    }
    return TransitionKernel(rows.size() / 2, std::move(start), std::move(next), std::move(prob));
}

namespace {

constexpr std::size_t kBlockStates = 2048;

void check_size(const StateSpace& space, std::size_t max_states) {
    if (space.count() > max_states)
        throw SizeError(fmt::format("state space has {} states, exceeding the limit of {}",
                                    space.count(), max_states));
    if (space.count() > std::numeric_limits<std::uint32_t>::max())
        throw SizeError(fmt::format("state space has {} states, too many for 32-bit indices",
                                    space.count()));
}

struct Block {
    std::vector<std::uint64_t> row_len;
    std::vector<std::uint32_t> next;
    std::vector<double> prob;
};

// Successors of one (s, a) row, merged by sorting. The stable sort keeps
// outcome order among equal successors so summation order is fixed.
class RowBuilder {
public:
    RowBuilder(const StateSpace& space, const std::vector<WeightedOutcome>& outcomes)
        : space_(space), outcomes_(outcomes), ages_(space.K() + 1), out_(space.K() + 1) {
        scratch_.reserve(outcomes.size());
    }

    void build_state(std::size_t s, Block& block) {
        const int b = space_.decode_digits(s, ages_);
        const auto first = block.next.size();
        append_row(b, Action::Cached, block);
        if (b == 0) {
            // An empty battery makes both actions identical.
            const auto len = block.next.size() - first;
            for (std::size_t i = 0; i < len; ++i) {
                block.next.push_back(block.next[first + i]);
                block.prob.push_back(block.prob[first + i]);
            }
            block.row_len.push_back(len);
        } else {
            append_row(b, Action::Fresh, block);
        }
    }

private:
    void append_row(int b, Action a, Block& block) {
        scratch_.clear();
        for (const auto& w : outcomes_) {
            const int nb = step(space_.params(), b, ages_, a, w.outcome, out_);
            scratch_.push_back({static_cast<std::uint32_t>(space_.encode_digits(nb, out_)),
                                w.probability});
        }
        std::stable_sort(scratch_.begin(), scratch_.end(),
                         [](const auto& x, const auto& y) { return x.next < y.next; });
        std::size_t len = 0;
        for (std::size_t i = 0; i < scratch_.size();) {
            const auto n = scratch_[i].next;
            double acc = 0.0;
            for (; i < scratch_.size() && scratch_[i].next == n; ++i) acc += scratch_[i].probability;
            block.next.push_back(n);
            block.prob.push_back(acc);
            ++len;
        }
        block.row_len.push_back(len);
    }

    const StateSpace& space_;
    const std::vector<WeightedOutcome>& outcomes_;
    std::vector<int> ages_;
    std::vector<int> out_;
    std::vector<TransitionKernel::Entry> scratch_;
};

}  // namespace

TransitionKernel build_kernel(const SystemParams& p, std::size_t max_states) {
    const StateSpace space(p);
    check_size(space, max_states);
    const auto outcomes = outcome_distribution(p);
    const std::size_t n = space.count();
    const std::size_t num_blocks = (n + kBlockStates - 1) / kBlockStates;
    std::vector<Block> blocks(num_blocks);

#pragma omp parallel
    {
        RowBuilder builder(space, outcomes);
#pragma omp for schedule(dynamic)
        for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(num_blocks); ++bi) {
            auto& block = blocks[bi];
            const std::size_t lo = static_cast<std::size_t>(bi) * kBlockStates;
            const std::size_t hi = std::min(n, lo + kBlockStates);
            block.row_len.reserve(2 * (hi - lo));
            for (std::size_t s = lo; s < hi; ++s) builder.build_state(s, block);
        }
    }

    std::size_t total = 0;
    for (const auto& b : blocks) total += b.next.size();
    std::vector<std::uint64_t> start;
    start.reserve(2 * n + 1);
    start.push_back(0);
    std::vector<std::uint32_t> next;
    std::vector<double> prob;
    next.reserve(total);
    prob.reserve(total);
    for (auto& b : blocks) {
        for (auto len : b.row_len) start.push_back(start.back() + len);
        next.insert(next.end(), b.next.begin(), b.next.end());
        prob.insert(prob.end(), b.prob.begin(), b.prob.end());
        b = Block{};
    }
    return TransitionKernel(n, std::move(start), std::move(next), std::move(prob));
}

TransitionKernel build_kernel_serial(const SystemParams& p, std::size_t max_states) {
    const StateSpace space(p);
    check_size(space, max_states);
    const auto outcomes = outcome_distribution(p);

    std::vector<std::uint64_t> start{0};
    std::vector<std::uint32_t> next;
    std::vector<double> prob;
    for (std::size_t s = 0; s < space.count(); ++s) {
        const State state = space.decode(s);
        for (Action a : {Action::Cached, Action::Fresh}) {
            std::map<std::uint32_t, double> row;
            for (const auto& w : outcomes) {
                const auto succ = space.encode(next_state(state, a, w.outcome, p));
                row[static_cast<std::uint32_t>(succ)] += w.probability;
            }
            for (auto [n, pr] : row) {
                next.push_back(n);
                prob.push_back(pr);
            }
            start.push_back(next.size());
        }
    }
    return TransitionKernel(space.count(), std::move(start), std::move(next), std::move(prob));
}

std::vector<double> state_costs(const StateSpace& space) {
    std::vector<double> costs(space.count());
    const int K = space.K();
#pragma omp parallel
    {
        std::vector<int> digits(K + 1);
#pragma omp for
        for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(costs.size()); ++s) {
            space.decode_digits(static_cast<std::size_t>(s), digits);
            double sum = 0.0;
            for (int k = 0; k < K; ++k) sum += digits[k];
            costs[s] = sum / K;
        }
    }
    return costs;
}

}  // namespace vaoi

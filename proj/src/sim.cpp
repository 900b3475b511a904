#include "vaoi/sim.hpp"

#include <cmath>

#include <fmt/core.h>

#include "vaoi/io.hpp"

namespace vaoi {

namespace {

double uniform(std::mt19937_64& rng) { return std::generate_canonical<double, 53>(rng); }

// Resolved decision rule with the battery gate applied.
class Decider {
public:
    Decider(const StateSpace& space, const PolicySpec& spec) : space_(space), spec_(spec) {
        if (const auto* t = std::get_if<TableSpec>(&spec.kind)) {
            if (t->policy.size() != space.count())
                throw std::invalid_argument(fmt::format("policy table has {} entries, expected {}",
                                                        t->policy.size(), space.count()));
            const auto expected = params_fingerprint(space.params());
            if (!t->policy.fingerprint.empty() && t->policy.fingerprint != expected)
                throw FingerprintMismatch(fmt::format(
                    "policy fingerprint {} does not match params {}", t->policy.fingerprint, expected));
        } else if (const auto* th = std::get_if<ThresholdSpec>(&spec.kind)) {
            if (static_cast<int>(th->threshold.size()) != space.params().B + 1)
                throw std::invalid_argument("threshold table must cover every battery level");
        } else if (const auto* r = std::get_if<RandomSpec>(&spec.kind)) {
            if (!(r->probability >= 0.0 && r->probability <= 1.0))
                throw std::invalid_argument("random policy probability out of [0,1]");
        } else if (std::holds_alternative<OptimalSpec>(spec.kind)) {
            throw std::invalid_argument("optimal policy must be solved before simulation");
        }
    }

    // The policy coin is drawn every slot so the stream position is fixed.
    Action choose(std::size_t index, int b, int delta_c, std::mt19937_64& coin) const {
        const double u = uniform(coin);
        if (b == 0) return Action::Cached;
        return std::visit(
            [&](const auto& k) -> Action {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, GreedySpec>) {
                    return Action::Fresh;
                } else if constexpr (std::is_same_v<K, NeverSpec>) {
                    return Action::Cached;
                } else if constexpr (std::is_same_v<K, RandomSpec>) {
                    return u < k.probability ? Action::Fresh : Action::Cached;
                } else if constexpr (std::is_same_v<K, TableSpec>) {
                    return k.policy.at(index);
                } else if constexpr (std::is_same_v<K, ThresholdSpec>) {
                    const auto& t = k.threshold[b];
                    return t && delta_c >= *t ? Action::Fresh : Action::Cached;
                } else {
                    return Action::Cached;
                }
            },
            spec_.kind);
    }

private:
    const StateSpace& space_;
    const PolicySpec& spec_;
};

struct Replication {
    double mean = 0.0;
    std::vector<double> node_mean;
    std::vector<TraceRow> trace;
};

Replication run_replication(const StateSpace& space, const Decider& decide, const State& initial,
                            const SimOptions& opt, std::size_t rep) {
    const auto& p = space.params();
    const int K = p.K;
    ReplicationStreams streams(opt.seed, rep);
    const bool tracing = opt.trace_replication && *opt.trace_replication == rep;

    std::vector<int> ages(initial.delta);
    ages.push_back(initial.delta_c);
    std::vector<int> next(ages.size());
    int b = initial.b;

    Replication out;
    out.node_mean.assign(K, 0.0);
    if (tracing) out.trace.reserve(opt.horizon);
    double total = 0.0;
    std::vector<double> node_total(K, 0.0);

    for (std::size_t t = 0; t < opt.horizon; ++t) {
        double sum = 0.0;
        for (int k = 0; k < K; ++k) {
            sum += ages[k];
            node_total[k] += ages[k];
        }
        const double avg = sum / K;
        total += avg;

        const std::size_t index = space.encode_digits(b, ages);
        const Action a = decide.choose(index, b, ages[K], streams.policy);
        const EnvOutcome o = draw_outcome(p, streams.exogenous);
        if (tracing)
            out.trace.push_back({t, avg, b, ages[K], static_cast<int>(a), o.request, o.energy,
                                 o.change, o.gossip});
        b = step(p, b, ages, a, o, next);
        ages.swap(next);
    }
    out.mean = total / static_cast<double>(opt.horizon);
    for (int k = 0; k < K; ++k) out.node_mean[k] = node_total[k] / static_cast<double>(opt.horizon);
    return out;
}

State initial_state(const SimOptions& opt, const StateSpace& space) {
    State s = opt.initial.value_or(State{0, std::vector<int>(space.K(), 0), 0});
    space.encode(s);  // range check
    return s;
}

SimResult aggregate(std::vector<Replication>& reps, const SimOptions& opt, int K) {
    SimResult r;
    r.horizon = opt.horizon;
    r.replications = opt.replications;
    r.per_node_mean.assign(K, 0.0);
    const auto n = static_cast<double>(reps.size());
    double sum = 0.0;
    for (auto& rep : reps) {
        r.per_replication.push_back(rep.mean);
        sum += rep.mean;
        for (int k = 0; k < K; ++k) r.per_node_mean[k] += rep.node_mean[k];
        if (!rep.trace.empty()) r.sample_path = std::move(rep.trace);
    }
    for (auto& v : r.per_node_mean) v /= n;
    r.mean_avg_version_aoi = sum / n;
    if (reps.size() > 1) {
        double ss = 0.0;
        for (double m : r.per_replication) ss += (m - r.mean_avg_version_aoi) * (m - r.mean_avg_version_aoi);
        r.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return r;
}

void check_options(const SimOptions& opt) {
    if (opt.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (opt.replications < 1) throw std::invalid_argument("replications must be >= 1");
}

}  // namespace

ReplicationStreams::ReplicationStreams(std::uint64_t seed, std::uint64_t replication) {
    const auto lo = static_cast<std::uint32_t>(seed);
    const auto hi = static_cast<std::uint32_t>(seed >> 32);
    const auto rlo = static_cast<std::uint32_t>(replication);
    const auto rhi = static_cast<std::uint32_t>(replication >> 32);
    std::seed_seq exo{lo, hi, rlo, rhi, 0u};
    std::seed_seq pol{lo, hi, rlo, rhi, 1u};
    exogenous.seed(exo);
    policy.seed(pol);
}

EnvOutcome draw_outcome(const SystemParams& p, std::mt19937_64& rng) {
    EnvOutcome o;
    o.energy = uniform(rng) < p.beta;
    o.change = uniform(rng) < p.p_t;

    const double u = uniform(rng);
    double acc = p.q_none();
    o.request = 0;
    if (u >= acc) {
        // Falls through to the last node with positive mass on rounding.
        for (int k = 0; k < p.K; ++k) {
            acc += p.q[k];
            o.request = k + 1;
            if (u < acc) break;
        }
    }
    for (int k = 0; k < p.K; ++k)
        if (uniform(rng) < p.lambda[k]) o.gossip |= 1u << k;
    return o;
}

SimResult simulate(const SystemParams& params, const PolicySpec& policy, const SimOptions& options) {
    check_options(options);
    const StateSpace space(params);
    const Decider decide(space, policy);
    const State init = initial_state(options, space);

    std::vector<Replication> reps(options.replications);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(reps.size()); ++r)
        reps[r] = run_replication(space, decide, init, options, static_cast<std::size_t>(r));
    return aggregate(reps, options, params.K);
}

SimResult simulate_serial(const SystemParams& params, const PolicySpec& policy,
                          const SimOptions& options) {
    check_options(options);
    const StateSpace space(params);
    const Decider decide(space, policy);
    const State init = initial_state(options, space);

    std::vector<Replication> reps;
    for (std::size_t r = 0; r < options.replications; ++r)
        reps.push_back(run_replication(space, decide, init, options, r));
    return aggregate(reps, options, params.K);
}

std::vector<double> fresh_probabilities(const StateSpace& space, const PolicySpec& policy) {
    const Decider decide(space, policy);
    std::vector<double> out(space.count(), 0.0);
    std::vector<int> digits(space.K() + 1);
    std::mt19937_64 unused;
    for (std::size_t s = 0; s < space.count(); ++s) {
        const int b = space.decode_digits(s, digits);
        if (b == 0) continue;
        if (const auto* r = std::get_if<RandomSpec>(&policy.kind))
            out[s] = r->probability;
        else
            out[s] = decide.choose(s, b, digits.back(), unused) == Action::Fresh ? 1.0 : 0.0;
    }
    return out;
}

PolicySpec parse_policy_name(const std::string& name) {
    if (name == "greedy") return PolicySpec::greedy();
    if (name == "never") return PolicySpec::never();
    if (name == "optimal") return PolicySpec::optimal();
    if (name == "random") return PolicySpec::random();
    if (name.rfind("random:", 0) == 0) {
        auto spec = PolicySpec::random(std::stod(name.substr(7)));
        spec.name = name;
        return spec;
    }
    throw std::invalid_argument("unknown policy: " + name);
}

}  // namespace vaoi

#include "vaoi/model.hpp"

#include <cmath>
#include <numeric>

#include <fmt/core.h>

namespace vaoi {

namespace {

// Tolerance for sum(q) <= 1, so that e.g. three copies of 1/3 are accepted.
constexpr double kSumSlack = 1e-12;

void require(bool ok, const std::string& what) {
    if (!ok) throw ParamError(what);
}

}  // namespace

double SystemParams::q_none() const {
    double rest = 1.0 - std::accumulate(q.begin(), q.end(), 0.0);
    return rest < 0.0 ? 0.0 : rest;
}

void validate_params(const SystemParams& p) {
    require(p.K >= 1, "K must be >= 1");
    require(p.K <= kMaxNodes, fmt::format("K must be <= {}", kMaxNodes));
    require(p.B >= 1, "B must be >= 1");
    require(p.delta_max >= 1, "delta_max must be >= 1");
    require(std::isfinite(p.beta) && p.beta > 0.0 && p.beta < 1.0, "beta out of (0,1)");
    require(std::isfinite(p.p_t) && p.p_t > 0.0 && p.p_t <= 1.0, "p_t out of (0,1]");
    require(static_cast<int>(p.q.size()) == p.K, "q must have K entries");
    require(static_cast<int>(p.lambda.size()) == p.K, "lambda must have K entries");
    for (int k = 0; k < p.K; ++k) {
        require(std::isfinite(p.q[k]) && p.q[k] > 0.0 && p.q[k] < 1.0,
                fmt::format("q[{}] out of (0,1)", k));
        require(std::isfinite(p.lambda[k]) && p.lambda[k] >= 0.0 && p.lambda[k] <= 1.0,
                fmt::format("lambda[{}] out of [0,1]", k));
    }
    double total = std::accumulate(p.q.begin(), p.q.end(), 0.0);
    require(total <= 1.0 + kSumSlack, "sum(q) > 1");
}

bool State::is_causal() const {
    for (int d : delta)
        if (d < delta_c) return false;
    return true;
}

std::vector<WeightedOutcome> outcome_distribution(const SystemParams& p) {
    validate_params(p);
    const int K = p.K;

    std::vector<double> p_request(K + 1);
    p_request[0] = p.q_none();
    for (int k = 0; k < K; ++k) p_request[k + 1] = p.q[k];

    const std::uint32_t masks = 1u << K;
    std::vector<double> p_gossip(masks);
    for (std::uint32_t m = 0; m < masks; ++m) {
        double pr = 1.0;
        for (int k = 0; k < K; ++k)
            pr *= ((m >> k) & 1u) ? p.lambda[k] : 1.0 - p.lambda[k];
        p_gossip[m] = pr;
    }

    std::vector<WeightedOutcome> out;
    out.reserve(static_cast<std::size_t>(K + 1) * masks * 4);
    for (int r = 0; r <= K; ++r) {
        if (p_request[r] <= 0.0) continue;
        for (std::uint32_t m = 0; m < masks; ++m) {
            if (p_gossip[m] <= 0.0) continue;
            for (int e = 0; e < 2; ++e) {
                const double pe = e ? p.beta : 1.0 - p.beta;
                for (int z = 0; z < 2; ++z) {
                    const double pz = z ? p.p_t : 1.0 - p.p_t;
                    const double pr = pz * pe * p_gossip[m] * p_request[r];
                    if (pr <= 0.0) continue;
                    out.push_back({EnvOutcome{r, m, e == 1, z == 1}, pr});
                }
            }
        }
    }
    return out;
}

double cost(const State& s, int K) {
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += s.delta[k];
    return sum / K;
}

}  // namespace vaoi

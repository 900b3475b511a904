#include <algorithm>
#include <cmath>
#include <deque>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/graph/compressed_sparse_row_graph.hpp>
#include <boost/graph/strong_components.hpp>
#include <fmt/core.h>

#include "graph.hpp"
#include "vaoi/solver.hpp"

namespace vaoi {

namespace detail {

Components closed_components(const CsrGraph& g) {
    using Graph = boost::compressed_sparse_row_graph<boost::directedS>;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    edges.reserve(g.target.size());
    for (std::size_t v = 0; v < g.num_vertices; ++v)
        for (auto w : g.out_edges(v)) edges.emplace_back(v, w);
    const Graph graph(boost::edges_are_sorted, edges.begin(), edges.end(), g.num_vertices);

    Components c;
    c.component.resize(g.num_vertices);
    c.count = boost::strong_components(
        graph, boost::make_iterator_property_map(c.component.begin(),
                                                 boost::get(boost::vertex_index, graph)));
    c.closed.assign(c.count, true);
    c.size.assign(c.count, 0);
    for (std::size_t v = 0; v < g.num_vertices; ++v) {
        ++c.size[c.component[v]];
        for (auto w : g.out_edges(v))
            if (c.component[w] != c.component[v]) c.closed[c.component[v]] = false;
    }
    return c;
}

}  // namespace detail

namespace {

constexpr std::size_t kDenseLimit = 400;

// Markov chain induced by a (possibly randomized) policy, restricted to the
// states reachable from the start state. Local index 0 is the start state.
struct InducedChain {
    std::vector<std::size_t> global;  // local -> global state index
    std::vector<std::size_t> row_start{0};
    std::vector<std::uint32_t> next;  // local indices
    std::vector<double> prob;
};

InducedChain induce(std::span<const double> fresh_probability, const TransitionKernel& kernel,
                    std::size_t start) {
    const std::size_t n = kernel.num_states();
    if (start >= n) throw std::out_of_range("start state out of range");
    if (fresh_probability.size() != n) throw std::invalid_argument("policy size does not match kernel");

    InducedChain chain;
    std::vector<std::uint32_t> local(n, UINT32_MAX);
    std::deque<std::size_t> queue{start};
    local[start] = 0;
    chain.global.push_back(start);

    std::vector<std::pair<std::uint32_t, double>> row;
    for (std::size_t i = 0; i < chain.global.size(); ++i) {
        const std::size_t s = chain.global[i];
        const double w1 = fresh_probability[s];
        row.clear();
        for (Action a : {Action::Cached, Action::Fresh}) {
            const double w = a == Action::Fresh ? w1 : 1.0 - w1;
            if (w <= 0.0) continue;
            const auto succ = kernel.successors(s, a);
            const auto pr = kernel.probabilities(s, a);
            for (std::size_t j = 0; j < succ.size(); ++j) row.emplace_back(succ[j], w * pr[j]);
        }
        std::stable_sort(row.begin(), row.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t j = 0; j < row.size();) {
            const auto g = row[j].first;
            double acc = 0.0;
            for (; j < row.size() && row[j].first == g; ++j) acc += row[j].second;
            if (local[g] == UINT32_MAX) {
                local[g] = static_cast<std::uint32_t>(chain.global.size());
                chain.global.push_back(g);
            }
            chain.next.push_back(local[g]);
            chain.prob.push_back(acc);
        }
        chain.row_start.push_back(chain.next.size());
    }
    return chain;
}

// Solves A x = rhs, dense for small systems and sparse LU otherwise.
Eigen::VectorXd solve(const std::vector<Eigen::Triplet<double>>& triplets, std::size_t m,
                      const Eigen::VectorXd& rhs) {
    Eigen::VectorXd x;
    if (m <= kDenseLimit) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
        for (const auto& t : triplets) A(t.row(), t.col()) += t.value();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible()) throw SingularSystemError("singular policy-evaluation system");
        x = lu.solve(rhs);
    } else {
        Eigen::SparseMatrix<double> A(m, m);
        A.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw SingularSystemError("singular policy-evaluation system");
        x = lu.solve(rhs);
        if (lu.info() != Eigen::Success) throw SingularSystemError("policy-evaluation solve failed");
    }
    if (!x.allFinite()) throw SingularSystemError("non-finite policy-evaluation solution");
    return x;
}

// Stationary gain of one closed class: pi (I - P) = 0 with sum(pi) = 1.
double class_gain(const InducedChain& chain, const std::vector<std::uint32_t>& members,
                  std::span<const double> costs) {
    const std::size_t m = members.size();
    std::vector<std::int64_t> pos(chain.global.size(), -1);
    for (std::size_t i = 0; i < m; ++i) pos[members[i]] = static_cast<std::int64_t>(i);

    // Row m-1 of the transposed system is replaced by the normalization.
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t i = 0; i < m; ++i) {
        const auto u = members[i];
        if (i != m - 1) t.emplace_back(i, i, 1.0);
        for (auto j = chain.row_start[u]; j < chain.row_start[u + 1]; ++j) {
            const auto col = pos[chain.next[j]];
            if (col != static_cast<std::int64_t>(m) - 1) t.emplace_back(col, i, -chain.prob[j]);
        }
        t.emplace_back(m - 1, i, 1.0);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs[m - 1] = 1.0;
    const Eigen::VectorXd pi = solve(t, m, rhs);

    double gain = 0.0;
    for (std::size_t i = 0; i < m; ++i) gain += pi[i] * costs[chain.global[members[i]]];
    return gain;
}

double evaluate(std::span<const double> fresh_probability, const TransitionKernel& kernel,
                std::span<const double> costs, std::size_t start) {
    if (costs.size() != kernel.num_states()) throw std::invalid_argument("cost vector size mismatch");
    const InducedChain chain = induce(fresh_probability, kernel, start);
    const std::size_t m = chain.global.size();

    detail::CsrGraph g;
    g.num_vertices = m;
    g.row_start = chain.row_start;
    g.target = chain.next;
    const auto comps = detail::closed_components(g);

    std::vector<std::vector<std::uint32_t>> members(comps.count);
    for (std::uint32_t v = 0; v < m; ++v)
        if (comps.closed[comps.component[v]]) members[comps.component[v]].push_back(v);

    std::vector<double> gain(comps.count, 0.0);
    for (int c = 0; c < comps.count; ++c)
        if (comps.closed[c]) gain[c] = class_gain(chain, members[c], costs);

    if (comps.closed[comps.component[0]]) return gain[comps.component[0]];
    // Everything here is reachable from the start, so a single closed class
    // absorbs with probability one.
    if (std::count(comps.closed.begin(), comps.closed.end(), true) == 1)
        for (int c = 0; c < comps.count; ++c)
            if (comps.closed[c]) return gain[c];

    // Start is transient: h = P h on transient states, h = class gain on closed ones.
    std::vector<std::int64_t> pos(m, -1);
    std::vector<std::uint32_t> transient;
    for (std::uint32_t v = 0; v < m; ++v) {
        if (!comps.closed[comps.component[v]]) {
            pos[v] = static_cast<std::int64_t>(transient.size());
            transient.push_back(v);
        }
    }
    const std::size_t nt = transient.size();
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        const auto u = transient[i];
        t.emplace_back(i, i, 1.0);
        for (auto j = chain.row_start[u]; j < chain.row_start[u + 1]; ++j) {
            const auto w = chain.next[j];
            if (pos[w] >= 0)
                t.emplace_back(i, pos[w], -chain.prob[j]);
            else
                rhs[i] += chain.prob[j] * gain[comps.component[w]];
        }
    }
    const Eigen::VectorXd h = solve(t, nt, rhs);
    return h[pos[0]];
}

}  // namespace

double policy_average_cost(const Policy& policy, const TransitionKernel& kernel,
                           std::span<const double> costs, std::size_t start) {
    std::vector<double> fresh(policy.actions.begin(), policy.actions.end());
    return evaluate(fresh, kernel, costs, start);
}

double randomized_policy_average_cost(std::span<const double> fresh_probability,
                                      const TransitionKernel& kernel,
                                      std::span<const double> costs, std::size_t start) {
    for (double p : fresh_probability)
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("action probability out of [0,1]");
    return evaluate(fresh_probability, kernel, costs, start);
}

}  // namespace vaoi

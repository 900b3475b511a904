#include <cmath>

#include <fmt/core.h>

#include "vaoi/io.hpp"
#include "vaoi/sim.hpp"

namespace vaoi {

SweepAxis parse_axis(const std::string& name) {
    if (name == "q_all") return SweepAxis::QAll;
    if (name == "B") return SweepAxis::Battery;
    if (name == "beta") return SweepAxis::Beta;
    if (name == "p_t") return SweepAxis::ChangeProb;
    if (name == "lambda_all") return SweepAxis::LambdaAll;
    throw std::invalid_argument("unknown sweep axis: " + name);
}

std::string axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::QAll: return "q_all";
        case SweepAxis::Battery: return "B";
        case SweepAxis::Beta: return "beta";
        case SweepAxis::ChangeProb: return "p_t";
        case SweepAxis::LambdaAll: return "lambda_all";
    }
    return "?";
}

SystemParams apply_axis(SystemParams base, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::QAll: base.q.assign(base.K, value); break;
        case SweepAxis::Battery:
            if (value != std::floor(value)) throw std::invalid_argument("B must be an integer");
            base.B = static_cast<int>(value);
            break;
        case SweepAxis::Beta: base.beta = value; break;
        case SweepAxis::ChangeProb: base.p_t = value; break;
        case SweepAxis::LambdaAll: base.lambda.assign(base.K, value); break;
    }
    validate_params(base);
    return base;
}

const SweepRow* SweepTable::find(double axis_value, const std::string& policy) const {
    for (const auto& r : rows)
        if (r.axis_value == axis_value && r.policy == policy) return &r;
    return nullptr;
}

SweepTable sweep(const SystemParams& base, SweepAxis axis, const std::vector<double>& values,
                 const std::vector<PolicySpec>& policies, const SweepProtocol& protocol,
                 const SweepSettings& settings) {
    SweepTable table;
    table.axis = axis;

    SimOptions sim;
    sim.horizon = protocol.horizon;
    sim.replications = protocol.replications;
    sim.seed = protocol.seed;

    bool need_solve = false;
    for (const auto& p : policies) need_solve |= std::holds_alternative<OptimalSpec>(p.kind);

    for (double v : values) {
        const SystemParams params = apply_axis(base, axis, v);
        const StateSpace space(params);
        SweepPoint point;
        point.axis_value = v;

        TransitionKernel kernel;
        std::vector<double> costs;
        std::optional<Policy> optimal;
        if (need_solve || settings.exact_costs) {
            kernel = build_kernel(params);
            costs = state_costs(space);
        }
        if (need_solve) {
            try {
                const auto solved = relative_value_iteration(kernel, costs, settings.solver);
                point.solve = solved.report;
                if (solved.report.converged) {
                    optimal = extract_policy(solved.value, kernel);
                    optimal->fingerprint = params_fingerprint(params);
                    point.solved = true;
                } else {
                    point.error = fmt::format("RVI did not converge in {} iterations",
                                              solved.report.iterations);
                }
            } catch (const std::exception& e) {
                point.error = e.what();
            }
        }

        const std::size_t start = space.encode(State{0, std::vector<int>(params.K, 0), 0});
        for (const auto& spec : policies) {
            SweepRow row;
            row.axis_value = v;
            row.policy = spec.name;
            PolicySpec resolved = spec;
            if (std::holds_alternative<OptimalSpec>(spec.kind)) {
                if (!optimal) {
                    row.failed = true;
                    table.rows.push_back(std::move(row));
                    continue;
                }
                resolved = PolicySpec::table(*optimal, spec.name);
            }
            row.result = simulate(params, resolved, sim);
            if (settings.exact_costs) {
                const auto fresh = fresh_probabilities(space, resolved);
                row.exact_cost = randomized_policy_average_cost(fresh, kernel, costs, start);
            }
            table.rows.push_back(std::move(row));
        }
        table.points.push_back(std::move(point));
    }
    return table;
}

}  // namespace vaoi

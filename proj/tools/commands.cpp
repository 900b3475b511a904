#include "commands.hpp"

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <omp.h>

#include "vaoi/analysis.hpp"
#include "vaoi/io.hpp"
#include "vaoi/kernel.hpp"

namespace vaoi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json ExperimentConfig::to_json() const {
    json sweeps_json = json::array();
    for (const auto& s : sweeps)
        sweeps_json.push_back({{"name", s.name},
                               {"axis", axis_name(s.axis)},
                               {"values", s.values},
                               {"policies", s.policies},
                               {"base", s.base_override}});
    return json{{"params", params_to_json(params)},
                {"solver", {{"epsilon", solver.epsilon}, {"max_iter", solver.max_iter}}},
                {"protocol",
                 {{"horizon", protocol.horizon},
                  {"replications", protocol.replications},
                  {"seed", protocol.seed}}},
                {"sweeps", sweeps_json},
                {"samplepath",
                 {{"horizon", samplepath.horizon},
                  {"replication", samplepath.replication},
                  {"policies", samplepath.policies}}},
                {"max_states", max_states}};
}

// The output directory is deliberately left out so relocated runs match.
std::string ExperimentConfig::fingerprint() const { return fingerprint_of(to_json().dump()); }

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    if (!j.contains("params")) throw FormatError("config lacks a params object");
    ExperimentConfig cfg;
    try {
        cfg.params = params_from_json(j.at("params"));
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            cfg.solver.epsilon = s.value("epsilon", cfg.solver.epsilon);
            cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
        }
        if (j.contains("protocol")) {
            const auto& p = j.at("protocol");
            cfg.protocol.horizon = p.value("horizon", cfg.protocol.horizon);
            cfg.protocol.replications = p.value("replications", cfg.protocol.replications);
            cfg.protocol.seed = p.value("seed", cfg.protocol.seed);
        }
        for (const auto& s : j.value("sweeps", json::array())) {
            SweepSpec spec;
            spec.name = s.at("name").get<std::string>();
            spec.axis = parse_axis(s.at("axis").get<std::string>());
            spec.values = s.at("values").get<std::vector<double>>();
            spec.policies = s.value("policies", spec.policies);
            spec.base_override = s.value("base", json::object());
            cfg.sweeps.push_back(std::move(spec));
        }
        if (j.contains("samplepath")) {
            const auto& sp = j.at("samplepath");
            cfg.samplepath.horizon = sp.value("horizon", cfg.samplepath.horizon);
            cfg.samplepath.replication = sp.value("replication", cfg.samplepath.replication);
            cfg.samplepath.policies = sp.value("policies", cfg.samplepath.policies);
        }
        cfg.out = j.value("out", cfg.out.string());
        cfg.max_states = j.value("max_states", cfg.max_states);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return parse_config(j);
}

namespace {

struct Solved {
    TransitionKernel kernel;
    std::vector<double> costs;
    RviResult rvi;
    Policy policy;
};

Solved solve_params(const SystemParams& params, const ExperimentConfig& cfg) {
    Solved s;
    const StateSpace space(params);
    s.kernel = build_kernel(params, cfg.max_states);
    s.costs = state_costs(space);
    s.rvi = relative_value_iteration(s.kernel, s.costs, cfg.solver);
    s.policy = extract_policy(s.rvi.value, s.kernel);
    s.policy.fingerprint = params_fingerprint(params);
    return s;
}

PolicySpec resolve(const std::string& name, const std::optional<Policy>& optimal) {
    auto spec = parse_policy_name(name);
    if (std::holds_alternative<OptimalSpec>(spec.kind)) {
        if (!optimal) throw std::runtime_error("optimal policy unavailable");
        spec = PolicySpec::table(*optimal, name);
    }
    return spec;
}

void prepare_out(const fs::path& out) { fs::create_directories(out); }

}  // namespace

int cmd_solve(const ExperimentConfig& cfg, bool export_kernel) {
    prepare_out(cfg.out);
    const StateSpace space(cfg.params);
    const auto solved = solve_params(cfg.params, cfg);
    const auto fp = params_fingerprint(cfg.params);

    write_text(cfg.out / "policy.csv", policy_csv(solved.policy));
    write_text(cfg.out / "value.csv", value_csv(solved.rvi.value, fp));

    json report{{"params", params_to_json(cfg.params)},
                {"params_fingerprint", fp},
                {"config_fingerprint", cfg.fingerprint()},
                {"state_count", space.count()},
                {"solve", to_json(solved.rvi.report)}};
    const auto independence = check_delta_independence(solved.policy, space);
    if (independence.pass) {
        const auto table = extract_thresholds(solved.policy, space);
        write_text(cfg.out / "thresholds.csv", thresholds_csv(table, fp));
        json thr = json::array();
        for (const auto& t : table.threshold) thr.push_back(t ? json(*t) : json("none"));
        report["thresholds"] = thr;
    } else {
        report["thresholds"] = nullptr;
    }
    write_text(cfg.out / "solve_report.json", dump(report));
    if (export_kernel) export_kernel_csv_gz(solved.kernel, cfg.out / "kernel.csv.gz");

    const auto& r = solved.rvi.report;
    std::cout << fmt::format("states={} iterations={} span={:.3g} gain={:.10f} converged={}\n",
                             space.count(), r.iterations, r.final_span, r.gain, r.converged);
    return r.converged ? kOk : kNotConverged;
}

int cmd_check(const ExperimentConfig& cfg, const fs::path& policy_file, const fs::path& value_file) {
    prepare_out(cfg.out);
    const StateSpace space(cfg.params);
    const auto fp = params_fingerprint(cfg.params);
    const Policy policy = parse_policy_csv(read_text(policy_file));
    std::string value_fp;
    const ValueFunction value = parse_value_csv(read_text(value_file), &value_fp);
    if (policy.fingerprint != fp || value_fp != fp)
        throw FingerprintMismatch(fmt::format("policy/value files do not match params fingerprint {}", fp));
    if (policy.size() != space.count() || value.values.size() != space.count())
        throw FormatError("policy/value files do not cover the state space");

    const auto kernel = build_kernel(cfg.params, cfg.max_states);
    const auto report = analyze_structure(kernel, space, policy, value);
    json j = to_json(report);
    j["params_fingerprint"] = fp;
    write_text(cfg.out / "structure_report.json", dump(j));
    if (report.thresholds) write_text(cfg.out / "thresholds.csv", thresholds_csv(*report.thresholds, fp));

    std::cout << fmt::format(
        "closed_classes={} transient={} independence={} threshold={} monotone={} -> {}\n",
        report.accessibility.closed_class_count, report.accessibility.transient_count,
        report.independence.pass ? "pass" : "FAIL",
        report.thresholds && report.thresholds->pass() ? "pass" : "FAIL",
        report.monotonicity.pass ? "pass" : "FAIL", report.pass() ? "PASS" : "FAIL");
    return report.pass() ? kOk : kCheckFailed;
}

int cmd_sweep(const ExperimentConfig& cfg) {
    prepare_out(cfg.out);
    const auto cfg_fp = cfg.fingerprint();
    json manifest{{"config_fingerprint", cfg_fp},
                  {"protocol",
                   {{"horizon", cfg.protocol.horizon},
                    {"replications", cfg.protocol.replications},
                    {"seed", cfg.protocol.seed}}},
                  {"sweeps", json::array()}};
    SweepSettings settings;
    settings.solver = cfg.solver;
    bool any_failure = false;

    for (const auto& spec : cfg.sweeps) {
        json base_json = params_to_json(cfg.params);
        base_json.merge_patch(spec.base_override);
        const SystemParams base = params_from_json(base_json);
        std::vector<PolicySpec> policies;
        for (const auto& name : spec.policies) policies.push_back(parse_policy_name(name));

        const auto table = sweep(base, spec.axis, spec.values, policies, cfg.protocol, settings);
        const auto csv_name = spec.name + ".csv";
        write_text(cfg.out / csv_name, sweep_csv(table, cfg_fp));

        json points = json::array();
        for (const auto& pt : table.points) {
            json exact = json::object();
            for (const auto& row : table.rows)
                if (row.axis_value == pt.axis_value && row.exact_cost) exact[row.policy] = *row.exact_cost;
            const auto params = apply_axis(base, spec.axis, pt.axis_value);
            points.push_back({{"axis_value", pt.axis_value},
                              {"params_fingerprint", params_fingerprint(params)},
                              {"solved", pt.solved},
                              {"error", pt.error},
                              {"solve", to_json(pt.solve)},
                              {"exact_average_cost", exact}});
            any_failure |= !pt.solved;
        }
        manifest["sweeps"].push_back({{"name", spec.name},
                                      {"axis", axis_name(spec.axis)},
                                      {"base_params", params_to_json(base)},
                                      {"csv", csv_name},
                                      {"seed", cfg.protocol.seed},
                                      {"points", points}});
        std::cout << fmt::format("{}: {} points written to {}\n", spec.name, table.points.size(),
                                 (cfg.out / csv_name).string());
    }
    write_text(cfg.out / "manifest.json", dump(manifest));
    return any_failure ? kNotConverged : kOk;
}

int cmd_samplepath(const ExperimentConfig& cfg) {
    prepare_out(cfg.out);
    std::optional<Policy> optimal;
    for (const auto& name : cfg.samplepath.policies)
        if (name == "optimal" && !optimal) {
            const auto solved = solve_params(cfg.params, cfg);
            if (!solved.rvi.report.converged) return kNotConverged;
            optimal = solved.policy;
        }

    SimOptions opt;
    opt.horizon = cfg.samplepath.horizon;
    opt.seed = cfg.protocol.seed;
    // Streams are keyed by (seed, replication), so every policy sees the same
    // exogenous draws in the traced replication.
    opt.replications = cfg.samplepath.replication + 1;
    opt.trace_replication = cfg.samplepath.replication;
    for (const auto& name : cfg.samplepath.policies) {
        const auto spec = resolve(name, optimal);
        const auto result = simulate_serial(cfg.params, spec, opt);
        write_text(cfg.out / fmt::format("samplepath_{}.csv", name),
                   sample_path_csv(result.sample_path, cfg.fingerprint()));
    }
    return kOk;
}

int cmd_oracle(const ExperimentConfig& cfg) {
    prepare_out(cfg.out);
    const auto oracle = brute_force_optimal(cfg.params);
    const auto solved = solve_params(cfg.params, cfg);
    const double rvi_policy_cost = policy_average_cost(solved.policy, solved.kernel, solved.costs, 0);
    const auto fp = params_fingerprint(cfg.params);

    json j{{"params", params_to_json(cfg.params)},
           {"params_fingerprint", fp},
           {"policies_evaluated", oracle.policies_evaluated},
           {"oracle_gain", oracle.gain},
           {"rvi_gain", solved.rvi.report.gain},
           {"rvi_policy_exact_cost", rvi_policy_cost},
           {"gain_difference", std::abs(oracle.gain - solved.rvi.report.gain)}};
    write_text(cfg.out / "oracle.json", dump(j));
    write_text(cfg.out / "oracle_policy.csv", policy_csv(oracle.policy));
    std::cout << fmt::format("oracle gain={:.12f} over {} policies, rvi gain={:.12f}\n", oracle.gain,
                             oracle.policies_evaluated, solved.rvi.report.gain);
    return kOk;
}

int run(int argc, char** argv) {
    CLI::App app{"Version-AoI optimal caching policies for a gossiping network"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<int> threads;
    bool export_kernel = false;
    std::string policy_file, value_file;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Experiment config JSON")->required();
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--seed", seed, "Simulation seed");
        sub->add_option("--epsilon", epsilon, "RVI span tolerance");
        sub->add_option("--threads", threads, "OpenMP thread count (default: $VAOI_THREADS)");
    };
    auto* solve = app.add_subcommand("solve", "Solve the MDP by relative value iteration");
    common(solve);
    solve->add_flag("--export-kernel", export_kernel, "Also write kernel.csv.gz");
    auto* check = app.add_subcommand("check", "Check structural properties of a solved policy");
    common(check);
    check->add_option("--policy", policy_file, "Policy CSV (default: <out>/policy.csv)");
    check->add_option("--value", value_file, "Value CSV (default: <out>/value.csv)");
    auto* sweep_cmd = app.add_subcommand("sweep", "Run parameter sweeps");
    common(sweep_cmd);
    auto* path_cmd = app.add_subcommand("samplepath", "Per-slot traces under shared randomness");
    common(path_cmd);
    auto* oracle = app.add_subcommand("oracle", "Brute-force policy enumeration (tiny instances)");
    common(oracle);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (threads) {
            omp_set_num_threads(*threads);
        } else if (const char* env = std::getenv("VAOI_THREADS")) {
            omp_set_num_threads(std::max(1, std::atoi(env)));
        }

        ExperimentConfig cfg = load_config(config_path);
        if (out) cfg.out = *out;
        if (seed) cfg.protocol.seed = *seed;
        if (epsilon) cfg.solver.epsilon = *epsilon;

        if (*solve) return cmd_solve(cfg, export_kernel);
        if (*check)
            return cmd_check(cfg, policy_file.empty() ? cfg.out / "policy.csv" : fs::path(policy_file),
                             value_file.empty() ? cfg.out / "value.csv" : fs::path(value_file));
        if (*sweep_cmd) return cmd_sweep(cfg);
        if (*path_cmd) return cmd_samplepath(cfg);
        if (*oracle) return cmd_oracle(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kUsage;
}

}  // namespace vaoi::cli

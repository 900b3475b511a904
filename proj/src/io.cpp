#include "vaoi/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace vaoi {

using nlohmann::json;

json params_to_json(const SystemParams& p) {
    return json{{"K", p.K},         {"B", p.B},     {"delta_max", p.delta_max},
                {"beta", p.beta},   {"p_t", p.p_t}, {"q", p.q},
                {"lambda", p.lambda}};
}

SystemParams params_from_json(const json& j) {
    static const std::set<std::string> keys{"K", "B", "delta_max", "beta", "p_t", "q", "lambda"};
    if (!j.is_object()) throw FormatError("params must be a JSON object");
    for (const auto& [k, _] : j.items())
        if (!keys.count(k)) throw FormatError("unknown params key: " + k);
    for (const auto& k : keys)
        if (!j.contains(k)) throw FormatError("missing params key: " + k);

    SystemParams p;
    try {
        p.K = j.at("K").get<int>();
        p.B = j.at("B").get<int>();
        p.delta_max = j.at("delta_max").get<int>();
        p.beta = j.at("beta").get<double>();
        p.p_t = j.at("p_t").get<double>();
        p.q = j.at("q").get<std::vector<double>>();
        p.lambda = j.at("lambda").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad params value: ") + e.what());
    }
    validate_params(p);
    return p;
}

std::string fingerprint_of(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return fmt::format("{:016x}", h);
}

std::string params_fingerprint(const SystemParams& p) { return fingerprint_of(params_to_json(p).dump()); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

constexpr std::string_view kFingerprintTag = "# params_fingerprint=";

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
    T v{};
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw FormatError(fmt::format("line {}: bad number '{}'", line, s));
    return v;
}

// Reads "index,value" rows, skipping the header and picking up the fingerprint.
template <typename T>
std::vector<T> parse_indexed_csv(const std::string& text, std::string* fingerprint) {
    std::vector<T> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool tagged = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind(kFingerprintTag, 0) == 0) {
            if (fingerprint) *fingerprint = line.substr(kFingerprintTag.size());
            tagged = true;
            continue;
        }
        if (line[0] == '#' || line.rfind("state_index", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError(fmt::format("line {}: missing ','", lineno));
        const auto idx = parse_number<std::size_t>(std::string_view(line).substr(0, comma), lineno);
        if (idx != out.size())
            throw FormatError(fmt::format("line {}: expected state {}, got {}", lineno, out.size(), idx));
        out.push_back(parse_number<T>(std::string_view(line).substr(comma + 1), lineno));
    }
    if (!tagged) throw FormatError("missing params_fingerprint header");
    return out;
}

}  // namespace

std::string policy_csv(const Policy& policy) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "{}{}\nstate_index,action\n", kFingerprintTag,
                   policy.fingerprint);
    for (std::size_t s = 0; s < policy.size(); ++s)
        fmt::format_to(std::back_inserter(buf), "{},{}\n", s, policy.actions[s]);
    return fmt::to_string(buf);
}

Policy parse_policy_csv(const std::string& text) {
    Policy p;
    const auto actions = parse_indexed_csv<int>(text, &p.fingerprint);
    for (int a : actions) {
        if (a != 0 && a != 1) throw FormatError("action must be 0 or 1");
        p.actions.push_back(static_cast<std::uint8_t>(a));
    }
    return p;
}

std::string value_csv(const ValueFunction& value, const std::string& fingerprint) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "{}{}\nstate_index,value\n", kFingerprintTag, fingerprint);
    for (std::size_t s = 0; s < value.values.size(); ++s)
        fmt::format_to(std::back_inserter(buf), "{},{:.17g}\n", s, value.values[s]);
    return fmt::to_string(buf);
}

ValueFunction parse_value_csv(const std::string& text, std::string* fingerprint) {
    return ValueFunction{parse_indexed_csv<double>(text, fingerprint)};
}

json to_json(const SolveReport& r) {
    return json{{"gain", r.gain},
                {"gain_lower", r.gain_lower},
                {"gain_upper", r.gain_upper},
                {"iterations", r.iterations},
                {"final_span", r.final_span},
                {"converged", r.converged},
                {"damping_used", r.damping_used}};
}

json to_json(const AccessibilityReport& r) {
    return json{{"closed_class_count", r.closed_class_count},
                {"transient_count", r.transient_count},
                {"closed_class_sizes", r.closed_class_sizes},
                {"weakly_accessible", r.weakly_accessible()},
                {"predicted_transient_ok", r.predicted_transient_ok},
                {"predicted_transient_violations", r.predicted_transient_violations},
                {"change_every_slot_ok", r.change_every_slot_ok},
                {"change_every_slot_violations", r.change_every_slot_violations}};
}

json to_json(const StructureReport& r) {
    json j;
    j["pass"] = r.pass();
    j["accessibility"] = to_json(r.accessibility);
    j["delta_independence"] = {{"pass", r.independence.pass},
                               {"violations", r.independence.violations}};
    if (r.thresholds) {
        json thr = json::array();
        for (const auto& t : r.thresholds->threshold) thr.push_back(t ? json(*t) : json("none"));
        j["thresholds"] = thr;
        j["threshold_violations"] = r.thresholds->violations;
        j["thresholds_non_increasing_in_b"] = r.thresholds->non_increasing_in_battery;
    } else {
        j["thresholds"] = nullptr;
        j["threshold_violations"] = json::array();
    }
    j["monotonicity"] = {{"pass", r.monotonicity.pass},
                         {"pairs_checked", r.monotonicity.pairs_checked},
                         {"violations", r.monotonicity.violations}};
    return j;
}

std::string thresholds_csv(const ThresholdTable& t, const std::string& fingerprint) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "{}{}\nb,threshold\n", kFingerprintTag, fingerprint);
    for (std::size_t b = 0; b < t.threshold.size(); ++b) {
        if (t.threshold[b])
            fmt::format_to(std::back_inserter(buf), "{},{}\n", b, *t.threshold[b]);
        else
            fmt::format_to(std::back_inserter(buf), "{},none\n", b);
    }
    return fmt::to_string(buf);
}

std::string sweep_csv(const SweepTable& t, const std::string& fingerprint) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf),
                   "# config_fingerprint={}\naxis_value,policy,mean,std_error,replications,horizon\n",
                   fingerprint);
    for (const auto& r : t.rows) {
        if (r.failed) {
            fmt::format_to(std::back_inserter(buf), "{},{},nan,nan,0,0\n", r.axis_value, r.policy);
            continue;
        }
        fmt::format_to(std::back_inserter(buf), "{},{},{:.17g},{:.17g},{},{}\n", r.axis_value,
                       r.policy, r.result.mean_avg_version_aoi, r.result.std_error,
                       r.result.replications, r.result.horizon);
    }
    return fmt::to_string(buf);
}

std::string sample_path_csv(const std::vector<TraceRow>& trace, const std::string& fingerprint) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf),
                   "# config_fingerprint={}\nt,avg_version_aoi,b,delta_c,action,request,e,z\n",
                   fingerprint);
    for (const auto& r : trace)
        fmt::format_to(std::back_inserter(buf), "{},{:.17g},{},{},{},{},{},{}\n", r.t,
                       r.avg_version_aoi, r.b, r.delta_c, r.action, r.request, r.energy, r.change);
    return fmt::to_string(buf);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace vaoi

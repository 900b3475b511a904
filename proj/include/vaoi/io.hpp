#pragma once

// Persistence: params JSON, policy / value CSV, report JSON, sweep and trace CSV.
// All text output uses '.' decimals, ',' delimiters and LF line endings.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vaoi/analysis.hpp"
#include "vaoi/model.hpp"
#include "vaoi/sim.hpp"
#include "vaoi/solver.hpp"

namespace vaoi {

nlohmann::json params_to_json(const SystemParams& p);
/// Requires exactly the keys K, B, delta_max, beta, p_t, q, lambda.
SystemParams params_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a of the canonical JSON text, as 16 lowercase hex digits.
std::string fingerprint_of(const std::string& text);
std::string params_fingerprint(const SystemParams& p);

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// `# params_fingerprint=<hex>`, a `state_index,action` header, then one row per state.
std::string policy_csv(const Policy& policy);
Policy parse_policy_csv(const std::string& text);

/// Same layout with `state_index,value`, values at 17 significant digits.
std::string value_csv(const ValueFunction& value, const std::string& fingerprint);
ValueFunction parse_value_csv(const std::string& text, std::string* fingerprint = nullptr);

nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const AccessibilityReport& r);
nlohmann::json to_json(const StructureReport& r);

/// `b,threshold` with "none" for levels that never request.
std::string thresholds_csv(const ThresholdTable& t, const std::string& fingerprint);

/// `axis_value,policy,mean,std_error,replications,horizon`
std::string sweep_csv(const SweepTable& t, const std::string& fingerprint);

/// `t,avg_version_aoi,b,delta_c,action,request,e,z`
std::string sample_path_csv(const std::vector<TraceRow>& trace, const std::string& fingerprint);

/// Pretty-printed JSON with a trailing newline.
std::string dump(const nlohmann::json& j);

}  // namespace vaoi

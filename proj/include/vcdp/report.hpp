#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcdp/baselines.hpp"
#include "vcdp/bootstrap.hpp"
#include "vcdp/estimator.hpp"
#include "vcdp/gate.hpp"
#include "vcdp/simulator.hpp"

namespace vcdp {

using Json = nlohmann::ordered_json;

/// Every JSON document written by the library starts with
/// {"schema": <name>, "version": <int>}.
inline constexpr int kReportVersion = 1;

Json header(const std::string& schema_name);

/// Throws Parse when the document does not carry the expected schema and version.
void check_header(const Json& doc, const std::string& schema_name);

Json to_json(const GateResult& result);
Json to_json(const TestResult& result, bool include_boot = false);
Json to_json(const BaselineResult& result);
Json to_json(const ScenarioConfig& config);
Json to_json(const ReplicationReport& report);

Json to_json(const GroupCoefficients& coef);
GroupCoefficients coefficients_from_json(const Json& j);

Json to_json(const BaseModel& base);
BaseModel base_from_json(const Json& j);

void save_base(const BaseModel& base, const std::filesystem::path& path);
BaseModel load_base(const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const Json& doc, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

/// Shortest text that parses back to the same double.
std::string format_number(double v);

/// Long layout: group,t,name,row,col,value with 1-based t, row and col.
std::string coefficients_csv(const CoefficientPaths& paths);

/// One row per (day, interval): outcome residual per group, then the state
/// residual entering that interval (empty at the first interval).
std::string residuals_csv(const ModelFit& fit);

/// One row per (day, interval): observed and fitted outcome per group.
std::string fitted_csv(const Panel& panel, const ModelFit& fit);

/// b,t_b (b is 1-based).
std::string boot_csv(const std::vector<double>& boot_stats);

/// method,eta,rep,p_value,estimate,reject (rep is 1-based).
std::string runs_csv(const ReplicationReport& report);

/// eta,rep,b,t_b for the kept replicates.
std::string boot_dump_csv(const ReplicationReport& report);

/// Rejection rate per method and eta with the true GATE.
std::string power_csv(const ReplicationReport& report);

/// Density histograms of gate_hat - true GATE and of the pooled T^b per eta,
/// on common bins.
std::string histogram_csv(const ReplicationReport& report, int bins = 40);

}  // namespace vcdp

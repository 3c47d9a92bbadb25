#pragma once

#include "pats/model.hpp"
#include "pats/optimizer.hpp"
#include "pats/sensitivity.hpp"
#include "pats/task.hpp"
#include "pats/training.hpp"

#include <json.hpp>

#include <string>

namespace pats {

using Json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;

// Every *_from_json rejects unknown keys with a ConfigError naming the dotted path
// of the offending key. Missing keys keep their defaults.

Json to_json(const ModelSpec& spec);
Json to_json(const TaskSpec& spec);
Json to_json(const PatsConfig& config);
Json to_json(const PretrainConfig& config);
Json to_json(const ReportOptions& options);
Json to_json(const SensitivityReport& report);
/// Full run file: name, model, task, pretrain, run, optimizer, report.
Json to_json(const RunSpec& run);

ModelSpec model_spec_from_json(const Json& j, const std::string& path = "model");
TaskSpec task_spec_from_json(const Json& j, const std::string& path = "task");
PretrainConfig pretrain_from_json(const Json& j, const std::string& path = "pretrain");
ReportOptions report_options_from_json(const Json& j, const std::string& path = "report");
SensitivityReport sensitivity_report_from_json(const Json& j);
RunSpec run_spec_from_json(const Json& j);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

std::string_view to_string(EpsilonPlacement placement);
EpsilonPlacement parse_eps_placement(std::string_view text);

} // namespace pats

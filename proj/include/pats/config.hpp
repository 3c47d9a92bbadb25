#pragma once

#include "pats/serialization.hpp"
#include "pats/training.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pats {

/// Parses a YAML run file. Unknown keys and malformed values raise ConfigError
/// naming the dotted key path.
RunSpec parse_run_file(const std::string& yaml_text);
/// Missing or unreadable files raise ConfigError naming the path.
RunSpec load_run_file(const std::filesystem::path& path);
/// Fully explicit YAML for `run`; parse_run_file(print_run_file(r)) reproduces r.
std::string print_run_file(const RunSpec& run);

Json yaml_to_json(const std::string& yaml_text);
std::string json_to_yaml(const Json& j);

/// Named hyperparameter search ranges.
struct SearchGrid {
    std::string name;
    std::vector<double> values;
};

/// The lambda / gamma / beta / learning-rate ranges searched for the reference results.
const std::vector<SearchGrid>& search_grids();

/// YAML listing of the optimizer presets and search grids.
std::string presets_yaml();

} // namespace pats

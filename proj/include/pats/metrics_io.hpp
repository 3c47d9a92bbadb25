#pragma once

#include "pats/serialization.hpp"
#include "pats/sweep.hpp"
#include "pats/training.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pats {

/// One JSON object per line: {"event":"step",...} for every optimizer step and
/// {"event":"epoch",...} for every dev evaluation, in step order.
std::string metrics_jsonl(const MetricsRecord& record);

/// Run summary with the embedded sensitivity report and the resolved run config.
/// Wall-clock time is included only when `include_timing` is set.
Json summary_json(const MetricsRecord& record, const RunSpec& run, bool include_timing = false);

struct RunFiles {
    std::filesystem::path metrics;
    std::filesystem::path summary;
};

/// Writes {run-id}.metrics.jsonl and {run-id}.summary.json into `dir` atomically.
RunFiles write_run_outputs(const std::filesystem::path& dir, const MetricsRecord& record, const RunSpec& run,
                           bool include_timing = false);

/// Fraction-sweep table with a header row.
std::string sweep_csv(std::span<const FractionRow> rows);

/// The fields of a summary file that analysis needs.
struct RunSummary {
    std::string run_id;
    std::string optimizer;
    std::uint64_t seed = 0;
    double data_fraction = 1.0;
    std::string status;
    double best_dev_accuracy = 0.0;
    double final_dev_accuracy = 0.0;
    SensitivityReport sensitivity;
    Json sensitivity_json;
};

RunSummary read_summary(const std::filesystem::path& path);
/// Every *.summary.json directly inside `dir`, sorted by file name.
std::vector<std::filesystem::path> find_summaries(const std::filesystem::path& dir);

} // namespace pats

#pragma once

#include "pats/training.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pats {

struct MetricSummary {
    double mean = 0.0;
    /// Sample standard deviation (n - 1); zero for a single value.
    double std = 0.0;
};

MetricSummary summarize(std::span<const double> values);

struct SeedSweep {
    std::vector<MetricsRecord> records; ///< in seed order
    MetricSummary best_dev_accuracy;
    MetricSummary final_dev_accuracy;
    MetricSummary std_log10_sensitivity;
    std::size_t diverged = 0;
};

/// Runs `run` once per seed on up to `workers` threads. Runs share nothing but the
/// read-only initial model and data; results are folded in seed order.
SeedSweep seed_sweep(const RunSpec& run, const Model& initial, const TaskData& data,
                     std::span<const std::uint64_t> seeds, std::size_t workers = 1);

struct FractionRow {
    OptimizerKind optimizer = OptimizerKind::standard;
    double fraction = 1.0;
    std::size_t n_train = 0;
    SeedSweep sweep;
};

/// One seed_sweep per fraction. Every fraction must lie in (0, 1] and keep at least
/// one full batch, otherwise SpecError.
std::vector<FractionRow> data_fraction_sweep(const RunSpec& run, const Model& initial, const TaskData& data,
                                             std::span<const double> fractions,
                                             std::span<const std::uint64_t> seeds, std::size_t workers = 1);

} // namespace pats

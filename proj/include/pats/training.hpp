#pragma once

#include "pats/model.hpp"
#include "pats/optimizer.hpp"
#include "pats/sensitivity.hpp"
#include "pats/task.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pats {

enum class OptimizerKind { standard, pats, noisytune, sage_style };

std::string_view to_string(OptimizerKind kind);
/// Accepts "sage" as an alias for sage_style.
OptimizerKind parse_optimizer(std::string_view text);

/// Source-task training that produces the stand-in "pretrained" model.
struct PretrainConfig {
    std::size_t steps = 400;
    double lr = 1e-2;
    std::size_t batch_size = 32;

    friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

struct RunSpec {
    std::string name = "run";
    ModelSpec model;
    TaskSpec task;
    PretrainConfig pretrain;
    OptimizerKind optimizer = OptimizerKind::standard;
    PatsConfig pats;
    double noisytune_intensity = 0.15;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    /// Fraction of the target training split used; applied to train only.
    double data_fraction = 1.0;
    /// Redraw the classifier head before fine-tuning.
    bool reinit_head = true;
    ReportOptions report;

    /// Throws SpecError / ConfigError on invalid fields.
    void validate() const;
    /// "{name}-{optimizer}-s{seed}-f{fraction}".
    std::string run_id() const;
};

/// Rows of an n-row split kept at `fraction` (rounded down, tolerant of binary noise).
std::size_t fraction_count(double fraction, std::size_t n);

/// Target-train rows a run uses: a seed-keyed permutation cut to the fraction, so
/// smaller fractions are prefixes of larger ones under the same seed.
std::vector<std::size_t> training_rows(const RunSpec& run, std::size_t n);

enum class RunStatus { completed, diverged };
std::string_view to_string(RunStatus status);

struct StepEvent {
    std::size_t step = 0;
    double loss = 0.0;
    double lr = 0.0;

    friend bool operator==(const StepEvent&, const StepEvent&) = default;
};

struct EpochEvent {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double dev_loss = 0.0;
    double dev_accuracy = 0.0;

    friend bool operator==(const EpochEvent&, const EpochEvent&) = default;
};

struct MetricsRecord {
    std::string run_id;
    OptimizerKind optimizer = OptimizerKind::standard;
    std::uint64_t seed = 0;
    double data_fraction = 1.0;
    std::size_t n_train = 0;
    std::size_t total_steps = 0;
    RunStatus status = RunStatus::completed;
    std::vector<StepEvent> steps;
    std::vector<EpochEvent> epochs;
    double best_dev_accuracy = 0.0;
    double final_dev_accuracy = 0.0;
    SensitivityReport sensitivity;
    /// Excluded from equality and from serialized output unless timing is requested.
    double wall_clock_seconds = 0.0;

    bool same_results(const MetricsRecord& other) const;
};

/// Trains a fresh model on the source split for `config.steps` Adamax steps and
/// returns it with zeroed optimizer state. steps == 0 returns the fresh init.
Model pretrain_then_snapshot(const ModelSpec& spec, const TaskSpec& task, const PretrainConfig& config);
Model pretrain_then_snapshot(const ModelSpec& spec, const TaskData& data, const PretrainConfig& config);

/// Fine-tunes a copy of `initial` on the target split. Deterministic given the RunSpec.
/// Non-finite loss or weights end the run with status diverged.
MetricsRecord train_run(const RunSpec& run, const Model& initial, const TaskData& data);
MetricsRecord train_run(const RunSpec& run, const Model& initial);

/// Same loop, but hands back the trained model as well.
MetricsRecord train_run(const RunSpec& run, const Model& initial, const TaskData& data, Model& trained);

} // namespace pats

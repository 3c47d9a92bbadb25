#include "pats/training.hpp"

#include "pats/errors.hpp"
#include "pats/rng.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pats {

std::string_view to_string(OptimizerKind kind)
{
    switch (kind) {
    case OptimizerKind::standard:
        return "standard";
    case OptimizerKind::pats:
        return "pats";
    case OptimizerKind::noisytune:
        return "noisytune";
    case OptimizerKind::sage_style:
        return "sage";
    }
    return "unknown";
}

OptimizerKind parse_optimizer(std::string_view text)
{
    if (text == "standard") {
        return OptimizerKind::standard;
    }
    if (text == "pats") {
        return OptimizerKind::pats;
    }
    if (text == "noisytune") {
        return OptimizerKind::noisytune;
    }
    if (text == "sage" || text == "sage_style") {
        return OptimizerKind::sage_style;
    }
    throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected standard, pats, noisytune or sage)");
}

std::string_view to_string(RunStatus status)
{
    return status == RunStatus::completed ? "completed" : "diverged";
}

std::size_t fraction_count(double fraction, std::size_t n)
{
    const double x = fraction * static_cast<double>(n);
    const double nearest = std::round(x);
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::floor(x));
}

void RunSpec::validate() const
{
    model.validate();
    task.validate();
    pats.validate();
    if (batch_size < 1) {
        throw ConfigError("run.batch_size must be >= 1");
    }
    if (!(data_fraction > 0.0 && data_fraction <= 1.0)) {
        throw ConfigError("run.data_fraction must lie in (0, 1], got " + std::to_string(data_fraction));
    }
    if (noisytune_intensity < 0.0) {
        throw ConfigError("optimizer.noisytune_intensity must be >= 0");
    }
    if (fraction_count(data_fraction, task.n_train) < batch_size) {
        throw SpecError("data_fraction " + std::to_string(data_fraction) + " of " + std::to_string(task.n_train) +
                        " training rows is less than one batch of " + std::to_string(batch_size));
    }
    if (model.classes() != task.num_classes) {
        throw SpecError("model has " + std::to_string(model.classes()) + " outputs but the task has " +
                        std::to_string(task.num_classes) + " classes");
    }
    if (model.kind == ModelKind::mlp && model.layer_sizes.front() != task.input_dim) {
        throw SpecError("mlp input width " + std::to_string(model.layer_sizes.front()) + " != task input_dim " +
                        std::to_string(task.input_dim));
    }
    if (model.kind == ModelKind::tiny_transformer) {
        if (task.generator != Generator::token_pattern) {
            throw SpecError("tiny_transformer needs the token_pattern generator");
        }
        if (model.seq_len != task.seq_len || model.vocab != task.vocab) {
            throw SpecError("tiny_transformer vocab/seq_len must match the task");
        }
    }
}

std::string RunSpec::run_id() const
{
    std::ostringstream out;
    out << name << '-' << to_string(optimizer) << "-s" << seed << "-f" << data_fraction;
    return out.str();
}

bool MetricsRecord::same_results(const MetricsRecord& o) const
{
    return run_id == o.run_id && optimizer == o.optimizer && seed == o.seed && data_fraction == o.data_fraction &&
           n_train == o.n_train && total_steps == o.total_steps && status == o.status && steps == o.steps &&
           epochs == o.epochs && best_dev_accuracy == o.best_dev_accuracy &&
           final_dev_accuracy == o.final_dev_accuracy && sensitivity == o.sensitivity;
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, Substream stream)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Draws draws(stream);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[draws.next_below(i)]);
    }
    return order;
}

bool weights_finite(const Model& model)
{
    for (const auto& g : model.groups()) {
        if (!g.weights.all_finite()) {
            return false;
        }
    }
    return true;
}

void reset_optimizer_state(Model& model)
{
    for (auto& g : model.groups()) {
        g.reset_state();
    }
}

// One forward/backward pass; returns the minibatch loss.
double compute_gradients(Model& model, const Batch& batch)
{
    model.zero_grads();
    Tape tape;
    Var loss = softmax_cross_entropy(model.forward(tape, batch), batch.labels);
    const double value = loss.value().item();
    if (!std::isfinite(value)) {
        return value;
    }
    tape.backward(loss);
    return value;
}

} // namespace

Model pretrain_then_snapshot(const ModelSpec& spec, const TaskSpec& task, const PretrainConfig& config)
{
    return pretrain_then_snapshot(spec, generate_task(task), config);
}

Model pretrain_then_snapshot(const ModelSpec& spec, const TaskData& data, const PretrainConfig& config)
{
    if (config.batch_size < 1) {
        throw ConfigError("pretrain.batch_size must be >= 1");
    }
    Model model = build_model(spec);
    if (config.steps == 0) {
        return model;
    }
    PatsConfig adamax;
    adamax.lr = config.lr;
    adamax.total_steps = config.steps;
    adamax.validate();

    const Dataset& train = data.source.train;
    const RngStream rng(spec.init_seed);
    const std::size_t batch = std::min(config.batch_size, train.n);
    std::vector<std::size_t> order;
    std::size_t cursor = train.n;
    std::size_t epoch = 0;
    for (std::size_t t = 1; t <= config.steps; ++t) {
        if (cursor + batch > train.n) {
            order = permutation(train.n, rng.substream("pretrain.shuffle", epoch++, Purpose::shuffle));
            cursor = 0;
        }
        const Batch b = train.batch(std::span(order).subspan(cursor, batch));
        cursor += batch;
        compute_gradients(model, b);
        adamax_step(model.groups(), adamax, t);
    }
    reset_optimizer_state(model);
    return model;
}

MetricsRecord train_run(const RunSpec& run, const Model& initial)
{
    return train_run(run, initial, generate_task(run.task));
}

std::vector<std::size_t> training_rows(const RunSpec& run, std::size_t n)
{
    std::vector<std::size_t> order = permutation(n, RngStream(run.seed).substream("train.subset", 0, Purpose::subset));
    order.resize(fraction_count(run.data_fraction, n));
    return order;
}

MetricsRecord train_run(const RunSpec& run, const Model& initial, const TaskData& data)
{
    Model trained = initial;
    return train_run(run, initial, data, trained);
}

MetricsRecord train_run(const RunSpec& run, const Model& initial, const TaskData& data, Model& trained)
{
    const auto started = std::chrono::steady_clock::now();
    run.validate();
    if (initial.spec().kind != run.model.kind || initial.spec().classes() != run.model.classes()) {
        throw SpecError("initial model does not match the run's model spec");
    }

    const RngStream rng(run.seed);
    Model model = initial;
    reset_optimizer_state(model);
    if (run.reinit_head) {
        model.reinit_head(mix64(run.seed ^ hash_label("head")));
    }

    const std::vector<std::size_t> rows = training_rows(run, data.target.train.n);
    const std::size_t n_used = rows.size();
    const Dataset train = data.target.train.subset(rows);
    const Batch dev = data.target.dev.all();

    const std::size_t steps_per_epoch = (n_used + run.batch_size - 1) / run.batch_size;
    PatsConfig config = run.pats;
    config.total_steps = run.epochs * steps_per_epoch;

    MetricsRecord record;
    record.run_id = run.run_id();
    record.optimizer = run.optimizer;
    record.seed = run.seed;
    record.data_fraction = run.data_fraction;
    record.n_train = n_used;
    record.total_steps = config.total_steps;

    if (run.optimizer == OptimizerKind::noisytune) {
        noisytune_perturb(model.groups(), run.noisytune_intensity, rng);
    }

    auto evaluate = [&](std::size_t epoch, std::size_t step) {
        EpochEvent e{epoch, step, model.loss(dev), model.accuracy(dev)};
        record.epochs.push_back(e);
        record.best_dev_accuracy = std::max(record.best_dev_accuracy, e.dev_accuracy);
        record.final_dev_accuracy = e.dev_accuracy;
    };
    evaluate(0, 0);

    std::size_t t = 0;
    for (std::size_t epoch = 1; epoch <= run.epochs && record.status == RunStatus::completed; ++epoch) {
        const std::vector<std::size_t> order = permutation(n_used, rng.substream("train.shuffle", epoch, Purpose::shuffle));
        for (std::size_t start = 0; start < n_used; start += run.batch_size) {
            ++t;
            const std::size_t count = std::min(run.batch_size, n_used - start);
            const Batch batch = train.batch(std::span(order).subspan(start, count));
            const double loss = compute_gradients(model, batch);
            const double lr = lr_schedule(t, config);
            record.steps.push_back({t, loss, lr});
            if (!std::isfinite(loss)) {
                record.status = RunStatus::diverged;
                break;
            }
            switch (run.optimizer) {
            case OptimizerKind::standard:
            case OptimizerKind::noisytune:
                adamax_step(model.groups(), config, t);
                break;
            case OptimizerKind::pats:
                pats_step(model.groups(), config, t, rng);
                break;
            case OptimizerKind::sage_style:
                sage_step(model.groups(), config, t);
                break;
            }
            if (!weights_finite(model)) {
                record.status = RunStatus::diverged;
                break;
            }
        }
        if (record.status == RunStatus::completed) {
            evaluate(epoch, t);
        }
    }

    if (record.status == RunStatus::completed) {
        record.sensitivity = distribution_report(model.groups(), run.report);
    }
    record.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    trained = std::move(model);
    return record;
}

} // namespace pats

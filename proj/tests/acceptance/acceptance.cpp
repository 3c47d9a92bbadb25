// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "pats/cli.hpp"
#include "pats/config.hpp"
#include "pats/io.hpp"
#include "pats/optimizer.hpp"
#include "pats/sensitivity.hpp"
#include "pats/sweep.hpp"
#include "pats/training.hpp"

#include "support/grad_cases.hpp"
#include "support/reference_adamax.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace pats;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

const std::string default_config = std::string(PATS_SOURCE_DIR) + "/configs/default.yaml";

// Computes gradients of the mean cross-entropy on `batch` into every group.
void gradients(Model& model, const Batch& batch)
{
    model.zero_grads();
    Tape tape;
    tape.backward(softmax_cross_entropy(model.forward(tape, batch), batch.labels));
}

std::vector<std::size_t> batch_rows(std::size_t step, std::size_t n, std::size_t bs)
{
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < bs; ++i) {
        rows.push_back((step * bs + i) % n);
    }
    return rows;
}

bool same_weights(const Model& a, const Model& b)
{
    for (std::size_t k = 0; k < a.groups().size(); ++k) {
        if (!(a.groups()[k].weights == b.groups()[k].weights)) {
            return false;
        }
    }
    return true;
}

Outcome reduction_equivalence()
{
    const RunSpec run = load_run_file(default_config);
    const TaskData data = generate_task(run.task);
    const Model start = pretrain_then_snapshot(run.model, data, run.pretrain);
    const std::size_t steps = 250;
    std::string detail;
    bool pass = true;
    for (const bool zero_lambda : {true, false}) {
        PatsConfig config = run.pats;
        config.total_steps = steps;
        (zero_lambda ? config.lambda : config.p) = 0.0;
        Model plain = start;
        Model noisy = start;
        const RngStream rng(run.seed);
        std::size_t first_mismatch = 0;
        for (std::size_t t = 1; t <= steps; ++t) {
            const Batch batch = data.target.train.batch(batch_rows(t, data.target.train.n, run.batch_size));
            gradients(plain, batch);
            gradients(noisy, batch);
            adamax_step(plain.groups(), config, t);
            pats_step(noisy.groups(), config, t, rng);
            if (first_mismatch == 0 && !same_weights(plain, noisy)) {
                first_mismatch = t;
            }
        }
        pass = pass && first_mismatch == 0;
        detail += std::string(zero_lambda ? "lambda=0" : "p=0") + ": " +
                  (first_mismatch == 0 ? "identical" : "diverged at step " + std::to_string(first_mismatch)) +
                  " over " + std::to_string(steps) + " steps; ";
    }
    return {pass, detail};
}

Outcome adamax_oracle()
{
    Draws draws(RngStream(2).substream("acceptance.adamax", 0, Purpose::data));
    std::vector<ParamGroup> groups;
    groups.emplace_back("scalar", Tensor::scalar(draws.next_normal()), true);
    groups.emplace_back("matrix", testing::random_tensor({5, 3}, draws), true);
    PatsConfig config;
    config.lr = 0.002;
    config.total_steps = 100;
    std::vector<testing::ReferenceAdamax> refs(groups.size());
    std::vector<std::vector<double>> xs;
    for (auto& g : groups) {
        xs.emplace_back(g.weights.values().begin(), g.weights.values().end());
    }
    double worst = 0.0;
    for (std::size_t t = 1; t <= 100; ++t) {
        for (std::size_t k = 0; k < groups.size(); ++k) {
            auto& g = groups[k];
            g.weights.zero_grad();
            for (auto& v : g.weights.grad()) {
                v = draws.next_normal() * std::pow(10.0, -3 + 3 * draws.next_uniform());
            }
            refs[k].lr = lr_schedule(t, config); // reference applies the scheduled step size as its lr
            refs[k].step(xs[k], std::vector<double>(g.weights.grad().begin(), g.weights.grad().end()));
        }
        adamax_step(groups, config, t);
        for (std::size_t k = 0; k < groups.size(); ++k) {
            for (std::size_t j = 0; j < xs[k].size(); ++j) {
                worst = std::max(worst, std::abs(xs[k][j] - groups[k].weights[j]));
            }
        }
    }
    return {worst < 1e-12, "max |deviation| = " + num(worst) + " over 100 steps"};
}

Outcome gradient_correctness()
{
    double worst = 0.0;
    std::string worst_name;
    std::size_t checks = 0;
    for (std::uint64_t c = 1; c <= 50; ++c) {
        for (const auto& op : testing::op_cases(c)) {
            const auto r = testing::check_gradients(op.build, op.inputs);
            checks += r.checked;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                worst_name = op.name;
            }
        }
        for (const auto& [name, r] : testing::model_cases(c)) {
            checks += r.checked;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                worst_name = name;
            }
        }
    }
    return {worst < 1e-4, "50 cases, " + std::to_string(checks) + " coordinates, max rel error " + num(worst) +
                              " (" + worst_name + ")"};
}

Outcome noise_scale_vector()
{
    const Tensor r = noise_scale(Tensor::vector({1.0, 0.5, 0.1, 0.4}), 2e-6, 0.002, 1e-12);
    // Exact values of lambda * (mean / (s_j + 1e-12) - gamma), evaluated in 40-digit decimal.
    const double exact[] = {9.95999999999e-7, 1.995999999996e-6, 9.9959999999e-6, 2.49599999999375e-6};
    // The same values rounded to four significant digits; epsilon shifts them by at most 1e-11.
    const double rounded[] = {9.96e-7, 1.996e-6, 9.996e-6, 2.496e-6};
    double worst = 0.0;
    double worst_rounded = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        worst = std::max(worst, std::abs(r[j] - exact[j]) / exact[j]);
        worst_rounded = std::max(worst_rounded, std::abs(r[j] - rounded[j]) / rounded[j]);
    }
    // mean 250.5: ratio for 500 is 0.501 <= gamma = 0.6; ratio for 1 is 250.5 > gamma.
    const Tensor clamp = noise_scale(Tensor::vector({1, 500}), 2e-6, 0.6, 1e-12);
    const bool clamped = clamp[1] == 0.0 && clamp[0] > 0.0;
    return {worst < 1e-12 && worst_rounded < 1e-10 && clamped,
            "max rel error " + num(worst) + " vs exact, " + num(worst_rounded) +
                " vs 4-digit values; clamp case r=" + num(clamp[1]) + (clamped ? " (exact 0)" : "")};
}

Outcome noise_statistics()
{
    const RngStream rng(5);
    const Tensor variance = Tensor::vector({9.96e-7, 1.996e-6, 9.996e-6, 2.496e-6});
    const std::size_t draws = 100000;
    std::vector<std::size_t> hits(variance.size(), 0);
    std::vector<double> sum_sq(variance.size(), 0.0);
    for (std::size_t step = 1; step <= draws; ++step) {
        const Tensor q = sample_perturbation(variance, 0.2, rng, "acceptance.noise", step);
        for (std::size_t j = 0; j < q.size(); ++j) {
            if (q[j] != 0.0) {
                ++hits[j];
                sum_sq[j] += q[j] * q[j];
            }
        }
    }
    bool pass = true;
    double worst_fraction = 0.0;
    double worst_var = 0.0;
    for (std::size_t j = 0; j < variance.size(); ++j) {
        const double fraction = static_cast<double>(hits[j]) / draws;
        const double rel = std::abs(sum_sq[j] / static_cast<double>(hits[j]) - variance[j]) / variance[j];
        pass = pass && std::abs(fraction - 0.2) <= 0.004 && rel <= 0.1;
        worst_fraction = std::max(worst_fraction, std::abs(fraction - 0.2));
        worst_var = std::max(worst_var, rel);
    }
    return {pass, "1e5 draws per parameter: max |fraction - 0.2| = " + num(worst_fraction) +
                      ", max rel variance error = " + num(worst_var)};
}

Outcome monotone_ordering()
{
    Draws draws(RngStream(6).substream("acceptance.monotone", 0, Purpose::data));
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + draws.next_below(30);
        Tensor s({n});
        for (auto& v : s.values()) {
            v = std::pow(10.0, -9 + 9 * draws.next_uniform());
        }
        const Tensor r = noise_scale(s, 2e-6, 0.002, 1e-8);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                violations += (s[j] < s[k] && r[j] < r[k]) ? 1 : 0;
            }
        }
    }
    return {violations == 0, "1000 random vectors, " + std::to_string(violations) + " violations"};
}

Outcome ema_exactness()
{
    const double beta = 0.75;
    double worst = 0.0;
    for (const auto& [s0, s] : std::vector<std::pair<double, double>>{{0.0, 0.4}, {2.5, 0.4}, {1e-3, 7.0}}) {
        Tensor ema = Tensor::scalar(s0);
        for (int k = 1; k <= 50; ++k) {
            update_ema_in_place(ema, Tensor::scalar(s), beta);
            worst = std::max(worst, std::abs(std::abs(ema.item() - s) - std::pow(beta, k) * std::abs(s0 - s)));
        }
    }
    return {worst < 1e-12, "max deviation " + num(worst) + " for k <= 50"};
}

struct Experiment {
    RunSpec run;
    TaskData data;
    Model initial;
};

Experiment default_experiment()
{
    RunSpec run = load_run_file(default_config);
    TaskData data = generate_task(run.task);
    Model initial = pretrain_then_snapshot(run.model, data, run.pretrain);
    return {std::move(run), std::move(data), std::move(initial)};
}

const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

Outcome sensitivity_spread(const Experiment& e)
{
    RunSpec standard = e.run;
    standard.optimizer = OptimizerKind::standard;
    RunSpec noisy = e.run;
    noisy.optimizer = OptimizerKind::pats;
    const SeedSweep a = seed_sweep(standard, e.initial, e.data, seeds);
    const SeedSweep b = seed_sweep(noisy, e.initial, e.data, seeds);
    std::size_t wins = 0;
    std::string pairs;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const double sa = a.records[i].sensitivity.std_log10;
        const double sb = b.records[i].sensitivity.std_log10;
        wins += sb < sa ? 1 : 0;
        pairs += " " + num(sb) + "<" + num(sa) + (sb < sa ? "" : "(no)");
    }
    return {wins >= 4, std::to_string(wins) + "/5 seeds with lower std log10 sensitivity (pats<standard):" + pairs};
}

Outcome fraction_sweep(const Experiment& e)
{
    const std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};
    bool monotone = true;
    std::string detail;
    std::vector<std::vector<FractionRow>> by_kind;
    for (OptimizerKind kind : {OptimizerKind::standard, OptimizerKind::pats}) {
        RunSpec run = e.run;
        run.optimizer = kind;
        by_kind.push_back(data_fraction_sweep(run, e.initial, e.data, fractions, seeds));
        const auto& rows = by_kind.back();
        std::size_t inversions = 0;
        bool within_std = true;
        detail += std::string(to_string(kind)) + " [";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& acc = rows[i].sweep.best_dev_accuracy;
            detail += (i ? " " : "") + num(acc.mean) + "±" + num(acc.std);
            if (i > 0 && acc.mean < rows[i - 1].sweep.best_dev_accuracy.mean) {
                ++inversions;
                const double drop = rows[i - 1].sweep.best_dev_accuracy.mean - acc.mean;
                within_std = within_std && drop <= std::max(acc.std, rows[i - 1].sweep.best_dev_accuracy.std);
            }
        }
        detail += "] ";
        monotone = monotone && inversions <= 1 && within_std;
    }
    bool small_data = true;
    for (std::size_t i = 0; i < 2; ++i) {
        small_data = small_data &&
                     by_kind[1][i].sweep.best_dev_accuracy.mean >= by_kind[0][i].sweep.best_dev_accuracy.mean;
    }
    detail += std::string("(a) non-decreasing: ") + (monotone ? "yes" : "no") +
              ", (b) pats >= standard at 0.1 and 0.25: " + (small_data ? "yes" : "no");
    return {monotone && small_data, detail};
}

Outcome layernorm_exclusion()
{
    RunSpec run;
    run.model.kind = ModelKind::tiny_transformer;
    run.model.num_classes = 2;
    run.model.perturb_vectors = true; // everything but LayerNorm is noisy
    run.model.perturb_embeddings = true;
    run.task.generator = Generator::token_pattern;
    run.task.num_classes = 2;
    run.task.n_train = 256;
    run.pats = paper_defaults();
    run.pats.lr = 0.01;
    run.pats.total_steps = 80;
    const TaskData data = generate_task(run.task);
    Model model = build_model(run.model, 3);
    // Shadow copy updated with lambda = 0 from the same gradients.
    Model shadow = model;
    PatsConfig quiet = run.pats;
    quiet.lambda = 0.0;
    const RngStream rng(7);
    bool excluded_equal = true;
    bool noise_active = false;
    std::size_t excluded = 0;
    for (std::size_t t = 1; t <= run.pats.total_steps; ++t) {
        gradients(model, data.target.train.batch(batch_rows(t, data.target.train.n, 32)));
        for (std::size_t k = 0; k < model.groups().size(); ++k) {
            shadow.groups()[k].weights.zero_grad();
            const auto g = model.groups()[k].weights.grad();
            std::copy(g.begin(), g.end(), shadow.groups()[k].weights.grad().begin());
            if (model.groups()[k].perturbable) {
                // Perturbable groups restart from the noisy state; only excluded groups keep their shadow.
                shadow.groups()[k].weights = model.groups()[k].weights;
                shadow.groups()[k].weights.zero_grad();
                std::copy(g.begin(), g.end(), shadow.groups()[k].weights.grad().begin());
                shadow.groups()[k].m = model.groups()[k].m;
                shadow.groups()[k].u = model.groups()[k].u;
                shadow.groups()[k].s = model.groups()[k].s;
            }
        }
        pats_step(model.groups(), run.pats, t, rng);
        pats_step(shadow.groups(), quiet, t, rng);
        excluded = 0;
        for (std::size_t k = 0; k < model.groups().size(); ++k) {
            const auto& g = model.groups()[k];
            if (!g.perturbable) {
                ++excluded;
                excluded_equal = excluded_equal && g.weights == shadow.groups()[k].weights;
            } else if (!(g.weights == shadow.groups()[k].weights)) {
                noise_active = true;
            }
        }
    }
    return {excluded_equal && noise_active && excluded > 0,
            std::to_string(excluded) + " LayerNorm groups " + (excluded_equal ? "bit-identical" : "DIFFER") +
                " to the lambda=0 trajectory over 80 steps; noise " +
                (noise_active ? "active" : "inactive") + " on perturbable groups"};
}

Outcome end_to_end_determinism()
{
    const fs::path dir = fs::temp_directory_path() / "pats-acceptance-determinism";
    fs::remove_all(dir);
    const std::string ckpt = (dir / "ck.json").string();
    std::ostringstream out, err;
    if (run_cli({"pretrain", default_config, "--out", ckpt}, out, err) != 0) {
        return {false, "pretrain failed: " + err.str()};
    }
    std::vector<std::string> files[2];
    for (int i = 0; i < 2; ++i) {
        const fs::path target = dir / ("out" + std::to_string(i));
        if (run_cli({"train", default_config, "--ckpt", ckpt, "--optimizer", "pats", "--seed", "3", "--out",
                     target.string()},
                    out, err) != 0) {
            return {false, "train failed: " + err.str()};
        }
        for (const char* name : {"default-pats-s3-f1.metrics.jsonl", "default-pats-s3-f1.summary.json"}) {
            files[i].push_back(read_text(target / name));
        }
    }
    const bool same = files[0] == files[1];
    return {same, same ? "jsonl and summary byte-identical across two invocations" : "outputs differ"};
}

} // namespace

int main()
{
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
        const auto started = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        failures += o.pass ? 0 : 1;
        std::cout << "criterion " << id << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
                  << " (" << num(seconds) << " s)" << std::endl;
    };

    report(1, "reduction equivalence", reduction_equivalence);
    report(2, "adamax oracle", adamax_oracle);
    report(3, "gradient correctness", gradient_correctness);
    report(4, "noise scale vector", noise_scale_vector);
    report(5, "noise statistics", noise_statistics);
    report(6, "monotone noise ordering", monotone_ordering);
    report(7, "EMA exactness", ema_exactness);
    const Experiment experiment = default_experiment();
    report(8, "sensitivity spread", [&] { return sensitivity_spread(experiment); });
    report(9, "data-fraction sweep", [&] { return fraction_sweep(experiment); });
    report(10, "LayerNorm exclusion", layernorm_exclusion);
    report(11, "end-to-end determinism", end_to_end_determinism);

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " criteria FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}

#include "pats/cli.hpp"

#include "pats/checkpoint.hpp"
#include "pats/config.hpp"
#include "pats/errors.hpp"
#include "pats/io.hpp"
#include "pats/metrics_io.hpp"
#include "pats/sweep.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <sstream>

namespace pats {

namespace fs = std::filesystem;

std::vector<std::uint64_t> parse_seed_list(const std::string& text)
{
    std::vector<std::uint64_t> seeds;
    std::stringstream in(text);
    std::string part;
    auto number = [&](const std::string& s) -> std::uint64_t {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(s, &used);
            if (used != s.size() || s.starts_with('-')) {
                throw std::invalid_argument(s);
            }
            return v;
        } catch (const std::exception&) {
            throw ConfigError("bad seed '" + s + "' in --seeds " + text);
        }
    };
    while (std::getline(in, part, ',')) {
        const auto dots = part.find("..");
        if (dots == std::string::npos) {
            seeds.push_back(number(part));
            continue;
        }
        const std::uint64_t lo = number(part.substr(0, dots));
        const std::uint64_t hi = number(part.substr(dots + 2));
        if (hi < lo) {
            throw ConfigError("empty seed range '" + part + "'");
        }
        for (std::uint64_t s = lo; s <= hi; ++s) {
            seeds.push_back(s);
        }
    }
    if (seeds.empty()) {
        throw ConfigError("--seeds is empty");
    }
    return seeds;
}

std::vector<double> parse_fraction_list(const std::string& text)
{
    std::vector<double> fractions;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) {
        char* end = nullptr;
        const double v = std::strtod(part.c_str(), &end);
        if (part.empty() || *end != '\0') {
            throw ConfigError("bad fraction '" + part + "' in --fractions " + text);
        }
        if (!(v > 0.0 && v <= 1.0)) {
            throw SpecError("fraction " + part + " outside (0, 1]");
        }
        fractions.push_back(v);
    }
    if (fractions.empty()) {
        throw ConfigError("--fractions is empty");
    }
    return fractions;
}

namespace {

struct Options {
    std::string config;
    bool print_config = false;
    std::string out;
    std::string ckpt;
    std::string optimizer;
    std::vector<std::string> optimizers;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double fraction = 0.0;
    std::string seeds = "1..5";
    std::string fractions = "1.0";
    std::size_t workers = 1;
    bool timing = false;
    bool json = false;
    std::vector<std::string> run_dirs;
};

RunSpec resolve(const Options& o)
{
    RunSpec run = o.config.empty() ? RunSpec{} : load_run_file(o.config);
    if (!o.optimizer.empty()) {
        run.optimizer = parse_optimizer(o.optimizer);
    }
    if (o.seed_set) {
        run.seed = o.seed;
    }
    if (o.fraction > 0.0) {
        run.data_fraction = o.fraction;
    }
    return run;
}

std::string fixed(double v, int digits = 4)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

int cmd_pretrain(const Options& o, std::ostream& out)
{
    const RunSpec run = resolve(o);
    run.model.validate();
    run.task.validate();
    const Model model = pretrain_then_snapshot(run.model, run.task, run.pretrain);
    save_checkpoint(o.out, model, 0);
    const TaskData data = generate_task(run.task);
    out << "pretrained " << to_string(run.model.kind) << " (" << model.parameter_count() << " parameters, "
        << run.pretrain.steps << " steps) source dev accuracy " << fixed(model.accuracy(data.source.dev.all()))
        << " -> " << o.out << "\n";
    return exit_ok;
}

int cmd_train(const Options& o, std::ostream& out)
{
    const RunSpec run = resolve(o);
    run.validate();
    const Checkpoint ckpt = load_checkpoint(o.ckpt);
    const MetricsRecord record = train_run(run, ckpt.model);
    const RunFiles files = write_run_outputs(o.out, record, run, o.timing);
    out << record.run_id << " " << to_string(record.status) << " best_dev_accuracy "
        << fixed(record.best_dev_accuracy) << " std_log10_sensitivity " << fixed(record.sensitivity.std_log10)
        << " -> " << files.summary.string() << "\n";
    return exit_ok;
}

int cmd_sweep(const Options& o, std::ostream& out)
{
    RunSpec run = resolve(o);
    const std::vector<std::uint64_t> seeds = parse_seed_list(o.seeds);
    const std::vector<double> fractions = parse_fraction_list(o.fractions);
    std::vector<OptimizerKind> kinds;
    for (const auto& name : o.optimizers) {
        kinds.push_back(parse_optimizer(name));
    }
    if (kinds.empty()) {
        kinds.push_back(run.optimizer);
    }
    run.validate();
    const TaskData data = generate_task(run.task);
    const Model initial = o.ckpt.empty() ? pretrain_then_snapshot(run.model, data, run.pretrain)
                                         : load_checkpoint(o.ckpt).model;

    std::vector<FractionRow> rows;
    for (OptimizerKind kind : kinds) {
        RunSpec variant = run;
        variant.optimizer = kind;
        auto part = data_fraction_sweep(variant, initial, data, fractions, seeds, o.workers);
        for (auto& row : part) {
            for (const auto& record : row.sweep.records) {
                RunSpec exact = variant;
                exact.seed = record.seed;
                exact.data_fraction = record.data_fraction;
                write_run_outputs(o.out, record, exact, o.timing);
            }
            rows.push_back(std::move(row));
        }
    }
    const fs::path csv = fs::path(o.out) / (run.name + "-sweep.summary.csv");
    const std::string table = sweep_csv(rows);
    atomic_write(csv, table);
    out << table << "-> " << csv.string() << "\n";
    return exit_ok;
}

int cmd_analyze(const Options& o, std::ostream& out)
{
    std::vector<RunSummary> runs;
    for (const auto& dir : o.run_dirs) {
        const fs::path p(dir);
        if (fs::is_regular_file(p)) {
            runs.push_back(read_summary(p));
            continue;
        }
        const auto files = find_summaries(p);
        if (files.empty()) {
            throw IoError("no *.summary.json files in " + dir);
        }
        for (const auto& f : files) {
            runs.push_back(read_summary(f));
        }
    }

    Json doc;
    doc["schema_version"] = schema_version;
    Json runs_json = Json::array();
    Json table = Json::array();
    std::ostringstream csv;
    csv << "run_id,optimizer,seed,data_fraction,status,best_dev_accuracy,std_log10_sensitivity,"
           "mean_log10_sensitivity,fraction_below_window\n";
    for (const auto& r : runs) {
        Json row;
        row["run_id"] = r.run_id;
        row["optimizer"] = r.optimizer;
        row["seed"] = r.seed;
        row["data_fraction"] = r.data_fraction;
        row["status"] = r.status;
        row["best_dev_accuracy"] = r.best_dev_accuracy;
        row["std_log10_sensitivity"] = r.sensitivity.std_log10;
        row["mean_log10_sensitivity"] = r.sensitivity.mean_log10;
        row["fraction_below_window"] = r.sensitivity.fraction_below;
        table.push_back(row);
        runs_json.push_back({{"run_id", r.run_id}, {"optimizer", r.optimizer}, {"sensitivity", r.sensitivity_json}});
        csv << r.run_id << ',' << r.optimizer << ',' << r.seed << ',' << format_double(r.data_fraction) << ','
            << r.status << ',' << format_double(r.best_dev_accuracy) << ','
            << format_double(r.sensitivity.std_log10) << ',' << format_double(r.sensitivity.mean_log10) << ','
            << format_double(r.sensitivity.fraction_below) << '\n';
    }
    doc["runs"] = std::move(runs_json);
    doc["table"] = std::move(table);
    if (!o.out.empty()) {
        atomic_write(o.out, doc.dump(2) + "\n");
    }
    if (o.json) {
        out << doc.dump(2) << "\n";
    } else {
        out << csv.str();
    }
    return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Sensitivity-aware noisy fine-tuning experiments", "pats"};
    app.require_subcommand(0, 1);
    Options o;
    app.add_flag("--print-config", o.print_config, "Print the fully resolved run file and exit");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", o.config, "YAML run file")->required();
        sub->add_flag("--print-config", o.print_config, "Print the fully resolved run file and exit");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "Train on the source task and write a checkpoint");
    add_common(pretrain);
    pretrain->add_option("--out", o.out, "Checkpoint path");

    CLI::App* train = app.add_subcommand("train", "Fine-tune a checkpoint on the target task");
    add_common(train);
    train->add_option("--ckpt", o.ckpt, "Checkpoint from `pretrain`");
    train->add_option("--optimizer", o.optimizer, "standard | pats | noisytune | sage");
    train->add_option("--seed", o.seed, "Run seed")->each([&](const std::string&) { o.seed_set = true; });
    train->add_option("--fraction", o.fraction, "Fraction of the training split to use");
    train->add_option("--out", o.out, "Output directory");
    train->add_flag("--timing", o.timing, "Record wall-clock time in the summary");

    CLI::App* sweep = app.add_subcommand("sweep", "Seed x data-fraction sweep");
    add_common(sweep);
    sweep->add_option("--ckpt", o.ckpt, "Checkpoint; pretrains in memory when omitted");
    sweep->add_option("--optimizer", o.optimizers, "Optimizer(s); repeat for several");
    sweep->add_option("--seeds", o.seeds, "Seed list, e.g. 1..5 or 1,2,7")->capture_default_str();
    sweep->add_option("--fractions", o.fractions, "Comma-separated fractions in (0, 1]")->capture_default_str();
    sweep->add_option("--workers", o.workers, "Parallel runs")->capture_default_str();
    sweep->add_option("--out", o.out, "Output directory");
    sweep->add_flag("--timing", o.timing, "Record wall-clock time in summaries");

    CLI::App* analyze = app.add_subcommand("analyze", "Compare sensitivity reports of finished runs");
    analyze->add_option("runs", o.run_dirs, "Run directories or summary files")->required();
    analyze->add_option("--out", o.out, "Write the combined report JSON here");
    analyze->add_flag("--json", o.json, "Print the JSON report instead of the table");

    CLI::App* presets = app.add_subcommand("presets", "List optimizer presets and search grids");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (o.print_config) {
            out << print_run_file(resolve(o));
            return exit_ok;
        }
        auto require_out = [&](const char* what) {
            if (o.out.empty()) {
                throw ConfigError(std::string("--out is required for ") + what);
            }
        };
        if (pretrain->parsed()) {
            require_out("pretrain");
            return cmd_pretrain(o, out);
        }
        if (train->parsed()) {
            require_out("train");
            if (o.ckpt.empty()) {
                throw ConfigError("--ckpt is required for train");
            }
            return cmd_train(o, out);
        }
        if (sweep->parsed()) {
            require_out("sweep");
            return cmd_sweep(o, out);
        }
        if (analyze->parsed()) {
            return cmd_analyze(o, out);
        }
        if (presets->parsed()) {
            out << presets_yaml();
            return exit_ok;
        }
        out << app.help();
        return exit_usage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
}

} // namespace pats

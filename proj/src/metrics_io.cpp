#include "pats/metrics_io.hpp"

#include "pats/errors.hpp"
#include "pats/io.hpp"

#include <algorithm>
#include <sstream>

namespace pats {

std::string metrics_jsonl(const MetricsRecord& record)
{
    std::string out;
    auto emit = [&](const Json& j) {
        out += j.dump();
        out += '\n';
    };
    std::size_t next_epoch = 0;
    auto emit_epochs_through = [&](std::size_t step) {
        while (next_epoch < record.epochs.size() && record.epochs[next_epoch].step <= step) {
            const auto& e = record.epochs[next_epoch++];
            Json j;
            j["schema_version"] = schema_version;
            j["event"] = "epoch";
            j["epoch"] = e.epoch;
            j["step"] = e.step;
            j["dev_loss"] = e.dev_loss;
            j["dev_accuracy"] = e.dev_accuracy;
            emit(j);
        }
    };
    emit_epochs_through(0);
    for (const auto& s : record.steps) {
        Json j;
        j["schema_version"] = schema_version;
        j["event"] = "step";
        j["step"] = s.step;
        j["loss"] = s.loss;
        j["lr"] = s.lr;
        emit(j);
        emit_epochs_through(s.step);
    }
    emit_epochs_through(record.total_steps + 1);
    return out;
}

Json summary_json(const MetricsRecord& record, const RunSpec& run, bool include_timing)
{
    Json j;
    j["schema_version"] = schema_version;
    j["run_id"] = record.run_id;
    j["optimizer"] = to_string(record.optimizer);
    j["seed"] = record.seed;
    j["data_fraction"] = record.data_fraction;
    j["n_train"] = record.n_train;
    j["total_steps"] = record.total_steps;
    j["steps_completed"] = record.steps.size();
    j["status"] = to_string(record.status);
    j["best_dev_accuracy"] = record.best_dev_accuracy;
    j["final_dev_accuracy"] = record.final_dev_accuracy;
    j["std_log10_sensitivity"] = record.sensitivity.std_log10;
    j["sensitivity"] = to_json(record.sensitivity);
    if (include_timing) {
        j["wall_clock_seconds"] = record.wall_clock_seconds;
    }
    j["config"] = to_json(run);
    return j;
}

RunFiles write_run_outputs(const std::filesystem::path& dir, const MetricsRecord& record, const RunSpec& run,
                           bool include_timing)
{
    RunFiles files{dir / (record.run_id + ".metrics.jsonl"), dir / (record.run_id + ".summary.json")};
    atomic_write(files.metrics, metrics_jsonl(record));
    atomic_write(files.summary, summary_json(record, run, include_timing).dump(2) + "\n");
    return files;
}

std::string sweep_csv(std::span<const FractionRow> rows)
{
    std::ostringstream out;
    out << "schema_version,optimizer,fraction,n_train,seeds,diverged,"
           "mean_best_dev_accuracy,std_best_dev_accuracy,"
           "mean_final_dev_accuracy,std_final_dev_accuracy,"
           "mean_std_log10_sensitivity,std_std_log10_sensitivity\n";
    for (const auto& r : rows) {
        const SeedSweep& s = r.sweep;
        out << schema_version << ',' << to_string(r.optimizer) << ',' << format_double(r.fraction) << ','
            << r.n_train << ',' << s.records.size() << ',' << s.diverged << ','
            << format_double(s.best_dev_accuracy.mean) << ',' << format_double(s.best_dev_accuracy.std) << ','
            << format_double(s.final_dev_accuracy.mean) << ',' << format_double(s.final_dev_accuracy.std) << ','
            << format_double(s.std_log10_sensitivity.mean) << ',' << format_double(s.std_log10_sensitivity.std)
            << '\n';
    }
    return out.str();
}

RunSummary read_summary(const std::filesystem::path& path)
{
    try {
        const Json j = Json::parse(read_text(path));
        RunSummary s;
        s.run_id = j.at("run_id").get<std::string>();
        s.optimizer = j.at("optimizer").get<std::string>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.data_fraction = j.at("data_fraction").get<double>();
        s.status = j.at("status").get<std::string>();
        s.best_dev_accuracy = j.at("best_dev_accuracy").get<double>();
        s.final_dev_accuracy = j.at("final_dev_accuracy").get<double>();
        s.sensitivity_json = j.at("sensitivity");
        s.sensitivity = sensitivity_report_from_json(s.sensitivity_json);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": malformed summary: " + e.what());
    } catch (const ConfigError& e) {
        throw IoError(path.string() + ": malformed summary: " + e.what());
    }
}

std::vector<std::filesystem::path> find_summaries(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw IoError("not a run directory: " + dir.string());
    }
    std::vector<fs::path> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.ends_with(".summary.json")) {
            found.push_back(entry.path());
        }
    }
    std::sort(found.begin(), found.end());
    return found;
}

} // namespace pats

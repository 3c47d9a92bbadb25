#include "pats/checkpoint.hpp"
#include "pats/cli.hpp"
#include "pats/config.hpp"
#include "pats/errors.hpp"
#include "pats/metrics_io.hpp"
#include "pats/optimizer.hpp"
#include "pats/sensitivity.hpp"
#include "pats/training.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace pats;

namespace {

Tensor as_tensor(const std::vector<double>& v) { return Tensor::vector(v); }
std::vector<double> as_list(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Sensitivity-aware noisy fine-tuning: core operations";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<SpecError>(m, "SpecError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<InputError>(m, "InputError", base.ptr());
    py::register_exception<StateError>(m, "StateError", base.ptr());

    m.attr("schema_version") = schema_version;

    m.def(
        "sensitivity",
        [](const std::vector<double>& weights, const std::vector<double>& grads) {
            return as_list(instantaneous_sensitivity(as_tensor(weights), as_tensor(grads)));
        },
        py::arg("weights"), py::arg("grads"), "|theta * g| elementwise.");
    m.def(
        "update_ema",
        [](const std::vector<double>& ema, const std::vector<double>& current, double beta) {
            return as_list(update_ema(as_tensor(ema), as_tensor(current), beta));
        },
        py::arg("ema"), py::arg("current"), py::arg("beta"));
    m.def(
        "noise_scale",
        [](const std::vector<double>& s, double lambda, double gamma, double eps, const std::string& placement) {
            return as_list(noise_scale(as_tensor(s), lambda, gamma, eps, parse_eps_placement(placement)));
        },
        py::arg("sensitivity"), py::arg("lam") = 2e-6, py::arg("gamma") = 0.002, py::arg("eps") = 1e-8,
        py::arg("placement") = "per_parameter", "Per-parameter noise variance for one parameter matrix.");
    m.def(
        "sample_perturbation",
        [](const std::vector<double>& variance, double p, std::uint64_t seed, const std::string& group,
           std::size_t step) { return as_list(sample_perturbation(as_tensor(variance), p, RngStream(seed), group, step)); },
        py::arg("variance"), py::arg("p"), py::arg("seed"), py::arg("group") = "g", py::arg("step") = 1);
    m.def(
        "lr_schedule",
        [](std::size_t step, double lr, std::size_t total_steps, double warmup_fraction) {
            PatsConfig c;
            c.lr = lr;
            c.total_steps = total_steps;
            c.warmup_fraction = warmup_fraction;
            return lr_schedule(step, c);
        },
        py::arg("step"), py::arg("lr"), py::arg("total_steps"), py::arg("warmup_fraction") = 0.1);
    m.def(
        "sage_scale_lr",
        [](const std::vector<double>& s, double base_lr, double eps) {
            return as_list(sage_scale_lr(as_tensor(s), base_lr, eps));
        },
        py::arg("sensitivity"), py::arg("base_lr"), py::arg("eps") = 1e-8);

    m.def(
        "resolve_config", [](const std::string& yaml) { return print_run_file(parse_run_file(yaml)); },
        py::arg("yaml"), "Fully explicit YAML for a run file; raises ConfigError on unknown keys.");
    m.def(
        "train",
        [](const std::string& yaml, const std::string& optimizer, std::uint64_t seed, double fraction,
           const std::string& checkpoint) {
            RunSpec run = parse_run_file(yaml);
            run.optimizer = parse_optimizer(optimizer);
            run.seed = seed;
            run.data_fraction = fraction;
            MetricsRecord record;
            {
                py::gil_scoped_release release;
                const Model initial = checkpoint.empty() ? pretrain_then_snapshot(run.model, run.task, run.pretrain)
                                                         : load_checkpoint(checkpoint).model;
                record = train_run(run, initial);
            }
            return to_python(summary_json(record, run));
        },
        py::arg("yaml"), py::arg("optimizer") = "pats", py::arg("seed") = 1, py::arg("fraction") = 1.0,
        py::arg("checkpoint") = "",
        "Pretrains (or loads `checkpoint`), fine-tunes once and returns the run summary as a dict.");
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}

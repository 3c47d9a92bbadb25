#include "pats/serialization.hpp"

#include "pats/errors.hpp"

#include <array>
#include <charconv>
#include <set>

namespace pats {

std::string format_double(double value)
{
    std::array<char, 64> buf{};
    const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), result.ptr);
}

std::string_view to_string(EpsilonPlacement placement)
{
    return placement == EpsilonPlacement::per_parameter ? "per_parameter" : "matrix_sum";
}

EpsilonPlacement parse_eps_placement(std::string_view text)
{
    if (text == "per_parameter") {
        return EpsilonPlacement::per_parameter;
    }
    if (text == "matrix_sum") {
        return EpsilonPlacement::matrix_sum;
    }
    throw ConfigError("unknown eps_placement '" + std::string(text) + "' (expected per_parameter or matrix_sum)");
}

namespace {

/// Reads known keys from one JSON object and rejects anything left over.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw ConfigError(path_.empty() ? std::string("run file must be a mapping") : "'" + path_ + "' must be a mapping");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const Json* take(const std::string& key)
    {
        seen_.insert(key);
        return has(key) ? &j_.at(key) : nullptr;
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void read(const std::string& key, double& out)
    {
        if (const Json* v = take(key)) {
            if (!v->is_number()) {
                throw ConfigError("'" + key_path(key) + "' must be a number");
            }
            out = v->get<double>();
        }
    }

    void read(const std::string& key, std::size_t& out)
    {
        if (const Json* v = take(key)) {
            if (!v->is_number_unsigned()) {
                throw ConfigError("'" + key_path(key) + "' must be a non-negative integer");
            }
            out = v->get<std::size_t>();
        }
    }

    void read_u64(const std::string& key, std::uint64_t& out)
    {
        if (const Json* v = take(key)) {
            if (!v->is_number_unsigned()) {
                throw ConfigError("'" + key_path(key) + "' must be a non-negative integer");
            }
            out = v->get<std::uint64_t>();
        }
    }

    void read(const std::string& key, bool& out)
    {
        if (const Json* v = take(key)) {
            if (!v->is_boolean()) {
                throw ConfigError("'" + key_path(key) + "' must be true or false");
            }
            out = v->get<bool>();
        }
    }

    void read(const std::string& key, std::string& out)
    {
        if (const Json* v = take(key)) {
            if (v->is_string()) {
                out = v->get<std::string>();
            } else if (v->is_number()) {
                out = v->dump();
            } else {
                throw ConfigError("'" + key_path(key) + "' must be a string");
            }
        }
    }

    template <class Enum, class Parse>
    void read_enum(const std::string& key, Enum& out, Parse parse)
    {
        std::string text;
        if (has(key)) {
            read(key, text);
            try {
                out = parse(text);
            } catch (const ConfigError& e) {
                throw ConfigError("'" + key_path(key) + "': " + e.what());
            }
        } else {
            seen_.insert(key);
        }
    }

    void read(const std::string& key, std::vector<std::size_t>& out)
    {
        if (const Json* v = take(key)) {
            if (!v->is_array()) {
                throw ConfigError("'" + key_path(key) + "' must be a list");
            }
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number_unsigned()) {
                    throw ConfigError("'" + key_path(key) + "' entries must be non-negative integers");
                }
                out.push_back(e.get<std::size_t>());
            }
        }
    }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError("unknown key '" + key_path(key) + "'");
            }
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Fn>
auto wrap_spec_errors(Fn fn)
{
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed document: ") + e.what());
    }
}

} // namespace

Json to_json(const ModelSpec& spec)
{
    Json j;
    j["kind"] = to_string(spec.kind);
    j["activation"] = to_string(spec.activation);
    j["layer_sizes"] = spec.layer_sizes;
    j["vocab"] = spec.vocab;
    j["seq_len"] = spec.seq_len;
    j["embed_dim"] = spec.embed_dim;
    j["heads"] = spec.heads;
    j["ffn_dim"] = spec.ffn_dim;
    j["blocks"] = spec.blocks;
    j["num_classes"] = spec.num_classes;
    j["perturb_embeddings"] = spec.perturb_embeddings;
    j["perturb_vectors"] = spec.perturb_vectors;
    j["init_seed"] = spec.init_seed;
    return j;
}

ModelSpec model_spec_from_json(const Json& j, const std::string& path)
{
    ModelSpec spec;
    ObjectReader r(j, path);
    r.read_enum("kind", spec.kind, parse_model_kind);
    r.read_enum("activation", spec.activation, parse_activation);
    r.read("layer_sizes", spec.layer_sizes);
    r.read("vocab", spec.vocab);
    r.read("seq_len", spec.seq_len);
    r.read("embed_dim", spec.embed_dim);
    r.read("heads", spec.heads);
    r.read("ffn_dim", spec.ffn_dim);
    r.read("blocks", spec.blocks);
    r.read("num_classes", spec.num_classes);
    r.read("perturb_embeddings", spec.perturb_embeddings);
    r.read("perturb_vectors", spec.perturb_vectors);
    r.read_u64("init_seed", spec.init_seed);
    r.finish();
    return spec;
}

Json to_json(const TaskSpec& spec)
{
    Json j;
    j["generator"] = to_string(spec.generator);
    j["n_train"] = spec.n_train;
    j["n_dev"] = spec.n_dev;
    j["input_dim"] = spec.input_dim;
    j["vocab"] = spec.vocab;
    j["seq_len"] = spec.seq_len;
    j["num_classes"] = spec.num_classes;
    j["shift"] = spec.shift;
    j["separation"] = spec.separation;
    j["noise"] = spec.noise;
    j["seed"] = spec.seed;
    return j;
}

TaskSpec task_spec_from_json(const Json& j, const std::string& path)
{
    TaskSpec spec;
    ObjectReader r(j, path);
    r.read_enum("generator", spec.generator, parse_generator);
    r.read("n_train", spec.n_train);
    r.read("n_dev", spec.n_dev);
    r.read("input_dim", spec.input_dim);
    r.read("vocab", spec.vocab);
    r.read("seq_len", spec.seq_len);
    r.read("num_classes", spec.num_classes);
    r.read("shift", spec.shift);
    r.read("separation", spec.separation);
    r.read("noise", spec.noise);
    r.read_u64("seed", spec.seed);
    r.finish();
    return spec;
}

Json to_json(const PatsConfig& c)
{
    Json j;
    j["lr"] = c.lr;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["beta"] = c.beta;
    j["lambda"] = c.lambda;
    j["gamma"] = c.gamma;
    j["eps"] = c.eps;
    j["p"] = c.p;
    j["adamax_eps"] = c.adamax_eps;
    j["warmup_fraction"] = c.warmup_fraction;
    j["eps_placement"] = to_string(c.eps_placement);
    return j;
}

Json to_json(const PretrainConfig& c)
{
    Json j;
    j["steps"] = c.steps;
    j["lr"] = c.lr;
    j["batch_size"] = c.batch_size;
    return j;
}

PretrainConfig pretrain_from_json(const Json& j, const std::string& path)
{
    PretrainConfig c;
    ObjectReader r(j, path);
    r.read("steps", c.steps);
    r.read("lr", c.lr);
    r.read("batch_size", c.batch_size);
    r.finish();
    return c;
}

Json to_json(const ReportOptions& o)
{
    Json j;
    j["bins"] = o.bins;
    j["window"] = o.window ? Json::array({o.window->first, o.window->second}) : Json(nullptr);
    j["perturbable_only"] = o.perturbable_only;
    return j;
}

ReportOptions report_options_from_json(const Json& j, const std::string& path)
{
    ReportOptions o;
    ObjectReader r(j, path);
    r.read("bins", o.bins);
    if (const Json* w = r.take("window")) {
        if (!w->is_array() || w->size() != 2 || !(*w)[0].is_number() || !(*w)[1].is_number()) {
            throw ConfigError("'" + r.key_path("window") + "' must be [low, high] or null");
        }
        o.window = std::make_pair((*w)[0].get<double>(), (*w)[1].get<double>());
    }
    r.read("perturbable_only", o.perturbable_only);
    r.finish();
    return o;
}

Json to_json(const SensitivityReport& report)
{
    Json j;
    Json groups = Json::array();
    for (const auto& g : report.groups) {
        groups.push_back({{"name", g.name}, {"size", g.size}, {"mean", g.mean}});
    }
    j["groups"] = std::move(groups);
    j["window_low"] = report.window_low;
    j["window_high"] = report.window_high;
    j["bin_edges"] = report.bin_edges;
    j["counts"] = report.counts;
    j["total"] = report.total;
    j["in_window"] = report.in_window;
    j["below_window"] = report.below_window;
    j["above_window"] = report.above_window;
    j["fraction_below"] = report.fraction_below;
    j["mean_log10"] = report.mean_log10;
    j["std_log10"] = report.std_log10;
    return j;
}

SensitivityReport sensitivity_report_from_json(const Json& j)
{
    return wrap_spec_errors([&] {
        SensitivityReport r;
        for (const auto& g : j.at("groups")) {
            r.groups.push_back({g.at("name").get<std::string>(), g.at("size").get<std::size_t>(), g.at("mean").get<double>()});
        }
        r.window_low = j.at("window_low").get<double>();
        r.window_high = j.at("window_high").get<double>();
        r.bin_edges = j.at("bin_edges").get<std::vector<double>>();
        r.counts = j.at("counts").get<std::vector<std::size_t>>();
        r.total = j.at("total").get<std::size_t>();
        r.in_window = j.at("in_window").get<std::size_t>();
        r.below_window = j.at("below_window").get<std::size_t>();
        r.above_window = j.at("above_window").get<std::size_t>();
        r.fraction_below = j.at("fraction_below").get<double>();
        r.mean_log10 = j.at("mean_log10").get<double>();
        r.std_log10 = j.at("std_log10").get<double>();
        return r;
    });
}

Json to_json(const RunSpec& run)
{
    Json j;
    j["name"] = run.name;
    j["model"] = to_json(run.model);
    j["task"] = to_json(run.task);
    j["pretrain"] = to_json(run.pretrain);
    Json r;
    r["optimizer"] = to_string(run.optimizer);
    r["epochs"] = run.epochs;
    r["batch_size"] = run.batch_size;
    r["seed"] = run.seed;
    r["data_fraction"] = run.data_fraction;
    r["reinit_head"] = run.reinit_head;
    j["run"] = std::move(r);
    Json opt = to_json(run.pats);
    opt["noisytune_intensity"] = run.noisytune_intensity;
    j["optimizer"] = std::move(opt);
    j["report"] = to_json(run.report);
    return j;
}

namespace {

PatsConfig preset_config(const std::string& name, const std::string& path)
{
    if (name == "paper-defaults") {
        return paper_defaults();
    }
    if (name == "no-noise") {
        PatsConfig c = paper_defaults();
        c.lambda = 0.0;
        return c;
    }
    throw ConfigError("'" + path + "': unknown preset '" + name + "' (expected paper-defaults or no-noise)");
}

} // namespace

RunSpec run_spec_from_json(const Json& j)
{
    RunSpec run;
    ObjectReader top(j, "");
    top.read("name", run.name);
    if (const Json* m = top.take("model")) {
        run.model = model_spec_from_json(*m, "model");
    }
    if (const Json* t = top.take("task")) {
        run.task = task_spec_from_json(*t, "task");
    }
    if (const Json* p = top.take("pretrain")) {
        run.pretrain = pretrain_from_json(*p, "pretrain");
    }
    if (const Json* rj = top.take("run")) {
        ObjectReader r(*rj, "run");
        r.read_enum("optimizer", run.optimizer, parse_optimizer);
        r.read("epochs", run.epochs);
        r.read("batch_size", run.batch_size);
        r.read_u64("seed", run.seed);
        r.read("data_fraction", run.data_fraction);
        r.read("reinit_head", run.reinit_head);
        r.finish();
    }
    if (const Json* oj = top.take("optimizer")) {
        ObjectReader r(*oj, "optimizer");
        std::string preset;
        r.read("preset", preset);
        PatsConfig& c = run.pats;
        if (!preset.empty()) {
            c = preset_config(preset, r.key_path("preset"));
        }
        r.read("lr", c.lr);
        r.read("beta1", c.beta1);
        r.read("beta2", c.beta2);
        r.read("beta", c.beta);
        r.read("lambda", c.lambda);
        r.read("gamma", c.gamma);
        r.read("eps", c.eps);
        r.read("p", c.p);
        r.read("adamax_eps", c.adamax_eps);
        r.read("warmup_fraction", c.warmup_fraction);
        r.read_enum("eps_placement", c.eps_placement, parse_eps_placement);
        r.read("noisytune_intensity", run.noisytune_intensity);
        r.finish();
    }
    if (const Json* rj = top.take("report")) {
        run.report = report_options_from_json(*rj, "report");
    }
    top.finish();
    return run;
}

} // namespace pats

#include "pats/checkpoint.hpp"

#include "pats/errors.hpp"
#include "pats/io.hpp"
#include "pats/serialization.hpp"

namespace pats {

namespace {

constexpr const char* format_tag = "pats-checkpoint";

std::vector<double> to_vector(const Tensor& t)
{
    return {t.values().begin(), t.values().end()};
}

Tensor tensor_from(const Json& values, const Shape& shape, const std::string& what)
{
    auto data = values.get<std::vector<double>>();
    if (data.size() != shape_size(shape)) {
        throw IoError("checkpoint " + what + " has " + std::to_string(data.size()) + " values for shape " +
                      shape_to_string(shape));
    }
    return Tensor(shape, std::move(data));
}

} // namespace

std::string checkpoint_to_string(const Model& model, std::size_t step)
{
    Json j;
    j["format"] = format_tag;
    j["schema_version"] = schema_version;
    j["seed"] = model.spec().init_seed;
    j["step"] = step;
    j["model"] = to_json(model.spec());
    Json groups = Json::array();
    for (const auto& g : model.groups()) {
        Json e;
        e["name"] = g.name;
        e["shape"] = g.weights.shape();
        e["perturbable"] = g.perturbable;
        e["values"] = to_vector(g.weights);
        e["m"] = to_vector(g.m);
        e["u"] = to_vector(g.u);
        e["s"] = to_vector(g.s);
        groups.push_back(std::move(e));
    }
    j["groups"] = std::move(groups);
    return j.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text)
{
    try {
        const Json j = Json::parse(text);
        if (j.value("format", "") != format_tag) {
            throw IoError("not a checkpoint (missing format tag)");
        }
        if (j.at("schema_version").get<int>() != schema_version) {
            throw IoError("unsupported checkpoint schema_version " + j.at("schema_version").dump());
        }
        const ModelSpec spec = model_spec_from_json(j.at("model"), "model");
        // The fresh model fixes the expected group layout.
        Model reference = build_model(spec);
        const Json& groups = j.at("groups");
        if (groups.size() != reference.groups().size()) {
            throw IoError("checkpoint has " + std::to_string(groups.size()) + " groups, spec implies " +
                          std::to_string(reference.groups().size()));
        }
        std::vector<ParamGroup> loaded;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            const Json& e = groups[i];
            const ParamGroup& expected = reference.groups()[i];
            const auto name = e.at("name").get<std::string>();
            const auto shape = e.at("shape").get<Shape>();
            if (name != expected.name || shape != expected.weights.shape()) {
                throw IoError("checkpoint group " + std::to_string(i) + " is " + name + shape_to_string(shape) +
                              ", expected " + expected.name + shape_to_string(expected.weights.shape()));
            }
            ParamGroup g(name, tensor_from(e.at("values"), shape, name), e.at("perturbable").get<bool>());
            g.m = tensor_from(e.at("m"), shape, name + ".m");
            g.u = tensor_from(e.at("u"), shape, name + ".u");
            g.s = tensor_from(e.at("s"), shape, name + ".s");
            loaded.push_back(std::move(g));
        }
        return Checkpoint{Model(spec, std::move(loaded)), j.at("step").get<std::size_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ConfigError& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    } catch (const SpecError& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, std::size_t step)
{
    atomic_write(path, checkpoint_to_string(model, step));
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    try {
        return checkpoint_from_string(read_text(path));
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace pats

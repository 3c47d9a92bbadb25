#include "pats/config.hpp"

#include "pats/errors.hpp"
#include "pats/io.hpp"

#include <yaml-cpp/yaml.h>

#include <cerrno>
#include <cstdlib>
#include <regex>

namespace pats {

namespace {

Json scalar_to_json(const YAML::Node& node)
{
    const std::string text = node.Scalar();
    if (node.Tag() == "!") {
        return text; // quoted
    }
    if (text.empty() || text == "~" || text == "null") {
        return nullptr;
    }
    if (text == "true") {
        return true;
    }
    if (text == "false") {
        return false;
    }
    static const std::regex integer(R"(^[+-]?[0-9]+$)");
    if (std::regex_match(text, integer)) {
        errno = 0;
        if (text[0] == '-') {
            const long long v = std::strtoll(text.c_str(), nullptr, 10);
            if (errno == 0) {
                return v;
            }
        } else {
            const unsigned long long v = std::strtoull(text.c_str(), nullptr, 10);
            if (errno == 0) {
                return static_cast<std::uint64_t>(v);
            }
        }
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() && *end == '\0') {
        return v;
    }
    return text;
}

Json node_to_json(const YAML::Node& node)
{
    switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
        return nullptr;
    case YAML::NodeType::Scalar:
        return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
        Json arr = Json::array();
        for (const auto& e : node) {
            arr.push_back(node_to_json(e));
        }
        return arr;
    }
    case YAML::NodeType::Map: {
        Json obj = Json::object();
        for (const auto& kv : node) {
            obj[kv.first.as<std::string>()] = node_to_json(kv.second);
        }
        return obj;
    }
    }
    return nullptr;
}

void emit(YAML::Emitter& out, const Json& j)
{
    if (j.is_object()) {
        out << YAML::BeginMap;
        for (const auto& [key, value] : j.items()) {
            out << YAML::Key << key << YAML::Value;
            emit(out, value);
        }
        out << YAML::EndMap;
    } else if (j.is_array()) {
        out << YAML::Flow << YAML::BeginSeq;
        for (const auto& e : j) {
            emit(out, e);
        }
        out << YAML::EndSeq;
    } else if (j.is_null()) {
        out << YAML::Null;
    } else if (j.is_boolean()) {
        out << (j.get<bool>() ? "true" : "false");
    } else if (j.is_number_float()) {
        out << format_double(j.get<double>());
    } else if (j.is_number()) {
        out << j.dump();
    } else {
        out << j.get<std::string>();
    }
}

} // namespace

Json yaml_to_json(const std::string& yaml_text)
{
    try {
        const YAML::Node root = YAML::Load(yaml_text);
        if (!root.IsDefined() || root.IsNull()) {
            return Json::object();
        }
        return node_to_json(root);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed YAML: ") + e.what());
    }
}

std::string json_to_yaml(const Json& j)
{
    YAML::Emitter out;
    emit(out, j);
    return std::string(out.c_str()) + "\n";
}

RunSpec parse_run_file(const std::string& yaml_text)
{
    return run_spec_from_json(yaml_to_json(yaml_text));
}

RunSpec load_run_file(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_text(path);
    } catch (const IoError&) {
        throw ConfigError("cannot read run file " + path.string());
    }
    try {
        return parse_run_file(text);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string print_run_file(const RunSpec& run)
{
    return json_to_yaml(to_json(run));
}

const std::vector<SearchGrid>& search_grids()
{
    static const std::vector<SearchGrid> grids{
        {"lambda", {5e-7, 8e-7, 1e-6, 2e-6, 3e-6}},
        {"gamma", {1e-3, 2e-3, 3e-3, 5e-3, 8e-3, 2e-2}},
        {"beta", {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85}},
        {"lr", {1e-5, 3e-5, 5e-5, 7e-5, 8e-5, 1e-4, 2e-4, 3e-4, 5e-4}},
    };
    return grids;
}

std::string presets_yaml()
{
    Json j;
    Json presets;
    presets["paper-defaults"] = to_json(paper_defaults());
    PatsConfig silent = paper_defaults();
    silent.lambda = 0.0;
    presets["no-noise"] = to_json(silent);
    j["presets"] = std::move(presets);
    Json grids;
    for (const auto& g : search_grids()) {
        grids[g.name] = g.values;
    }
    j["search_grids"] = std::move(grids);
    return json_to_yaml(j);
}

} // namespace pats

#include "grpolab/config.hpp"

#include <cctype>
#include <cstdlib>
#include <string>

#include <nlohmann/json.hpp>

#include "grpolab/errors.hpp"
#include "grpolab/io.hpp"
#include "grpolab/text.hpp"

#include "config_json.hpp"

namespace grpolab {

namespace {

using nlohmann::json;

std::string env_name_for(const std::string& dotted) {
    std::string name = "GRPOLAB_";
    for (char c : dotted) {
        if (c == '.') {
            name.push_back('_');
        } else {
            name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    return name;
}

json parse_env_value(const std::string& value, const json& current, const std::string& dotted) {
    const std::string what = env_name_for(dotted);
    try {
        if (current.is_string()) return json(value);
        if (current.is_boolean()) {
            const std::string lowered = to_lower(value);
            if (lowered == "true" || lowered == "1") return json(true);
            if (lowered == "false" || lowered == "0") return json(false);
            throw ConfigError(what + ": expected a boolean, got \"" + value + "\"");
        }
        json parsed = json::parse(value);
        if (current.is_number_integer() && !parsed.is_number_integer()) {
            throw ConfigError(what + ": expected an integer, got \"" + value + "\"");
        }
        if (current.is_number() && !parsed.is_number()) {
            throw ConfigError(what + ": expected a number, got \"" + value + "\"");
        }
        return parsed;
    } catch (const json::exception&) {
        throw ConfigError(what + ": could not parse \"" + value + "\"");
    }
}

void apply_env_tree(json& node, const std::string& prefix) {
    for (auto& [key, value] : node.items()) {
        const std::string dotted = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            apply_env_tree(value, dotted);
            continue;
        }
        const char* raw = std::getenv(env_name_for(dotted).c_str());
        if (raw == nullptr) continue;
        value = parse_env_value(raw, value, dotted);
    }
}

}  // namespace

void RunConfig::validate() const {
    if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
    datagen.validate();
    embedding.validate();
    if (policy.vocab_size != 0) policy.validate();
    sampling.validate();
    align.validate();
    sft.validate();
    grpo.validate();
    if (policy.feature_a_dim != datagen.feature_a_dim ||
        policy.feature_b_dim != datagen.feature_b_dim) {
        throw ConfigError("policy feature dimensions must match the data generator");
    }
}

std::string run_config_to_json(const RunConfig& config) {
    return detail::run_config_to_json_obj(config).dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& content) {
    json j;
    try {
        j = json::parse(content);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return detail::run_config_from_json_obj(j);
}

RunConfig load_run_config(const std::string& path) {
    try {
        return run_config_from_json(read_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void apply_env_overrides(RunConfig& config) {
    json tree = detail::run_config_to_json_obj(config);
    apply_env_tree(tree, "");
    config = detail::run_config_from_json_obj(tree);
}

}  // namespace grpolab

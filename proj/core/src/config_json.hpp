#pragma once

#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "grpolab/config.hpp"
#include "grpolab/errors.hpp"

namespace grpolab::detail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline json datagen_to_json(const DatagenConfig& c) {
    return json{{"slides", c.slides},
                {"patches_per_slide", c.patches_per_slide},
                {"class_count", c.class_count},
                {"noise", c.noise},
                {"feature_a_dim", c.feature_a_dim},
                {"feature_b_dim", c.feature_b_dim},
                {"pretrain_per_slide", c.pretrain_per_slide},
                {"sft_per_slide", c.sft_per_slide},
                {"rl_count", c.rl_count},
                {"eval_fraction", c.eval_fraction},
                {"mcq_options", c.mcq_options},
                {"truefalse_fraction", c.truefalse_fraction},
                {"corruption_rate", c.corruption_rate},
                {"analysis_clauses", c.analysis_clauses},
                {"cold_start_k", c.cold_start_k}};
}

inline DatagenConfig datagen_from_json(const json& j, const std::string& where) {
    check_keys(j,
               {"slides", "patches_per_slide", "class_count", "noise", "feature_a_dim",
                "feature_b_dim", "pretrain_per_slide", "sft_per_slide", "rl_count",
                "eval_fraction", "mcq_options", "truefalse_fraction", "corruption_rate",
                "analysis_clauses", "cold_start_k"},
               where);
    DatagenConfig c;
    read_field(j, "slides", c.slides, where);
    read_field(j, "patches_per_slide", c.patches_per_slide, where);
    read_field(j, "class_count", c.class_count, where);
    read_field(j, "noise", c.noise, where);
    read_field(j, "feature_a_dim", c.feature_a_dim, where);
    read_field(j, "feature_b_dim", c.feature_b_dim, where);
    read_field(j, "pretrain_per_slide", c.pretrain_per_slide, where);
    read_field(j, "sft_per_slide", c.sft_per_slide, where);
    read_field(j, "rl_count", c.rl_count, where);
    read_field(j, "eval_fraction", c.eval_fraction, where);
    read_field(j, "mcq_options", c.mcq_options, where);
    read_field(j, "truefalse_fraction", c.truefalse_fraction, where);
    read_field(j, "corruption_rate", c.corruption_rate, where);
    read_field(j, "analysis_clauses", c.analysis_clauses, where);
    read_field(j, "cold_start_k", c.cold_start_k, where);
    return c;
}

inline json embedding_to_json(const EmbeddingConfig& c) {
    return json{{"dimension", c.dimension},
                {"seed", c.seed},
                {"backend", c.backend == EmbeddingBackend::remote ? "remote" : "reference"},
                {"remote_endpoint", c.remote_endpoint},
                {"timeout_ms", c.timeout_ms},
                {"max_retries", c.max_retries}};
}

inline EmbeddingConfig embedding_from_json(const json& j, const std::string& where) {
    check_keys(j, {"dimension", "seed", "backend", "remote_endpoint", "timeout_ms", "max_retries"},
               where);
    EmbeddingConfig c;
    read_field(j, "dimension", c.dimension, where);
    read_field(j, "seed", c.seed, where);
    std::string backend = "reference";
    read_field(j, "backend", backend, where);
    if (backend == "reference") {
        c.backend = EmbeddingBackend::reference;
    } else if (backend == "remote") {
        c.backend = EmbeddingBackend::remote;
    } else {
        throw ConfigError(where + ".backend: expected \"reference\" or \"remote\"");
    }
    read_field(j, "remote_endpoint", c.remote_endpoint, where);
    read_field(j, "timeout_ms", c.timeout_ms, where);
    read_field(j, "max_retries", c.max_retries, where);
    return c;
}

inline json policy_to_json(const PolicyConfig& c) {
    return json{{"vocab_size", c.vocab_size},
                {"embed_dim", c.embed_dim},
                {"hidden_dim", c.hidden_dim},
                {"proj_hidden_dim", c.proj_hidden_dim},
                {"feature_a_dim", c.feature_a_dim},
                {"feature_b_dim", c.feature_b_dim},
                {"adapter", json{{"enabled", c.adapter.enabled},
                                 {"rank", c.adapter.rank},
                                 {"alpha", c.adapter.alpha}}}};
}

inline PolicyConfig policy_from_json(const json& j, const std::string& where) {
    check_keys(j,
               {"vocab_size", "embed_dim", "hidden_dim", "proj_hidden_dim", "feature_a_dim",
                "feature_b_dim", "adapter"},
               where);
    PolicyConfig c;
    read_field(j, "vocab_size", c.vocab_size, where);
    read_field(j, "embed_dim", c.embed_dim, where);
    read_field(j, "hidden_dim", c.hidden_dim, where);
    read_field(j, "proj_hidden_dim", c.proj_hidden_dim, where);
    read_field(j, "feature_a_dim", c.feature_a_dim, where);
    read_field(j, "feature_b_dim", c.feature_b_dim, where);
    if (j.contains("adapter")) {
        const json& a = j.at("adapter");
        check_keys(a, {"enabled", "rank", "alpha"}, where + ".adapter");
        read_field(a, "enabled", c.adapter.enabled, where + ".adapter");
        read_field(a, "rank", c.adapter.rank, where + ".adapter");
        read_field(a, "alpha", c.adapter.alpha, where + ".adapter");
    }
    return c;
}

inline json sampling_to_json(const SamplingConfig& c) {
    return json{{"temperature", c.temperature}, {"max_len", c.max_len}};
}

inline SamplingConfig sampling_from_json(const json& j, const std::string& where) {
    check_keys(j, {"temperature", "max_len"}, where);
    SamplingConfig c;
    read_field(j, "temperature", c.temperature, where);
    read_field(j, "max_len", c.max_len, where);
    return c;
}

inline json align_to_json(const AlignStageConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"steps", c.steps},
                {"batch_size", c.batch_size},
                {"seed", c.seed}};
}

inline AlignStageConfig align_from_json(const json& j, const std::string& where) {
    check_keys(j, {"learning_rate", "steps", "batch_size", "seed"}, where);
    AlignStageConfig c;
    read_field(j, "learning_rate", c.learning_rate, where);
    read_field(j, "steps", c.steps, where);
    read_field(j, "batch_size", c.batch_size, where);
    read_field(j, "seed", c.seed, where);
    return c;
}

inline json sft_to_json(const SftStageConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"max_grad_norm", c.max_grad_norm},
                {"seed", c.seed}};
}

inline SftStageConfig sft_from_json(const json& j, const std::string& where) {
    check_keys(j, {"learning_rate", "epochs", "batch_size", "max_grad_norm", "seed"}, where);
    SftStageConfig c;
    read_field(j, "learning_rate", c.learning_rate, where);
    read_field(j, "epochs", c.epochs, where);
    read_field(j, "batch_size", c.batch_size, where);
    read_field(j, "max_grad_norm", c.max_grad_norm, where);
    read_field(j, "seed", c.seed, where);
    return c;
}

inline json grpo_to_json(const GrpoConfig& c) {
    return json{{"group_size", c.group_size},
                {"clip_epsilon", c.clip_epsilon},
                {"kl_beta", c.kl_beta},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"max_steps", c.max_steps},
                {"inner_epochs", c.inner_epochs},
                {"std_epsilon", c.std_epsilon},
                {"seed", c.seed},
                {"use_semantic_reward", c.use_semantic_reward},
                {"max_grad_norm", c.max_grad_norm}};
}

inline GrpoConfig grpo_from_json(const json& j, const std::string& where) {
    check_keys(j,
               {"group_size", "clip_epsilon", "kl_beta", "learning_rate", "batch_size",
                "max_steps", "inner_epochs", "std_epsilon", "seed", "use_semantic_reward",
                "max_grad_norm"},
               where);
    GrpoConfig c;
    read_field(j, "group_size", c.group_size, where);
    read_field(j, "clip_epsilon", c.clip_epsilon, where);
    read_field(j, "kl_beta", c.kl_beta, where);
    read_field(j, "learning_rate", c.learning_rate, where);
    read_field(j, "batch_size", c.batch_size, where);
    read_field(j, "max_steps", c.max_steps, where);
    read_field(j, "inner_epochs", c.inner_epochs, where);
    read_field(j, "std_epsilon", c.std_epsilon, where);
    read_field(j, "seed", c.seed, where);
    read_field(j, "use_semantic_reward", c.use_semantic_reward, where);
    read_field(j, "max_grad_norm", c.max_grad_norm, where);
    return c;
}

inline json run_config_to_json_obj(const RunConfig& c) {
    return json{{"seed", c.seed},
                {"out_dir", c.out_dir},
                {"datagen", datagen_to_json(c.datagen)},
                {"embedding", embedding_to_json(c.embedding)},
                {"policy", policy_to_json(c.policy)},
                {"sampling", sampling_to_json(c.sampling)},
                {"align", align_to_json(c.align)},
                {"sft", sft_to_json(c.sft)},
                {"grpo", grpo_to_json(c.grpo)}};
}

inline RunConfig run_config_from_json_obj(const json& j) {
    check_keys(j, {"seed", "out_dir", "datagen", "embedding", "policy", "sampling", "align",
                   "sft", "grpo"},
               "config");
    RunConfig c;
    read_field(j, "seed", c.seed, "config");
    read_field(j, "out_dir", c.out_dir, "config");
    if (j.contains("datagen")) c.datagen = datagen_from_json(j.at("datagen"), "config.datagen");
    if (j.contains("embedding")) {
        c.embedding = embedding_from_json(j.at("embedding"), "config.embedding");
    }
    if (j.contains("policy")) c.policy = policy_from_json(j.at("policy"), "config.policy");
    if (j.contains("sampling")) c.sampling = sampling_from_json(j.at("sampling"), "config.sampling");
    if (j.contains("align")) c.align = align_from_json(j.at("align"), "config.align");
    if (j.contains("sft")) c.sft = sft_from_json(j.at("sft"), "config.sft");
    if (j.contains("grpo")) c.grpo = grpo_from_json(j.at("grpo"), "config.grpo");
    return c;
}

}  // namespace grpolab::detail

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grpolab/rewards.hpp"
#include "grpolab/vocab.hpp"

namespace grpolab {

struct DatagenConfig {
    int slides = 50;
    int patches_per_slide = 100;
    int class_count = 4;
    double noise = 0.1;
    int feature_a_dim = 8;
    int feature_b_dim = 8;
    int pretrain_per_slide = 100;
    int sft_per_slide = 10;
    int rl_count = 600;
    double eval_fraction = 0.2;
    int mcq_options = 4;
    double truefalse_fraction = 0.5;
    double corruption_rate = 0.5;
    int analysis_clauses = 8;
    int cold_start_k = 200;

    void validate() const;
};

struct SlidePatch {
    int patch_id = 0;
    int class_id = 0;
    std::string description;
    std::vector<double> feature_a;
    std::vector<double> feature_b;
};

struct SyntheticSlide {
    int slide_id = 0;
    std::vector<SlidePatch> patches;
};

struct World {
    DatagenConfig config;
    std::uint64_t seed = 0;
    std::vector<std::string> class_names;
    std::vector<std::vector<double>> centroid_a;  // per class
    std::vector<std::vector<double>> centroid_b;
    std::vector<SyntheticSlide> slides;
};

/// The built-in tissue class vocabulary; class_count must not exceed it.
const std::vector<std::string>& tissue_class_names();

/// The fixed category tags, in their canonical order.
const std::vector<std::string>& category_tags();

/// Built-in generic caption questions attached to pretrain pairs.
const std::vector<std::string>& pretrain_questions();

World generate_world(std::uint64_t seed, const DatagenConfig& config);

struct PretrainPair {
    std::string pair_id;
    int slide_id = 0;
    int patch_id = 0;
    std::vector<double> feature_a;
    std::vector<double> feature_b;
    std::string question;
    std::string caption;
};

/// Up to pretrain_per_slide patches per slide, sampled without replacement.
std::vector<PretrainPair> build_pretrain_pool(const World& world, std::uint64_t seed);

struct QARecord {
    std::string record_id;
    int slide_id = 0;
    int patch_id = 0;
    std::vector<int> prompt_token_ids;  // filled once the vocabulary exists
    std::vector<double> feature_a;
    std::vector<double> feature_b;
    std::string question;
    std::vector<std::string> answer_space;
    GoldAnswer gold;
    std::string category;
    std::string split;  // pretrain | sft | rl | eval
};

/// sft_per_slide records per slide with three-section gold answers,
/// categories assigned round-robin within each slide. Patches already in
/// the pretrain pool are avoided when enough others remain.
std::vector<QARecord> build_sft_set(const World& world, const std::vector<PretrainPair>& pool,
                                    std::uint64_t seed);

/// rl_count multiple-choice / true-false records, split into "rl" and
/// "eval" tags at eval_fraction after a seeded shuffle.
std::vector<QARecord> build_rl_set(const World& world, std::uint64_t seed,
                                   const DatagenConfig& config);

/// Per-category balanced pick of the longest gold answers: each category
/// contributes floor(k/C) records, plus one more for the first k mod C
/// categories in canonical tag order; ties broken by record id. Throws if
/// k exceeds the set size.
std::vector<QARecord> curate_cold_start(const std::vector<QARecord>& sft_set, int k);

struct DatasetBundle {
    World world;
    Vocabulary vocab;
    std::vector<PretrainPair> pretrain;
    std::vector<QARecord> sft;
    std::vector<QARecord> rl;    // split == "rl"
    std::vector<QARecord> eval;  // split == "eval"
    std::vector<QARecord> cold;  // curated cold-start subset of sft
};

/// Full pipeline: world, pools, vocabulary over every generated text, and
/// prompt token ids filled in. Deterministic given (seed, config).
DatasetBundle build_datasets(std::uint64_t seed, const DatagenConfig& config);

}  // namespace grpolab

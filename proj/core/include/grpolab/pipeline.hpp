#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "grpolab/config.hpp"
#include "grpolab/dataset_io.hpp"
#include "grpolab/eval.hpp"
#include "grpolab/grpo.hpp"

namespace grpolab {

/// Artifact locations, all under the run's output directory.
struct RunPaths {
    std::string out_dir;

    std::string data_dir() const;
    std::string pretrain_file() const;
    std::string sft_file() const;
    std::string rl_file() const;
    std::string eval_file() const;
    std::string vocab_file() const;
    std::string manifest_file() const;
    std::string align_checkpoint() const;
    std::string sft_checkpoint() const;
    std::string grpo_checkpoint() const;
    std::string align_report() const;
    std::string sft_report() const;
    std::string grpo_report() const;
    std::string eval_report() const;
};

enum class Stage { align, sft, grpo, all };

Stage parse_stage(const std::string& name);

struct GenDataSummary {
    DatasetManifest manifest;
    std::vector<std::pair<std::string, int>> category_counts;
    int vocab_size = 0;
};

GenDataSummary run_gen_data(const RunConfig& config);

struct StageSummary {
    std::string stage;
    std::string checkpoint_path;
    StepRecord final_step;
};

/// Runs the requested stage(s). sft requires the align checkpoint unless
/// from_scratch; grpo requires the sft checkpoint. Progress goes through
/// on_step when provided.
std::vector<StageSummary> run_train(const RunConfig& config, Stage stage, bool from_scratch,
                                    const std::function<bool(const std::string&,
                                                             const StepRecord&)>& on_step = {});

EvalReport run_eval(const RunConfig& config, const std::string& checkpoint_path);

/// Scores candidate lines against gold records; returns printable per-pair
/// breakdown lines. Gold rows are JSON objects with observation,
/// conclusion_label, answer_space and optional full_text.
std::vector<std::string> run_reward_check(const std::string& candidates_path,
                                          const std::string& golds_path,
                                          const RunConfig& config);

}  // namespace grpolab

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "grpolab/embedding.hpp"
#include "grpolab/policy.hpp"
#include "grpolab/rewards.hpp"
#include "grpolab/vocab.hpp"

namespace grpolab {

struct QARecord;

struct SamplingConfig {
    double temperature = 1.0;
    int max_len = 48;

    void validate() const;
};

struct GrpoConfig {
    int group_size = 4;
    double clip_epsilon = 0.2;
    double kl_beta = 0.04;
    double learning_rate = 2e-4;
    int batch_size = 32;
    int max_steps = 500;
    int inner_epochs = 1;
    double std_epsilon = 1e-8;
    std::uint64_t seed = 0;
    bool use_semantic_reward = true;
    // Ascent steps rescale to this global norm when exceeded; <= 0 disables.
    // Sequence-level gradients through the recurrence occasionally explode,
    // and one unclipped step can destroy the policy.
    double max_grad_norm = 5.0;

    void validate() const;
};

/// Rewards of one candidate group with their normalized advantages:
/// a_i = (r_i - mean) / (population std + std_epsilon). A group whose
/// rewards are all equal gets all-zero advantages.
struct AdvantageGroup {
    std::vector<double> rewards;
    std::vector<double> advantages;
    double mean = 0.0;
    double stddev = 0.0;  // population
};

AdvantageGroup normalize_advantages(const std::vector<double>& rewards, double std_epsilon);

/// Per-sequence estimator exp(d) - d - 1 with d = logprob_ref - logprob_new.
/// Nonnegative for every finite d; zero iff the two log-probabilities agree.
double kl_estimate(double logprob_new, double logprob_ref);

struct Candidate {
    std::vector<int> tokens;
    double logprob_old = std::numeric_limits<double>::quiet_NaN();
    double logprob_ref = std::numeric_limits<double>::quiet_NaN();
    double reward = 0.0;
    double advantage = 0.0;
    std::string text;
    RewardBreakdown breakdown;
};

struct RolloutGroup {
    PromptContext ctx;
    std::vector<Candidate> candidates;
};

struct CandidateDiagnostics {
    double ratio = 0.0;          // exp(lp_new - lp_old)
    double clipped_ratio = 0.0;  // ratio clamped to [1 - eps, 1 + eps]
    double kl = 0.0;
    bool clip_active = false;    // min() selected the clipped branch
};

struct ObjectiveResult {
    double objective = 0.0;
    double mean_kl = 0.0;
    std::vector<double> gradient;  // d objective / d flat params; ascent direction
    std::vector<CandidateDiagnostics> diagnostics;  // batch order, candidates within group
};

/// Clipped surrogate with a KL penalty, averaged per group and then across
/// groups. Candidates must carry finite logprob_old / logprob_ref and a
/// normalized advantage; anything else is a caller bug and throws. The
/// clipped branch contributes zero policy gradient; the KL penalty
/// contributes beta * (exp(lp_ref - lp_new) - 1) times the logprob gradient.
ObjectiveResult grpo_objective(const PolicyParams& params,
                               const std::vector<RolloutGroup>& groups,
                               const GrpoConfig& config,
                               bool with_gradient = true);

/// One row of training telemetry. loss mirrors the supervised objective for
/// the align and cold-start stages and stays zero for the policy stage.
struct StepRecord {
    int step = 0;
    double mean_reward = 0.0;
    double mean_format = 0.0;
    double mean_accuracy = 0.0;
    double mean_semantic = 0.0;
    double format_rate = 0.0;
    double mean_kl = 0.0;
    double objective = 0.0;
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainReport {
    std::vector<StepRecord> steps;

    /// One JSON object per step with fields step, mean_reward, mean_format,
    /// mean_accuracy, mean_semantic, format_rate, mean_kl, objective, lr.
    std::string to_jsonl() const;
    void write_jsonl(const std::string& path) const;
};

struct AlignStageConfig {
    double learning_rate = 5e-2;
    int steps = 300;
    int batch_size = 32;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SftStageConfig {
    double learning_rate = 0.1;
    int epochs = 40;
    int batch_size = 16;
    // Descent steps rescale to this global norm when exceeded; <= 0 disables.
    double max_grad_norm = 5.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AlignPair {
    std::vector<double> feature_a;
    std::vector<double> feature_b;
    std::string caption;
};

struct SftExample {
    PromptContext ctx;
    std::vector<int> target;  // answer tokens ending in <eos>
};

struct SftLoss {
    double loss = 0.0;             // mean per-token negative log-likelihood
    std::vector<double> gradient;  // d loss / d flat params (descent direction)
};

SftLoss sft_loss(const PolicyParams& params, const std::vector<SftExample>& batch);

/// Alignment loss 1 - cosine(projector(fused features), M * E(caption))
/// averaged over the batch, where M is a fixed seeded projection into the
/// hidden dimension. The gradient is exactly zero outside the projector
/// segments.
struct AlignLoss {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// The fixed hidden_dim x embed-dimension caption projection used by the
/// alignment stage, derived from the stage seed.
std::vector<double> align_caption_projection(int hidden_dim, int embed_dim, std::uint64_t seed);

AlignLoss align_loss(const PolicyParams& params, const std::vector<AlignPair>& batch,
                     const Embedder& embedder, const std::vector<double>& caption_projection);

/// Stage 1: trains only the projector; all other parameters come back
/// bit-identical.
TrainReport align_train(const std::vector<AlignPair>& pairs, PolicyParams& params,
                        const Embedder& embedder, const AlignStageConfig& config);

/// Stage 2: teacher-forced cross-entropy over curated structured answers;
/// the full parameter vector trains.
TrainReport sft_train(const std::vector<SftExample>& examples, PolicyParams& params,
                      const SftStageConfig& config);

struct GrpoTrainOptions {
    GrpoConfig grpo;
    SamplingConfig sampling;
    // Invoked after every step; return false to stop early.
    std::function<bool(const StepRecord&)> on_step;
};

/// Stage 3: group-relative policy optimization over question records. The
/// reference policy is a frozen copy of `params` at entry; the behavior
/// snapshot refreshes every batch. Plain gradient ascent with a cosine-
/// decayed step size.
TrainReport grpo_train(const std::vector<QARecord>& records, PolicyParams& params,
                       const Vocabulary& vocab, const Embedder& embedder,
                       const GrpoTrainOptions& options);

}  // namespace grpolab

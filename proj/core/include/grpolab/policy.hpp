#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace grpolab {

struct AdapterConfig {
    bool enabled = false;
    int rank = 4;
    double alpha = 8.0;

    bool operator==(const AdapterConfig&) const = default;
};

struct PolicyConfig {
    int vocab_size = 0;
    int embed_dim = 16;
    int hidden_dim = 32;
    int proj_hidden_dim = 32;
    int feature_a_dim = 8;
    int feature_b_dim = 8;
    AdapterConfig adapter;

    int fused_dim() const { return feature_a_dim + feature_b_dim; }
    void validate() const;  // throws ConfigError

    bool operator==(const PolicyConfig&) const = default;
};

/// Byte layout of the flat parameter vector: named segments in a fixed
/// order. Bias segments have cols == 1.
struct ParamLayout {
    struct Segment {
        std::string name;
        std::size_t offset = 0;
        int rows = 0;
        int cols = 0;
        std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
    };

    std::vector<Segment> segments;
    std::size_t total = 0;

    static ParamLayout create(const PolicyConfig& config);
    const Segment& find(std::string_view name) const;
    bool has(std::string_view name) const;
};

/// All trainable parameters as one flat vector plus named span views.
struct PolicyParams {
    PolicyConfig config;
    ParamLayout layout;
    std::vector<double> flat;

    std::span<double> segment(std::string_view name);
    std::span<const double> segment(std::string_view name) const;

    std::span<const double> token_embedding() const { return segment("token_embedding"); }
    std::span<const double> recur_w() const { return segment("recur_w"); }
    std::span<const double> recur_b() const { return segment("recur_b"); }
    std::span<const double> out_w() const { return segment("out_w"); }
    std::span<const double> out_b() const { return segment("out_b"); }
    std::span<const double> proj1_w() const { return segment("proj1_w"); }
    std::span<const double> proj1_b() const { return segment("proj1_b"); }
    std::span<const double> proj2_w() const { return segment("proj2_w"); }
    std::span<const double> proj2_b() const { return segment("proj2_b"); }

    bool all_finite() const;
};

/// Structured copy of the parameters, one vector per segment, in layout
/// order. flatten(unflatten(p)) reproduces the flat vector exactly.
struct PolicyTensors {
    std::vector<std::pair<std::string, std::vector<double>>> segments;
};

PolicyTensors unflatten(const PolicyParams& params);
std::vector<double> flatten(const PolicyTensors& tensors);

/// Prompt-side conditioning: token ids plus the two feature vectors
/// (global-semantic role and fine-grained role).
struct PromptContext {
    std::vector<int> prompt;
    std::vector<double> feature_a;
    std::vector<double> feature_b;
};

/// One sampled candidate. tokens ends with <eos> unless the length cap was
/// hit. per_token_logprob holds temperature-1 log-probabilities.
struct Rollout {
    std::vector<int> tokens;
    std::vector<double> per_token_logprob;
    double total_logprob = 0.0;
    std::string text;  // filled by callers that hold the vocabulary
};

/// Channel-wise concatenation [a ; b]. Dimensions are the caller's contract.
std::vector<double> fuse_features(std::span<const double> feature_a,
                                  std::span<const double> feature_b);

/// Two-layer projector into the policy hidden space:
/// h = W2 * tanh(W1 * fused + b1) + b2.
std::vector<double> project(std::span<const double> fused, const PolicyParams& params);

/// Seeded init: each weight matrix uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]
/// with fan_in = cols, biases zero, adapter B zero so the adapter delta
/// starts at exactly zero.
PolicyParams init_policy(const PolicyConfig& config, std::uint64_t seed);

/// Output projection with the low-rank delta applied:
/// base + (alpha/rank) * B * A (row-major vocab_size x hidden_dim).
std::vector<double> effective_output_weights(const PolicyParams& params);

struct SequenceLogprob {
    double total = 0.0;
    std::vector<double> per_token;
};

/// Log-probability of `tokens` under the policy given the context. The
/// fused features enter as the initial hidden state through the projector;
/// prompt tokens are consumed before the first candidate position.
SequenceLogprob sequence_logprob(const PolicyParams& params, const PromptContext& ctx,
                                 const std::vector<int>& tokens);

struct LogprobGradient {
    double total = 0.0;
    std::vector<double> per_token;
    std::vector<double> gradient;  // d total / d flat params
};

/// Exact gradient of the sequence log-probability via backprop through the
/// recurrence, output head (including adapter factors), embeddings and
/// projector.
LogprobGradient logprob_and_gradient(const PolicyParams& params, const PromptContext& ctx,
                                     const std::vector<int>& tokens);

/// Gradient-only convenience wrapper.
std::vector<double> logprob_gradient(const PolicyParams& params, const PromptContext& ctx,
                                     const std::vector<int>& tokens);

/// N ancestral samples at the given temperature. Sampling uses tempered
/// probabilities; the recorded log-probabilities are always temperature-1.
/// Deterministic given rng_seed (candidate i uses a derived stream).
std::vector<Rollout> sample_candidates(const PolicyParams& params, const PromptContext& ctx,
                                       int n, double temperature, int max_len, int eos_id,
                                       std::uint64_t rng_seed);

/// Argmax decoding (temperature-0 limit of sampling).
Rollout greedy_decode(const PolicyParams& params, const PromptContext& ctx, int max_len,
                      int eos_id);

}  // namespace grpolab

#include <benchmark/benchmark.h>

#include "grpolab/embedding.hpp"
#include "grpolab/grpo.hpp"
#include "grpolab/policy.hpp"
#include "grpolab/rewards.hpp"
#include "grpolab/rng.hpp"

namespace {

using namespace grpolab;

const std::string kAnswer =
    "[Observation] the patch shows dense basophilic nuclei with irregular chromatin "
    "and crowded glandular structures [Analysis] nuclear atypia and loss of polarity "
    "point to a malignant epithelial process [Conclusion] option b";

GoldAnswer make_gold() {
    GoldAnswer gold;
    gold.observation =
        "the patch shows dense basophilic nuclei with irregular chromatin and "
        "crowded glandular structures";
    gold.conclusion_label = "B";
    gold.full_text = kAnswer;
    return gold;
}

void bm_reference_embed(benchmark::State& state) {
    EmbeddingConfig config;
    ReferenceEmbedder embedder(config);
    for (auto _ : state) {
        benchmark::DoNotOptimize(embedder.embed(kAnswer));
    }
}
BENCHMARK(bm_reference_embed);

void bm_total_reward(benchmark::State& state) {
    EmbeddingConfig config;
    ReferenceEmbedder embedder(config);
    const GoldAnswer gold = make_gold();
    const std::vector<std::string> answer_space = {"A", "B", "C", "D"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(total_reward(kAnswer, gold, answer_space, embedder));
    }
}
BENCHMARK(bm_total_reward);

PolicyParams bench_params() {
    PolicyConfig config;
    config.vocab_size = 128;
    return init_policy(config, 7);
}

PromptContext bench_context() {
    PromptContext ctx;
    Rng rng(11);
    for (int i = 0; i < 12; ++i) ctx.prompt.push_back(static_cast<int>(rng.uniform_int(128)));
    for (int i = 0; i < 8; ++i) ctx.feature_a.push_back(rng.gaussian());
    for (int i = 0; i < 8; ++i) ctx.feature_b.push_back(rng.gaussian());
    return ctx;
}

void bm_sequence_logprob(benchmark::State& state) {
    const PolicyParams params = bench_params();
    const PromptContext ctx = bench_context();
    std::vector<int> tokens;
    Rng rng(13);
    for (int i = 0; i < 32; ++i) tokens.push_back(static_cast<int>(rng.uniform_int(128)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sequence_logprob(params, ctx, tokens));
    }
}
BENCHMARK(bm_sequence_logprob);

void bm_logprob_gradient(benchmark::State& state) {
    const PolicyParams params = bench_params();
    const PromptContext ctx = bench_context();
    std::vector<int> tokens;
    Rng rng(13);
    for (int i = 0; i < 32; ++i) tokens.push_back(static_cast<int>(rng.uniform_int(128)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(logprob_and_gradient(params, ctx, tokens));
    }
}
BENCHMARK(bm_logprob_gradient);

void bm_sample_candidates(benchmark::State& state) {
    const PolicyParams params = bench_params();
    const PromptContext ctx = bench_context();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_candidates(params, ctx, 4, 1.0, 48, 0, seed++));
    }
}
BENCHMARK(bm_sample_candidates);

}  // namespace

BENCHMARK_MAIN();

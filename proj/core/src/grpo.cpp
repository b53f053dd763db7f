#include "grpolab/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grpolab/datagen.hpp"
#include "grpolab/errors.hpp"
#include "grpolab/io.hpp"
#include "grpolab/rng.hpp"

namespace grpolab {

void SamplingConfig::validate() const {
    if (!(temperature > 0.0)) throw ConfigError("sampling temperature must be positive");
    if (max_len < 1) throw ConfigError("sampling max_len must be >= 1");
}

void GrpoConfig::validate() const {
    if (group_size < 1) throw ConfigError("group_size must be >= 1");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
        throw ConfigError("clip_epsilon must lie in (0, 1)");
    }
    if (kl_beta < 0.0) throw ConfigError("kl_beta must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (inner_epochs < 1) throw ConfigError("inner_epochs must be >= 1");
    if (!(std_epsilon > 0.0)) throw ConfigError("std_epsilon must be positive");
}

void AlignStageConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("align learning_rate must be positive");
    if (steps < 1) throw ConfigError("align steps must be >= 1");
    if (batch_size < 1) throw ConfigError("align batch_size must be >= 1");
}

void SftStageConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("sft learning_rate must be positive");
    if (epochs < 1) throw ConfigError("sft epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("sft batch_size must be >= 1");
}

AdvantageGroup normalize_advantages(const std::vector<double>& rewards, double std_epsilon) {
    if (rewards.empty()) throw Error("normalize_advantages: empty reward group");
    AdvantageGroup group;
    group.rewards = rewards;
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;
    group.mean = mean;
    group.stddev = std::sqrt(var);
    group.advantages.resize(rewards.size(), 0.0);
    if (group.stddev == 0.0) return group;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        group.advantages[i] = (rewards[i] - mean) / (group.stddev + std_epsilon);
    }
    return group;
}

double kl_estimate(double logprob_new, double logprob_ref) {
    const double d = logprob_ref - logprob_new;
    return std::exp(d) - d - 1.0;
}

ObjectiveResult grpo_objective(const PolicyParams& params,
                               const std::vector<RolloutGroup>& groups,
                               const GrpoConfig& config, bool with_gradient) {
    config.validate();
    if (groups.empty()) throw Error("grpo_objective: no groups");
    ObjectiveResult result;
    if (with_gradient) result.gradient.assign(params.flat.size(), 0.0);

    const double lo = 1.0 - config.clip_epsilon;
    const double hi = 1.0 + config.clip_epsilon;
    const double group_weight = 1.0 / static_cast<double>(groups.size());
    std::size_t candidate_count = 0;

    for (const RolloutGroup& group : groups) {
        if (group.candidates.empty()) throw Error("grpo_objective: empty candidate group");
        const double cand_weight = group_weight / static_cast<double>(group.candidates.size());
        for (const Candidate& cand : group.candidates) {
            if (!std::isfinite(cand.logprob_old) || !std::isfinite(cand.logprob_ref)) {
                throw Error("grpo_objective: candidate missing old or reference log-probability");
            }
            if (!std::isfinite(cand.advantage)) {
                throw Error("grpo_objective: candidate advantage not finite");
            }
            double lp_new;
            LogprobGradient lg;
            if (with_gradient) {
                lg = logprob_and_gradient(params, group.ctx, cand.tokens);
                lp_new = lg.total;
            } else {
                lp_new = sequence_logprob(params, group.ctx, cand.tokens).total;
            }

            const double s1 = std::exp(lp_new - cand.logprob_old);
            const double s2 = std::clamp(s1, lo, hi);
            const double a = cand.advantage;
            const double unclipped = s1 * a;
            const double clipped = s2 * a;
            const double surrogate = std::min(unclipped, clipped);
            const double kl = kl_estimate(lp_new, cand.logprob_ref);

            result.objective += cand_weight * (surrogate - config.kl_beta * kl);
            result.mean_kl += kl;
            result.diagnostics.push_back({s1, s2, kl, clipped < unclipped});
            ++candidate_count;

            if (with_gradient) {
                double coef = 0.0;
                if (unclipped <= clipped) coef += a * s1;
                coef += config.kl_beta * (std::exp(cand.logprob_ref - lp_new) - 1.0);
                coef *= cand_weight;
                if (coef != 0.0) {
                    for (std::size_t i = 0; i < result.gradient.size(); ++i) {
                        result.gradient[i] += coef * lg.gradient[i];
                    }
                }
            }
        }
    }
    result.mean_kl /= static_cast<double>(candidate_count);
    return result;
}

std::string TrainReport::to_jsonl() const {
    std::string out;
    for (const StepRecord& rec : steps) {
        nlohmann::json row{{"step", rec.step},
                           {"mean_reward", rec.mean_reward},
                           {"mean_format", rec.mean_format},
                           {"mean_accuracy", rec.mean_accuracy},
                           {"mean_semantic", rec.mean_semantic},
                           {"format_rate", rec.format_rate},
                           {"mean_kl", rec.mean_kl},
                           {"objective", rec.objective},
                           {"lr", rec.lr}};
        out += row.dump();
        out += '\n';
    }
    return out;
}

void TrainReport::write_jsonl(const std::string& path) const {
    atomic_write_file(path, to_jsonl());
}

namespace {

double cosine_lr(double base, int step_index, int total_steps) {
    const double t = static_cast<double>(step_index) / static_cast<double>(total_steps);
    return base * 0.5 * (1.0 + std::cos(t * 3.14159265358979323846));
}

// Cycles through a seeded reshuffled index order.
class BatchCycler {
public:
    BatchCycler(std::size_t n, std::uint64_t seed) : indices_(n), rng_(seed) {
        for (std::size_t i = 0; i < n; ++i) indices_[i] = i;
        pos_ = n;  // force a shuffle on first use
    }

    std::size_t next() {
        if (pos_ >= indices_.size()) {
            rng_.shuffle(indices_);
            pos_ = 0;
        }
        return indices_[pos_++];
    }

private:
    std::vector<std::size_t> indices_;
    Rng rng_;
    std::size_t pos_ = 0;
};

void check_finite(const PolicyParams& params, const char* stage, int step) {
    if (!params.all_finite()) {
        throw Error(std::string(stage) + ": non-finite parameters after step " +
                    std::to_string(step) + "; reduce the learning rate");
    }
}

}  // namespace

SftLoss sft_loss(const PolicyParams& params, const std::vector<SftExample>& batch) {
    if (batch.empty()) throw Error("sft_loss: empty batch");
    SftLoss out;
    out.gradient.assign(params.flat.size(), 0.0);
    std::size_t total_tokens = 0;
    for (const SftExample& ex : batch) total_tokens += ex.target.size();
    if (total_tokens == 0) throw Error("sft_loss: batch has no target tokens");
    const double scale = 1.0 / static_cast<double>(total_tokens);
    for (const SftExample& ex : batch) {
        LogprobGradient lg = logprob_and_gradient(params, ex.ctx, ex.target);
        out.loss -= scale * lg.total;
        for (std::size_t i = 0; i < out.gradient.size(); ++i) {
            out.gradient[i] -= scale * lg.gradient[i];
        }
    }
    return out;
}

std::vector<double> align_caption_projection(int hidden_dim, int embed_dim, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xCA9710A5ULL));
    std::vector<double> m(static_cast<std::size_t>(hidden_dim) *
                          static_cast<std::size_t>(embed_dim));
    const double bound = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    for (double& v : m) v = rng.uniform(-bound, bound);
    return m;
}

AlignLoss align_loss(const PolicyParams& params, const std::vector<AlignPair>& batch,
                     const Embedder& embedder, const std::vector<double>& caption_projection) {
    if (batch.empty()) throw Error("align_loss: empty batch");
    const int h = params.config.hidden_dim;
    const int ph = params.config.proj_hidden_dim;
    const int f = params.config.fused_dim();
    const int d = embedder.dimension();
    if (caption_projection.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(d)) {
        throw ConfigError("align_loss: caption projection has wrong shape");
    }

    AlignLoss out;
    out.gradient.assign(params.flat.size(), 0.0);
    const auto& layout = params.layout;
    const auto seg1w = layout.find("proj1_w");
    const auto seg1b = layout.find("proj1_b");
    const auto seg2w = layout.find("proj2_w");
    const auto seg2b = layout.find("proj2_b");
    const auto p1w = params.proj1_w();
    const auto p2w = params.proj2_w();
    const auto p1b = params.proj1_b();
    const auto p2b = params.proj2_b();

    const double batch_scale = 1.0 / static_cast<double>(batch.size());
    std::vector<double> act(static_cast<std::size_t>(ph));
    std::vector<double> p(static_cast<std::size_t>(h));
    std::vector<double> target(static_cast<std::size_t>(h));
    std::vector<double> dp(static_cast<std::size_t>(h));
    std::vector<double> dz(static_cast<std::size_t>(ph));

    for (const AlignPair& pair : batch) {
        if (static_cast<int>(pair.feature_a.size() + pair.feature_b.size()) != f) {
            throw ConfigError("align_loss: feature dimensions do not match the policy config");
        }
        std::vector<double> fused = fuse_features(pair.feature_a, pair.feature_b);
        for (int i = 0; i < ph; ++i) {
            double acc = p1b[static_cast<std::size_t>(i)];
            const double* row = p1w.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(f);
            for (int c = 0; c < f; ++c) acc += row[c] * fused[static_cast<std::size_t>(c)];
            act[static_cast<std::size_t>(i)] = std::tanh(acc);
        }
        for (int i = 0; i < h; ++i) {
            double acc = p2b[static_cast<std::size_t>(i)];
            const double* row = p2w.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(ph);
            for (int c = 0; c < ph; ++c) acc += row[c] * act[static_cast<std::size_t>(c)];
            p[static_cast<std::size_t>(i)] = acc;
        }

        const std::vector<double> emb = embedder.embed(pair.caption);
        for (int i = 0; i < h; ++i) {
            const double* row =
                caption_projection.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(d);
            double acc = 0.0;
            for (int c = 0; c < d; ++c) acc += row[c] * emb[static_cast<std::size_t>(c)];
            target[static_cast<std::size_t>(i)] = acc;
        }

        double pp = 0.0, tt = 0.0, pt = 0.0;
        for (int i = 0; i < h; ++i) {
            pp += p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i)];
            tt += target[static_cast<std::size_t>(i)] * target[static_cast<std::size_t>(i)];
            pt += p[static_cast<std::size_t>(i)] * target[static_cast<std::size_t>(i)];
        }
        const double pn = std::sqrt(pp);
        const double tn = std::sqrt(tt);
        if (pn == 0.0 || tn == 0.0) {
            out.loss += batch_scale;  // cosine defined as 0
            continue;
        }
        const double cos = pt / (pn * tn);
        out.loss += batch_scale * (1.0 - cos);

        // d(1 - cos)/dp = -(t/(|p||t|) - p * pt / (|p|^3 |t|))
        for (int i = 0; i < h; ++i) {
            dp[static_cast<std::size_t>(i)] =
                batch_scale * (p[static_cast<std::size_t>(i)] * pt / (pn * pn * pn * tn) -
                               target[static_cast<std::size_t>(i)] / (pn * tn));
        }

        double* g2w = out.gradient.data() + seg2w.offset;
        double* g2b = out.gradient.data() + seg2b.offset;
        std::fill(dz.begin(), dz.end(), 0.0);
        for (int i = 0; i < h; ++i) {
            const double di = dp[static_cast<std::size_t>(i)];
            g2b[i] += di;
            double* row = g2w + static_cast<std::size_t>(i) * static_cast<std::size_t>(ph);
            const double* wrow = p2w.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(ph);
            for (int c = 0; c < ph; ++c) {
                row[c] += di * act[static_cast<std::size_t>(c)];
                dz[static_cast<std::size_t>(c)] += di * wrow[c];
            }
        }
        double* g1w = out.gradient.data() + seg1w.offset;
        double* g1b = out.gradient.data() + seg1b.offset;
        for (int i = 0; i < ph; ++i) {
            const double a = act[static_cast<std::size_t>(i)];
            const double di = dz[static_cast<std::size_t>(i)] * (1.0 - a * a);
            g1b[i] += di;
            double* row = g1w + static_cast<std::size_t>(i) * static_cast<std::size_t>(f);
            for (int c = 0; c < f; ++c) row[c] += di * fused[static_cast<std::size_t>(c)];
        }
    }
    return out;
}

TrainReport align_train(const std::vector<AlignPair>& pairs, PolicyParams& params,
                        const Embedder& embedder, const AlignStageConfig& config) {
    config.validate();
    if (pairs.empty()) throw Error("align_train: empty pretrain pool");
    const std::vector<double> projection = align_caption_projection(
        params.config.hidden_dim, embedder.dimension(), config.seed);

    // Only these four segments move; the update loop never touches the rest.
    const char* projector_segments[] = {"proj1_w", "proj1_b", "proj2_w", "proj2_b"};

    TrainReport report;
    BatchCycler cycler(pairs.size(), derive_seed(config.seed, 0xA116E5ULL));
    std::vector<AlignPair> batch;
    for (int step = 0; step < config.steps; ++step) {
        const double lr = cosine_lr(config.learning_rate, step, config.steps);
        batch.clear();
        const int take = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), pairs.size()));
        for (int b = 0; b < take; ++b) batch.push_back(pairs[cycler.next()]);
        AlignLoss al = align_loss(params, batch, embedder, projection);
        for (const char* name : projector_segments) {
            const auto& seg = params.layout.find(name);
            for (std::size_t i = seg.offset; i < seg.offset + seg.size(); ++i) {
                params.flat[i] -= lr * al.gradient[i];
            }
        }
        check_finite(params, "align_train", step + 1);
        StepRecord rec;
        rec.step = step + 1;
        rec.loss = al.loss;
        rec.objective = -al.loss;
        rec.lr = lr;
        report.steps.push_back(rec);
    }
    return report;
}

TrainReport sft_train(const std::vector<SftExample>& examples, PolicyParams& params,
                      const SftStageConfig& config) {
    config.validate();
    if (examples.empty()) throw Error("sft_train: empty cold-start set");
    const std::size_t n = examples.size();
    const int batches_per_epoch =
        static_cast<int>((n + config.batch_size - 1) / static_cast<std::size_t>(config.batch_size));
    const int total_steps = config.epochs * batches_per_epoch;

    TrainReport report;
    Rng shuffle_rng(derive_seed(config.seed, 0x5F7AB1E5ULL));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    int step = 0;
    std::vector<SftExample> batch;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const double lr = cosine_lr(config.learning_rate, step, total_steps);
            batch.clear();
            const std::size_t stop = std::min(n, start + config.batch_size);
            for (std::size_t i = start; i < stop; ++i) batch.push_back(examples[order[i]]);
            SftLoss sl = sft_loss(params, batch);
            double scale = 1.0;
            if (config.max_grad_norm > 0.0) {
                double sq = 0.0;
                for (double g : sl.gradient) sq += g * g;
                const double norm = std::sqrt(sq);
                if (norm > config.max_grad_norm) scale = config.max_grad_norm / norm;
            }
            for (std::size_t i = 0; i < params.flat.size(); ++i) {
                params.flat[i] -= lr * scale * sl.gradient[i];
            }
            ++step;
            check_finite(params, "sft_train", step);
            StepRecord rec;
            rec.step = step;
            rec.loss = sl.loss;
            rec.objective = -sl.loss;
            rec.lr = lr;
            report.steps.push_back(rec);
        }
    }
    return report;
}

TrainReport grpo_train(const std::vector<QARecord>& records, PolicyParams& params,
                       const Vocabulary& vocab, const Embedder& embedder,
                       const GrpoTrainOptions& options) {
    const GrpoConfig& cfg = options.grpo;
    cfg.validate();
    options.sampling.validate();
    if (records.empty()) throw Error("grpo_train: empty record set");
    const int eos = vocab.id("<eos>");

    const PolicyParams reference = params;
    TrainReport report;
    BatchCycler cycler(records.size(), derive_seed(cfg.seed, 0x6BA7C5ULL));
    std::uint64_t sample_salt = derive_seed(cfg.seed, 0x5A3D1E5ULL);
    std::uint64_t sample_counter = 0;

    for (int step = 0; step < cfg.max_steps; ++step) {
        const double lr = cosine_lr(cfg.learning_rate, step, cfg.max_steps);
        const PolicyParams old_params = params;

        std::vector<RolloutGroup> groups;
        groups.reserve(static_cast<std::size_t>(cfg.batch_size));
        double sum_reward = 0.0, sum_format = 0.0, sum_accuracy = 0.0, sum_semantic = 0.0;
        int formatted = 0, total_candidates = 0;

        for (int b = 0; b < cfg.batch_size; ++b) {
            const QARecord& rec = records[cycler.next()];
            RolloutGroup group;
            group.ctx = PromptContext{rec.prompt_token_ids, rec.feature_a, rec.feature_b};
            const std::uint64_t roll_seed = derive_seed(sample_salt, sample_counter++);
            std::vector<Rollout> rolls =
                sample_candidates(old_params, group.ctx, cfg.group_size,
                                  options.sampling.temperature, options.sampling.max_len, eos,
                                  roll_seed);
            std::vector<double> rewards;
            rewards.reserve(rolls.size());
            for (Rollout& roll : rolls) {
                Candidate cand;
                cand.tokens = std::move(roll.tokens);
                cand.logprob_old = roll.total_logprob;
                cand.text = vocab.decode(cand.tokens);
                cand.breakdown = total_reward(cand.text, rec.gold, rec.answer_space, embedder);
                cand.reward = cfg.use_semantic_reward
                                  ? cand.breakdown.total
                                  : cand.breakdown.format + cand.breakdown.accuracy;
                cand.logprob_ref = sequence_logprob(reference, group.ctx, cand.tokens).total;
                rewards.push_back(cand.reward);

                sum_reward += cand.reward;
                sum_format += cand.breakdown.format;
                sum_accuracy += cand.breakdown.accuracy;
                sum_semantic += cand.breakdown.semantic;
                if (cand.breakdown.format > 0.0) ++formatted;
                ++total_candidates;
                group.candidates.push_back(std::move(cand));
            }
            const AdvantageGroup adv = normalize_advantages(rewards, cfg.std_epsilon);
            for (std::size_t i = 0; i < group.candidates.size(); ++i) {
                group.candidates[i].advantage = adv.advantages[i];
            }
            groups.push_back(std::move(group));
        }

        ObjectiveResult res;
        for (int epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
            res = grpo_objective(params, groups, cfg, true);
            double scale = 1.0;
            if (cfg.max_grad_norm > 0.0) {
                double sq = 0.0;
                for (double g : res.gradient) sq += g * g;
                const double norm = std::sqrt(sq);
                if (norm > cfg.max_grad_norm) scale = cfg.max_grad_norm / norm;
            }
            for (std::size_t i = 0; i < params.flat.size(); ++i) {
                params.flat[i] += lr * scale * res.gradient[i];
            }
            check_finite(params, "grpo_train", step + 1);
        }

        StepRecord rec;
        rec.step = step + 1;
        const double denom = static_cast<double>(total_candidates);
        rec.mean_reward = sum_reward / denom;
        rec.mean_format = sum_format / denom;
        rec.mean_accuracy = sum_accuracy / denom;
        rec.mean_semantic = sum_semantic / denom;
        rec.format_rate = static_cast<double>(formatted) / denom;
        rec.mean_kl = res.mean_kl;
        rec.objective = res.objective;
        rec.lr = lr;
        report.steps.push_back(rec);
        if (options.on_step && !options.on_step(rec)) break;
    }
    return report;
}

}  // namespace grpolab

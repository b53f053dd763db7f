#include "grpolab/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grpolab/checkpoint.hpp"
#include "grpolab/errors.hpp"
#include "grpolab/hash.hpp"
#include "grpolab/io.hpp"
#include "grpolab/rewards.hpp"
#include "grpolab/rng.hpp"

#include "config_json.hpp"

namespace grpolab {

namespace {

using nlohmann::json;

constexpr std::uint64_t kInitSalt = 0x1217D00DULL;
constexpr std::uint64_t kAlignSalt = 0xA116FEEDULL;
constexpr std::uint64_t kSftSalt = 0x5F7FEEDULL;
constexpr std::uint64_t kGrpoSalt = 0x6909FEEDULL;

std::uint64_t stage_seed(const RunConfig& config, std::uint64_t salt, std::uint64_t stage) {
    return derive_seed(derive_seed(config.seed, salt), stage);
}

PolicyConfig resolve_policy_config(const RunConfig& config, const Vocabulary& vocab) {
    PolicyConfig pc = config.policy;
    if (pc.vocab_size == 0) pc.vocab_size = vocab.size();
    pc.validate();
    if (pc.vocab_size != vocab.size()) {
        throw ConfigError("policy.vocab_size does not match the dataset vocabulary (" +
                          std::to_string(pc.vocab_size) + " vs " +
                          std::to_string(vocab.size()) + ")");
    }
    return pc;
}

void require_file(const std::string& path, const std::string& stage, const std::string& remedy) {
    if (!file_exists(path)) {
        throw IoError(stage + ": missing " + path + "; " + remedy);
    }
}

std::vector<SftExample> to_sft_examples(const std::vector<QARecord>& records,
                                        const Vocabulary& vocab) {
    std::vector<SftExample> out;
    out.reserve(records.size());
    for (const QARecord& r : records) {
        SftExample ex;
        ex.ctx.prompt = r.prompt_token_ids;
        ex.ctx.feature_a = r.feature_a;
        ex.ctx.feature_b = r.feature_b;
        ex.target = vocab.encode(r.gold.full_text);
        ex.target.push_back(vocab.eos_id());
        out.push_back(std::move(ex));
    }
    return out;
}

StepRecord last_step(const TrainReport& report) {
    return report.steps.empty() ? StepRecord{} : report.steps.back();
}

}  // namespace

std::string RunPaths::data_dir() const { return out_dir + "/data"; }
std::string RunPaths::pretrain_file() const { return data_dir() + "/pretrain.jsonl"; }
std::string RunPaths::sft_file() const { return data_dir() + "/sft.jsonl"; }
std::string RunPaths::rl_file() const { return data_dir() + "/rl.jsonl"; }
std::string RunPaths::eval_file() const { return data_dir() + "/eval.jsonl"; }
std::string RunPaths::vocab_file() const { return data_dir() + "/vocab.json"; }
std::string RunPaths::manifest_file() const { return data_dir() + "/manifest.json"; }
std::string RunPaths::align_checkpoint() const { return out_dir + "/checkpoints/align.ckpt"; }
std::string RunPaths::sft_checkpoint() const { return out_dir + "/checkpoints/sft.ckpt"; }
std::string RunPaths::grpo_checkpoint() const { return out_dir + "/checkpoints/grpo.ckpt"; }
std::string RunPaths::align_report() const { return out_dir + "/reports/align.jsonl"; }
std::string RunPaths::sft_report() const { return out_dir + "/reports/sft.jsonl"; }
std::string RunPaths::grpo_report() const { return out_dir + "/reports/grpo.jsonl"; }
std::string RunPaths::eval_report() const { return out_dir + "/reports/eval.json"; }

Stage parse_stage(const std::string& name) {
    if (name == "align") return Stage::align;
    if (name == "sft") return Stage::sft;
    if (name == "grpo") return Stage::grpo;
    if (name == "all") return Stage::all;
    throw ConfigError("unknown stage \"" + name + "\" (expected align, sft, grpo or all)");
}

GenDataSummary run_gen_data(const RunConfig& config) {
    config.validate();
    const RunPaths paths{config.out_dir};
    const DatasetBundle bundle = build_datasets(config.seed, config.datagen);

    write_pretrain(paths.pretrain_file(), bundle.pretrain);
    write_records(paths.sft_file(), bundle.sft);
    write_records(paths.rl_file(), bundle.rl);
    write_records(paths.eval_file(), bundle.eval);
    write_vocab(paths.vocab_file(), bundle.vocab);

    DatasetManifest manifest;
    manifest.seed = config.seed;
    manifest.config = config.datagen;
    manifest.splits["pretrain"] = {bundle.pretrain.size(), file_hash_hex(paths.pretrain_file())};
    manifest.splits["sft"] = {bundle.sft.size(), file_hash_hex(paths.sft_file())};
    manifest.splits["rl"] = {bundle.rl.size(), file_hash_hex(paths.rl_file())};
    manifest.splits["eval"] = {bundle.eval.size(), file_hash_hex(paths.eval_file())};
    write_manifest(paths.manifest_file(), manifest);

    GenDataSummary summary;
    summary.manifest = manifest;
    summary.vocab_size = bundle.vocab.size();
    std::map<std::string, int> counts;
    for (const QARecord& r : bundle.sft) counts[r.category] += 1;
    for (const QARecord& r : bundle.rl) counts[r.category] += 1;
    for (const QARecord& r : bundle.eval) counts[r.category] += 1;
    for (const std::string& tag : category_tags()) {
        summary.category_counts.emplace_back(tag, counts.count(tag) ? counts.at(tag) : 0);
    }
    return summary;
}

std::vector<StageSummary> run_train(
    const RunConfig& config, Stage stage, bool from_scratch,
    const std::function<bool(const std::string&, const StepRecord&)>& on_step) {
    config.validate();
    const RunPaths paths{config.out_dir};
    require_file(paths.vocab_file(), "train", "run gen-data first");
    const Vocabulary vocab = read_vocab(paths.vocab_file());
    const PolicyConfig policy_cfg = resolve_policy_config(config, vocab);
    const auto embedder = make_embedder(config.embedding);

    std::vector<StageSummary> summaries;
    PolicyParams params;

    const bool do_align = stage == Stage::align || stage == Stage::all;
    const bool do_sft = stage == Stage::sft || stage == Stage::all;
    const bool do_grpo = stage == Stage::grpo || stage == Stage::all;

    if (do_align || from_scratch) {
        params = init_policy(policy_cfg, derive_seed(config.seed, kInitSalt));
    } else if (do_sft) {
        require_file(paths.align_checkpoint(), "sft stage",
                     "run the align stage first or pass --from-scratch");
        Checkpoint ckpt = load_checkpoint(paths.align_checkpoint());
        if (!(ckpt.params.config == policy_cfg)) {
            throw ConfigError("align checkpoint dimensions do not match the configuration");
        }
        params = std::move(ckpt.params);
    } else {
        require_file(paths.sft_checkpoint(), "grpo stage",
                     "run the sft stage first or pass --from-scratch");
        Checkpoint ckpt = load_checkpoint(paths.sft_checkpoint());
        if (!(ckpt.params.config == policy_cfg)) {
            throw ConfigError("sft checkpoint dimensions do not match the configuration");
        }
        params = std::move(ckpt.params);
    }

    if (do_align) {
        require_file(paths.pretrain_file(), "align stage", "run gen-data first");
        const std::vector<PretrainPair> pool = read_pretrain(paths.pretrain_file());
        std::vector<AlignPair> pairs;
        pairs.reserve(pool.size());
        for (const PretrainPair& p : pool) {
            pairs.push_back(AlignPair{p.feature_a, p.feature_b, p.caption});
        }
        AlignStageConfig cfg = config.align;
        cfg.seed = stage_seed(config, kAlignSalt, config.align.seed);
        TrainReport report = align_train(pairs, params, *embedder, cfg);
        if (on_step) {
            for (const StepRecord& rec : report.steps) {
                if (!on_step("align", rec)) break;
            }
        }
        save_checkpoint(paths.align_checkpoint(), params, vocab);
        report.write_jsonl(paths.align_report());
        summaries.push_back({"align", paths.align_checkpoint(), last_step(report)});
    }

    if (do_sft) {
        require_file(paths.sft_file(), "sft stage", "run gen-data first");
        const std::vector<QARecord> sft_set = read_records(paths.sft_file());
        const std::vector<QARecord> cold = curate_cold_start(sft_set, config.datagen.cold_start_k);
        SftStageConfig cfg = config.sft;
        cfg.seed = stage_seed(config, kSftSalt, config.sft.seed);
        TrainReport report = sft_train(to_sft_examples(cold, vocab), params, cfg);
        if (on_step) {
            for (const StepRecord& rec : report.steps) {
                if (!on_step("sft", rec)) break;
            }
        }
        save_checkpoint(paths.sft_checkpoint(), params, vocab);
        report.write_jsonl(paths.sft_report());
        summaries.push_back({"sft", paths.sft_checkpoint(), last_step(report)});
    }

    if (do_grpo) {
        require_file(paths.rl_file(), "grpo stage", "run gen-data first");
        const std::vector<QARecord> rl_set = read_records(paths.rl_file());
        GrpoTrainOptions options;
        options.grpo = config.grpo;
        options.grpo.seed = stage_seed(config, kGrpoSalt, config.grpo.seed);
        options.sampling = config.sampling;
        if (on_step) {
            options.on_step = [&](const StepRecord& rec) { return on_step("grpo", rec); };
        }
        TrainReport report = grpo_train(rl_set, params, vocab, *embedder, options);
        save_checkpoint(paths.grpo_checkpoint(), params, vocab);
        report.write_jsonl(paths.grpo_report());
        summaries.push_back({"grpo", paths.grpo_checkpoint(), last_step(report)});
    }

    return summaries;
}

EvalReport run_eval(const RunConfig& config, const std::string& checkpoint_path) {
    config.validate();
    const RunPaths paths{config.out_dir};
    const std::string ckpt_path =
        checkpoint_path.empty() ? paths.grpo_checkpoint() : checkpoint_path;
    require_file(ckpt_path, "eval", "train a model first or pass --checkpoint");
    require_file(paths.eval_file(), "eval", "run gen-data first");

    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (file_exists(paths.vocab_file())) {
        const Vocabulary data_vocab = read_vocab(paths.vocab_file());
        if (data_vocab.tokens() != ckpt.vocab.tokens()) {
            throw ConfigError("checkpoint vocabulary does not match the dataset vocabulary");
        }
    }
    const std::vector<QARecord> records = read_records(paths.eval_file());
    const auto embedder = make_embedder(config.embedding);
    EvalReport report = evaluate_model(ckpt.params, records, ckpt.vocab, *embedder,
                                       config.sampling.max_len);
    atomic_write_file(paths.eval_report(), report.to_json());
    return report;
}

std::vector<std::string> run_reward_check(const std::string& candidates_path,
                                          const std::string& golds_path,
                                          const RunConfig& config) {
    const std::string cand_text = read_file(candidates_path);
    std::vector<std::string> candidates;
    {
        std::istringstream in(cand_text);
        std::string line;
        while (std::getline(in, line)) candidates.push_back(line);
    }

    struct GoldRow {
        GoldAnswer gold;
        std::vector<std::string> answer_space;
    };
    std::vector<GoldRow> golds;
    {
        const std::string gold_text = read_file(golds_path);
        std::istringstream in(gold_text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw IoError(golds_path + " line " + std::to_string(line_no) + ": " + e.what());
            }
            detail::check_keys(j, {"observation", "conclusion_label", "answer_space", "full_text"},
                               golds_path + " line " + std::to_string(line_no));
            GoldRow row;
            try {
                row.gold.observation = j.at("observation").get<std::string>();
                row.gold.conclusion_label = j.at("conclusion_label").get<std::string>();
                row.answer_space = j.at("answer_space").get<std::vector<std::string>>();
                if (j.contains("full_text")) {
                    row.gold.full_text = j.at("full_text").get<std::string>();
                }
            } catch (const json::exception& e) {
                throw IoError(golds_path + " line " + std::to_string(line_no) + ": " + e.what());
            }
            golds.push_back(std::move(row));
        }
    }

    if (candidates.size() != golds.size()) {
        throw ConfigError("reward-check: " + std::to_string(candidates.size()) +
                          " candidates but " + std::to_string(golds.size()) + " gold rows");
    }
    if (candidates.empty()) throw ConfigError("reward-check: no input pairs");

    const auto embedder = make_embedder(config.embedding);
    std::vector<std::string> lines;
    lines.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const RewardBreakdown rb =
            total_reward(candidates[i], golds[i].gold, golds[i].answer_space, *embedder);
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "#%zu format=%.2f accuracy=%.2f semantic=%.4f total=%.4f", i + 1, rb.format,
                      rb.accuracy, rb.semantic, rb.total);
        lines.emplace_back(buf);
    }
    return lines;
}

}  // namespace grpolab

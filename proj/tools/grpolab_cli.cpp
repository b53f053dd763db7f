#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "grpolab/config.hpp"
#include "grpolab/errors.hpp"
#include "grpolab/pipeline.hpp"

namespace {

using namespace grpolab;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool out_set = false;
};

RunConfig resolve_config(const GlobalArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = load_run_config(args.config_path);
    apply_env_overrides(cfg);
    if (args.seed_set) cfg.seed = args.seed;
    if (args.out_set) cfg.out_dir = args.out_dir;
    return cfg;
}

void print_step(const std::string& stage, const StepRecord& rec) {
    if (stage == "grpo") {
        std::printf("[%s] step %d reward %.3f fmt %.2f acc %.3f sem %.3f kl %.4f obj %.4f lr %.4g\n",
                    stage.c_str(), rec.step, rec.mean_reward, rec.format_rate, rec.mean_accuracy,
                    rec.mean_semantic, rec.mean_kl, rec.objective, rec.lr);
    } else {
        std::printf("[%s] step %d loss %.4f lr %.4g\n", stage.c_str(), rec.step, rec.loss, rec.lr);
    }
}

int cmd_gen_data(const GlobalArgs& args) {
    const RunConfig cfg = resolve_config(args);
    const GenDataSummary summary = run_gen_data(cfg);
    std::printf("dataset written to %s (vocab %d tokens)\n", RunPaths{cfg.out_dir}.data_dir().c_str(),
                summary.vocab_size);
    for (const auto& [name, entry] : summary.manifest.splits) {
        std::printf("  %-10s %6zu records  fnv1a %s\n", name.c_str(), entry.count,
                    entry.hash.c_str());
    }
    std::printf("category counts:\n");
    for (const auto& [tag, count] : summary.category_counts) {
        std::printf("  %-24s %6d\n", tag.c_str(), count);
    }
    return 0;
}

int cmd_train(const GlobalArgs& args, const std::string& stage_name, bool from_scratch,
              int log_every) {
    const RunConfig cfg = resolve_config(args);
    const Stage stage = parse_stage(stage_name);
    const auto on_step = [&](const std::string& stage_tag, const StepRecord& rec) {
        if (log_every > 0 && (rec.step % log_every == 0 || rec.step == 1)) {
            print_step(stage_tag, rec);
        }
        return true;
    };
    const auto summaries = run_train(cfg, stage, from_scratch, on_step);
    for (const StageSummary& s : summaries) {
        std::printf("stage %s finished at step %d, checkpoint %s\n", s.stage.c_str(),
                    s.final_step.step, s.checkpoint_path.c_str());
    }
    return 0;
}

int cmd_eval(const GlobalArgs& args, const std::string& checkpoint) {
    const RunConfig cfg = resolve_config(args);
    const EvalReport report = run_eval(cfg, checkpoint);
    std::fputs(report.to_table().c_str(), stdout);
    std::printf("report written to %s\n", RunPaths{cfg.out_dir}.eval_report().c_str());
    return 0;
}

int cmd_reward_check(const GlobalArgs& args, const std::string& candidates,
                     const std::string& golds) {
    const RunConfig cfg = resolve_config(args);
    for (const std::string& line : run_reward_check(candidates, golds, cfg)) {
        std::printf("%s\n", line.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"group-relative policy optimization lab for structured-answer VQA"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs args;
    app.add_option("--config", args.config_path, "run configuration JSON file");
    app.add_option("--seed", args.seed, "override the run seed")
        ->each([&](const std::string&) { args.seed_set = true; });
    app.add_option("--out", args.out_dir, "override the output directory")
        ->each([&](const std::string&) { args.out_set = true; });

    auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset splits");

    auto* train = app.add_subcommand("train", "run the training stages");
    std::string stage_name = "all";
    bool from_scratch = false;
    int log_every = 25;
    train->add_option("--stage", stage_name, "align, sft, grpo or all")
        ->check(CLI::IsMember({"align", "sft", "grpo", "all"}));
    train->add_flag("--from-scratch", from_scratch,
                    "initialize fresh parameters instead of loading the previous stage");
    train->add_option("--log-every", log_every, "progress print interval in steps (0 silences)");

    auto* eval_cmd = app.add_subcommand("eval", "greedy-decode and score the eval split");
    std::string checkpoint;
    eval_cmd->add_option("--checkpoint", checkpoint,
                         "checkpoint to score (defaults to the grpo checkpoint)");

    auto* check = app.add_subcommand("reward-check", "score candidate answers against gold rows");
    std::string candidates_path;
    std::string golds_path;
    check->add_option("--candidates", candidates_path, "text file, one candidate answer per line")
        ->required();
    check->add_option("--golds", golds_path, "JSONL gold rows")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(args);
        if (train->parsed()) return cmd_train(args, stage_name, from_scratch, log_every);
        if (eval_cmd->parsed()) return cmd_eval(args, checkpoint);
        if (check->parsed()) return cmd_reward_check(args, candidates_path, golds_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

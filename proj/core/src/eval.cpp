#include "grpolab/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grpolab/errors.hpp"
#include "grpolab/rewards.hpp"
#include "grpolab/text.hpp"

namespace grpolab {

namespace {

using nlohmann::json;

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

double accuracy(const std::vector<std::optional<std::string>>& predictions,
                const std::vector<std::string>& golds,
                const std::vector<std::vector<std::string>>& answer_spaces) {
    if (predictions.size() != golds.size() || predictions.size() != answer_spaces.size()) {
        throw ConfigError("accuracy: prediction, gold and answer space counts differ");
    }
    if (predictions.empty()) throw ConfigError("accuracy: empty inputs");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        sum += accuracy_reward(predictions[i], golds[i]) / 2.0;
    }
    return sum / static_cast<double>(predictions.size());
}

double recall(const std::string& pred_text, const std::string& gold_text) {
    std::set<std::string> gold_tokens;
    for (const std::string& tok : tokenize_words(gold_text)) gold_tokens.insert(tok);
    if (gold_tokens.empty()) return 1.0;
    std::set<std::string> pred_tokens;
    for (const std::string& tok : tokenize_words(pred_text)) pred_tokens.insert(tok);
    std::size_t hit = 0;
    for (const std::string& tok : gold_tokens) {
        if (pred_tokens.count(tok)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(gold_tokens.size());
}

EvalReport evaluate_texts(const std::vector<QARecord>& records,
                          const std::vector<std::string>& texts, const Embedder& embedder,
                          int transcript_count) {
    if (records.empty()) throw ConfigError("evaluation dataset is empty");
    if (records.size() != texts.size()) {
        throw ConfigError("evaluation: record and text counts differ");
    }

    EvalReport report;
    report.record_count = static_cast<int>(records.size());

    std::map<std::string, CategoryStat> by_category;
    std::vector<double> lengths;
    lengths.reserve(texts.size());
    double recall_sum = 0.0;
    double obs_recall_sum = 0.0;
    double format_sum = 0.0;
    double semantic_sum = 0.0;
    double accuracy_sum = 0.0;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const QARecord& rec = records[i];
        const std::string& text = texts[i];

        const RewardBreakdown rb = total_reward(text, rec.gold, rec.answer_space, embedder);
        const bool correct = rb.accuracy > 0.0;
        accuracy_sum += correct ? 1.0 : 0.0;
        format_sum += rb.format > 0.0 ? 1.0 : 0.0;
        semantic_sum += rb.semantic;

        recall_sum += recall(text, rec.gold.full_text);
        const ParsedAnswer parsed = parse_structured_answer(text);
        obs_recall_sum += recall(parsed.observation, rec.gold.observation);

        lengths.push_back(static_cast<double>(split_whitespace(text).size()));

        CategoryStat& stat = by_category[rec.category];
        stat.category = rec.category;
        stat.count += 1;
        if (correct) stat.correct += 1;

        if (static_cast<int>(report.transcripts.size()) < transcript_count) {
            report.transcripts.push_back(text);
        }
    }

    const double n = static_cast<double>(records.size());
    report.accuracy = accuracy_sum / n;
    report.recall = recall_sum / n;
    report.format_rate = format_sum / n;
    report.observation_recall = obs_recall_sum / n;
    report.mean_semantic = semantic_sum / n;
    double len_sum = 0.0;
    for (double l : lengths) len_sum += l;
    report.mean_length = len_sum / n;
    report.median_length = median(lengths);

    for (auto& [_, stat] : by_category) {
        stat.accuracy = stat.count > 0 ? static_cast<double>(stat.correct) / stat.count : 0.0;
        report.per_category.push_back(stat);
    }
    return report;
}

EvalReport evaluate_model(const PolicyParams& params, const std::vector<QARecord>& records,
                          const Vocabulary& vocab, const Embedder& embedder, int max_len,
                          int transcript_count) {
    if (records.empty()) throw ConfigError("evaluation dataset is empty");
    const int eos = vocab.eos_id();
    std::vector<std::string> texts;
    texts.reserve(records.size());
    for (const QARecord& rec : records) {
        PromptContext ctx;
        ctx.prompt = rec.prompt_token_ids;
        ctx.feature_a = rec.feature_a;
        ctx.feature_b = rec.feature_b;
        Rollout rollout = greedy_decode(params, ctx, max_len, eos);
        texts.push_back(vocab.decode(rollout.tokens));
    }
    return evaluate_texts(records, texts, embedder, transcript_count);
}

std::string EvalReport::to_json() const {
    json cats = json::array();
    for (const CategoryStat& stat : per_category) {
        cats.push_back(json{{"category", stat.category},
                            {"count", stat.count},
                            {"correct", stat.correct},
                            {"accuracy", stat.accuracy}});
    }
    json j{{"record_count", record_count},
           {"accuracy", accuracy},
           {"recall", recall},
           {"format_rate", format_rate},
           {"mean_length", mean_length},
           {"median_length", median_length},
           {"observation_recall", observation_recall},
           {"mean_semantic", mean_semantic},
           {"per_category", cats},
           {"transcripts", transcripts}};
    return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& content) {
    json j;
    try {
        j = json::parse(content);
    } catch (const json::exception& e) {
        throw IoError(std::string("eval report: ") + e.what());
    }
    EvalReport r;
    try {
        r.record_count = j.at("record_count").get<int>();
        r.accuracy = j.at("accuracy").get<double>();
        r.recall = j.at("recall").get<double>();
        r.format_rate = j.at("format_rate").get<double>();
        r.mean_length = j.at("mean_length").get<double>();
        r.median_length = j.at("median_length").get<double>();
        r.observation_recall = j.at("observation_recall").get<double>();
        r.mean_semantic = j.at("mean_semantic").get<double>();
        for (const json& c : j.at("per_category")) {
            CategoryStat stat;
            stat.category = c.at("category").get<std::string>();
            stat.count = c.at("count").get<int>();
            stat.correct = c.at("correct").get<int>();
            stat.accuracy = c.at("accuracy").get<double>();
            r.per_category.push_back(stat);
        }
        r.transcripts = j.at("transcripts").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw IoError(std::string("eval report: ") + e.what());
    }
    return r;
}

std::string EvalReport::to_table() const {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-22s %8d\n", "records", record_count);
    out << line;
    const auto row = [&](const char* name, double value) {
        std::snprintf(line, sizeof(line), "%-22s %8.4f\n", name, value);
        out << line;
    };
    row("accuracy", accuracy);
    row("recall", recall);
    row("format rate", format_rate);
    row("mean length", mean_length);
    row("median length", median_length);
    row("observation recall", observation_recall);
    row("mean semantic", mean_semantic);
    out << "per category:\n";
    for (const CategoryStat& stat : per_category) {
        std::snprintf(line, sizeof(line), "  %-24s %5d/%-5d %8.4f\n", stat.category.c_str(),
                      stat.correct, stat.count, stat.accuracy);
        out << line;
    }
    return out.str();
}

}  // namespace grpolab

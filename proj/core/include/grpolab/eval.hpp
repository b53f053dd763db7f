#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grpolab/datagen.hpp"
#include "grpolab/embedding.hpp"
#include "grpolab/policy.hpp"
#include "grpolab/vocab.hpp"

namespace grpolab {

struct CategoryStat {
    std::string category;
    int count = 0;
    int correct = 0;
    double accuracy = 0.0;
};

struct EvalReport {
    int record_count = 0;
    double accuracy = 0.0;
    double recall = 0.0;
    double format_rate = 0.0;
    double mean_length = 0.0;    // tokens per decoded answer
    double median_length = 0.0;
    double observation_recall = 0.0;  // recall restricted to the observation sections
    double mean_semantic = 0.0;
    std::vector<CategoryStat> per_category;
    std::vector<std::string> transcripts;  // first few decoded answers

    std::string to_json() const;
    std::string to_table() const;
};

EvalReport eval_report_from_json(const std::string& content);

/// Fraction of predictions whose extracted label matches gold; equals
/// mean(accuracy_reward) / 2 over the same pairs.
double accuracy(const std::vector<std::optional<std::string>>& predictions,
                const std::vector<std::string>& golds,
                const std::vector<std::vector<std::string>>& answer_spaces);

/// |unique gold tokens found in the prediction| / |unique gold tokens|,
/// case-folded and punctuation-stripped; an empty gold counts as 1.
double recall(const std::string& pred_text, const std::string& gold_text);

/// Score pre-decoded answer texts against their records.
EvalReport evaluate_texts(const std::vector<QARecord>& records,
                          const std::vector<std::string>& texts, const Embedder& embedder,
                          int transcript_count = 5);

/// Greedy-decode one answer per record, then score. Throws on an empty
/// dataset.
EvalReport evaluate_model(const PolicyParams& params, const std::vector<QARecord>& records,
                          const Vocabulary& vocab, const Embedder& embedder, int max_len,
                          int transcript_count = 5);

}  // namespace grpolab

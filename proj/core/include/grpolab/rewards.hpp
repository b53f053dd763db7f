#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grpolab/embedding.hpp"

namespace grpolab {

/// Decomposition of a generated answer into its three sections.
/// well_formed is true iff all three headers were located in order, none
/// duplicated, and every section body is non-empty after trimming. When
/// well_formed is false all section fields are empty.
struct ParsedAnswer {
    std::string observation;
    std::string analysis;
    std::string conclusion;
    bool well_formed = false;
};

struct GoldAnswer {
    std::string observation;       // reference observation text
    std::string conclusion_label;  // canonical short answer, member of the answer space
    std::string full_text;         // complete three-section reference answer
};

/// Per-candidate reward terms. total is always the exact sum of the three
/// components and lies in [0, 3.5] with the reference encoder.
struct RewardBreakdown {
    double format = 0.0;    // 0 or 0.5
    double accuracy = 0.0;  // 0 or 2
    double semantic = 0.0;  // [0, 1] with the reference encoder
    double total = 0.0;
};

/// Locates the observation / analysis / conclusion sections. Header
/// matching is case-insensitive and tolerates "[Observation]",
/// "Observation:" and "Observation →" renderings. Any text before the
/// first header is ignored. Never fails: malformed input yields
/// well_formed = false.
ParsedAnswer parse_structured_answer(std::string_view text);

/// 0.5 iff the answer is well formed, else 0.
double format_reward(const ParsedAnswer& parsed);

/// First answer-space label found in the conclusion after
/// canonicalization (case-fold, strip punctuation). Letter labels match as
/// standalone tokens, so "option B", "(B)" and "B." all resolve to B.
/// Absence is a value, not an error. Throws ConfigError if the answer
/// space is empty or contains duplicate canonical labels.
std::optional<std::string> extract_final_answer(std::string_view conclusion,
                                                const std::vector<std::string>& answer_space);

/// 2 iff pred is present and matches gold after canonicalization, else 0.
double accuracy_reward(const std::optional<std::string>& pred, std::string_view gold);

/// Cosine similarity between encoder embeddings of the two observation
/// texts; 0 if either embedding is the zero vector.
double semantic_reward(std::string_view gold_observation, std::string_view pred_observation,
                       const Embedder& encoder);

/// Full reward composition: parse, then format, accuracy on the extracted
/// conclusion, semantic on the observation sections. On malformed answers
/// the empty sections make both accuracy and semantic evaluate to 0.
RewardBreakdown total_reward(std::string_view generated, const GoldAnswer& gold,
                             const std::vector<std::string>& answer_space,
                             const Embedder& encoder);

}  // namespace grpolab

#include "grpolab/rewards.hpp"

#include <array>
#include <cctype>

#include "grpolab/errors.hpp"
#include "grpolab/text.hpp"

namespace grpolab {

namespace {

constexpr std::string_view kArrow = "\xE2\x86\x92";  // UTF-8 right arrow

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool matches_keyword_at(std::string_view text, std::size_t pos, std::string_view keyword) {
    if (pos + keyword.size() > text.size()) return false;
    for (std::size_t i = 0; i < keyword.size(); ++i) {
        const char a = static_cast<char>(std::tolower(static_cast<unsigned char>(text[pos + i])));
        if (a != keyword[i]) return false;
    }
    return true;
}

struct HeaderHit {
    int kind = 0;             // 0 observation, 1 analysis, 2 conclusion
    std::size_t start = 0;    // first char of the header (bracket included)
    std::size_t body_at = 0;  // first char after the header and its ':' / arrow
};

// Tries to match one section header at `pos`. A header is the keyword,
// optionally wrapped in square brackets, optionally followed by ':' or an
// arrow. The keyword must sit on word boundaries so "observations" or
// "preobservation" never match.
std::optional<HeaderHit> match_header_at(std::string_view text, std::size_t pos) {
    static constexpr std::array<std::string_view, 3> kKeywords = {"observation", "analysis",
                                                                  "conclusion"};
    if (pos > 0 && is_alnum(text[pos - 1])) return std::nullopt;

    for (int kind = 0; kind < 3; ++kind) {
        std::size_t i = pos;
        bool bracketed = false;
        if (i < text.size() && text[i] == '[') {
            bracketed = true;
            ++i;
        }
        const std::string_view keyword = kKeywords[static_cast<std::size_t>(kind)];
        if (!matches_keyword_at(text, i, keyword)) continue;
        i += keyword.size();
        if (bracketed) {
            if (i >= text.size() || text[i] != ']') continue;
            ++i;
        } else {
            if (i < text.size() && is_alnum(text[i])) continue;  // word boundary
        }
        // Optional separator after the header: spaces then ':' or an arrow.
        std::size_t j = i;
        while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
        if (j < text.size() && text[j] == ':') {
            i = j + 1;
        } else if (j + kArrow.size() <= text.size() && text.substr(j, kArrow.size()) == kArrow) {
            i = j + kArrow.size();
        }
        return HeaderHit{kind, pos, i};
    }
    return std::nullopt;
}

std::vector<HeaderHit> find_headers(std::string_view text) {
    std::vector<HeaderHit> hits;
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (auto hit = match_header_at(text, pos)) {
            hits.push_back(*hit);
            pos = hit->body_at;
        } else {
            ++pos;
        }
    }
    return hits;
}

}  // namespace

ParsedAnswer parse_structured_answer(std::string_view text) {
    const std::vector<HeaderHit> hits = find_headers(text);

    // Exactly one header of each kind, in observation/analysis/conclusion order.
    if (hits.size() != 3 || hits[0].kind != 0 || hits[1].kind != 1 || hits[2].kind != 2) {
        return ParsedAnswer{};
    }

    ParsedAnswer parsed;
    parsed.observation = trim(text.substr(hits[0].body_at, hits[1].start - hits[0].body_at));
    parsed.analysis = trim(text.substr(hits[1].body_at, hits[2].start - hits[1].body_at));
    parsed.conclusion = trim(text.substr(hits[2].body_at));
    if (parsed.observation.empty() || parsed.analysis.empty() || parsed.conclusion.empty()) {
        return ParsedAnswer{};
    }
    parsed.well_formed = true;
    return parsed;
}

double format_reward(const ParsedAnswer& parsed) { return parsed.well_formed ? 0.5 : 0.0; }

std::optional<std::string> extract_final_answer(std::string_view conclusion,
                                                const std::vector<std::string>& answer_space) {
    if (answer_space.empty()) throw ConfigError("extract_final_answer: empty answer space");
    std::vector<std::string> canonical;
    canonical.reserve(answer_space.size());
    for (const std::string& label : answer_space) {
        std::string c = canonical_label(label);
        if (c.empty()) throw ConfigError("extract_final_answer: label canonicalizes to empty");
        for (const std::string& seen : canonical) {
            if (seen == c) throw ConfigError("extract_final_answer: duplicate canonical label " + c);
        }
        canonical.push_back(std::move(c));
    }
    for (const std::string& token : tokenize_words(conclusion)) {
        for (std::size_t i = 0; i < canonical.size(); ++i) {
            if (token == canonical[i]) return answer_space[i];
        }
    }
    return std::nullopt;
}

double accuracy_reward(const std::optional<std::string>& pred, std::string_view gold) {
    if (!pred.has_value()) return 0.0;
    return canonical_label(*pred) == canonical_label(gold) ? 2.0 : 0.0;
}

double semantic_reward(std::string_view gold_observation, std::string_view pred_observation,
                       const Embedder& encoder) {
    const std::vector<double> gv = encoder.embed(gold_observation);
    const std::vector<double> pv = encoder.embed(pred_observation);
    return cosine(gv, pv);
}

RewardBreakdown total_reward(std::string_view generated, const GoldAnswer& gold,
                             const std::vector<std::string>& answer_space,
                             const Embedder& encoder) {
    const ParsedAnswer parsed = parse_structured_answer(generated);
    RewardBreakdown breakdown;
    breakdown.format = format_reward(parsed);
    // Malformed answers carry empty sections, so extraction misses and the
    // semantic term hits the zero-vector rule.
    const auto pred = extract_final_answer(parsed.conclusion, answer_space);
    breakdown.accuracy = accuracy_reward(pred, gold.conclusion_label);
    breakdown.semantic = semantic_reward(gold.observation, parsed.observation, encoder);
    breakdown.total = breakdown.format + breakdown.accuracy + breakdown.semantic;
    return breakdown;
}

}  // namespace grpolab

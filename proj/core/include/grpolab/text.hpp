#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace grpolab {

std::string to_lower(std::string_view text);

std::string to_upper(std::string_view text);

/// Strips leading/trailing ASCII whitespace.
std::string trim(std::string_view text);

/// Lowercased alphanumeric runs; everything else is a separator.
/// Used for label matching, recall, and the reference embedder.
std::vector<std::string> tokenize_words(std::string_view text);

/// Whitespace split keeping punctuation attached ("[observation]" stays one
/// token). This is the policy-side tokenization.
std::vector<std::string> split_whitespace(std::string_view text);

/// Canonical form of an answer label: lowercased, non-alphanumerics removed.
std::string canonical_label(std::string_view label);

/// Joins tokens with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace grpolab

#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grpolab {

/// Whitespace-token vocabulary with dense ids. Reserved tokens (end of
/// sequence, unknown, section headers, answer labels) occupy the first ids
/// in a fixed order; corpus tokens follow in sorted order.
class Vocabulary {
public:
    static const std::vector<std::string>& reserved_tokens();

    /// Builds from a text corpus: reserved tokens first, then every other
    /// distinct whitespace token in lexicographic order.
    static Vocabulary build(const std::vector<std::string>& corpus);

    static Vocabulary from_tokens(std::vector<std::string> tokens);

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& token(int id) const;

    /// Id lookup; unknown tokens map to the <unk> id.
    int id(std::string_view token) const;
    bool contains(std::string_view token) const;

    int eos_id() const { return eos_id_; }
    int unk_id() const { return unk_id_; }

    /// Whitespace-splits and maps to ids (OOV -> <unk>).
    std::vector<int> encode(std::string_view text) const;

    /// Joins tokens with spaces; <eos> tokens are dropped.
    std::string decode(const std::vector<int>& ids) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    int eos_id_ = 0;
    int unk_id_ = 1;
};

}  // namespace grpolab

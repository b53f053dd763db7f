#include "grpolab/vocab.hpp"

#include <algorithm>
#include <set>

#include "grpolab/errors.hpp"
#include "grpolab/text.hpp"

namespace grpolab {

const std::vector<std::string>& Vocabulary::reserved_tokens() {
    static const std::vector<std::string> reserved = {
        "<eos>", "<unk>", "[observation]", "[analysis]", "[conclusion]",
        "a",     "b",     "c",             "d",          "yes",
        "no"};
    return reserved;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus) {
    std::set<std::string> seen(reserved_tokens().begin(), reserved_tokens().end());
    std::set<std::string> extra;
    for (const std::string& text : corpus) {
        for (std::string& token : split_whitespace(to_lower(text))) {
            if (!seen.count(token)) extra.insert(std::move(token));
        }
    }
    std::vector<std::string> tokens = reserved_tokens();
    tokens.insert(tokens.end(), extra.begin(), extra.end());
    return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary vocab;
    vocab.tokens_ = std::move(tokens);
    for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
        auto [it, inserted] = vocab.ids_.emplace(vocab.tokens_[i], static_cast<int>(i));
        if (!inserted) throw ConfigError("vocabulary has duplicate token: " + vocab.tokens_[i]);
    }
    const auto eos = vocab.ids_.find("<eos>");
    const auto unk = vocab.ids_.find("<unk>");
    if (eos == vocab.ids_.end() || unk == vocab.ids_.end()) {
        throw ConfigError("vocabulary is missing reserved tokens");
    }
    vocab.eos_id_ = eos->second;
    vocab.unk_id_ = unk->second;
    return vocab;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw Error("token id out of range: " + std::to_string(id));
    return tokens_[static_cast<std::size_t>(id)];
}

int Vocabulary::id(std::string_view token) const {
    const auto it = ids_.find(std::string(token));
    return it == ids_.end() ? unk_id_ : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return ids_.count(std::string(token)) > 0;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
    std::vector<int> out;
    for (const std::string& token : split_whitespace(to_lower(text))) {
        out.push_back(id(token));
    }
    return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> parts;
    parts.reserve(ids.size());
    for (int id : ids) {
        if (id == eos_id_) continue;
        parts.push_back(token(id));
    }
    return join_tokens(parts);
}

}  // namespace grpolab

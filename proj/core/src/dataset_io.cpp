#include "grpolab/dataset_io.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "grpolab/errors.hpp"
#include "grpolab/hash.hpp"
#include "grpolab/io.hpp"

#include "config_json.hpp"

namespace grpolab {

namespace {

using nlohmann::json;

json record_to_json(const QARecord& r) {
    return json{{"record_id", r.record_id},
                {"slide_id", r.slide_id},
                {"patch_id", r.patch_id},
                {"prompt_token_ids", r.prompt_token_ids},
                {"feature_a", r.feature_a},
                {"feature_b", r.feature_b},
                {"question", r.question},
                {"answer_space", r.answer_space},
                {"gold", json{{"observation", r.gold.observation},
                              {"conclusion_label", r.gold.conclusion_label},
                              {"full_text", r.gold.full_text}}},
                {"category", r.category},
                {"split", r.split}};
}

QARecord record_from_json(const json& j, const std::string& where) {
    detail::check_keys(j,
                       {"record_id", "slide_id", "patch_id", "prompt_token_ids", "feature_a",
                        "feature_b", "question", "answer_space", "gold", "category", "split"},
                       where);
    QARecord r;
    try {
        r.record_id = j.at("record_id").get<std::string>();
        r.slide_id = j.at("slide_id").get<int>();
        r.patch_id = j.at("patch_id").get<int>();
        r.prompt_token_ids = j.at("prompt_token_ids").get<std::vector<int>>();
        r.feature_a = j.at("feature_a").get<std::vector<double>>();
        r.feature_b = j.at("feature_b").get<std::vector<double>>();
        r.question = j.at("question").get<std::string>();
        r.answer_space = j.at("answer_space").get<std::vector<std::string>>();
        const json& g = j.at("gold");
        detail::check_keys(g, {"observation", "conclusion_label", "full_text"}, where + ".gold");
        r.gold.observation = g.at("observation").get<std::string>();
        r.gold.conclusion_label = g.at("conclusion_label").get<std::string>();
        r.gold.full_text = g.at("full_text").get<std::string>();
        r.category = j.at("category").get<std::string>();
        r.split = j.at("split").get<std::string>();
    } catch (const json::exception& e) {
        throw IoError(where + ": " + e.what());
    }
    return r;
}

json pair_to_json(const PretrainPair& p) {
    return json{{"pair_id", p.pair_id},   {"slide_id", p.slide_id},
                {"patch_id", p.patch_id}, {"feature_a", p.feature_a},
                {"feature_b", p.feature_b}, {"question", p.question},
                {"caption", p.caption}};
}

PretrainPair pair_from_json(const json& j, const std::string& where) {
    detail::check_keys(
        j, {"pair_id", "slide_id", "patch_id", "feature_a", "feature_b", "question", "caption"},
        where);
    PretrainPair p;
    try {
        p.pair_id = j.at("pair_id").get<std::string>();
        p.slide_id = j.at("slide_id").get<int>();
        p.patch_id = j.at("patch_id").get<int>();
        p.feature_a = j.at("feature_a").get<std::vector<double>>();
        p.feature_b = j.at("feature_b").get<std::vector<double>>();
        p.question = j.at("question").get<std::string>();
        p.caption = j.at("caption").get<std::string>();
    } catch (const json::exception& e) {
        throw IoError(where + ": " + e.what());
    }
    return p;
}

json parse_line(const std::string& line, std::size_t line_no, const std::string& what) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw IoError(what + " line " + std::to_string(line_no) + ": " + e.what());
    }
}

template <typename T, typename FromJson>
std::vector<T> jsonl_to_items(const std::string& content, const std::string& what,
                              FromJson from_json) {
    std::vector<T> items;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = parse_line(line, line_no, what);
        items.push_back(from_json(j, what + " line " + std::to_string(line_no)));
    }
    return items;
}

}  // namespace

std::string records_to_jsonl(const std::vector<QARecord>& records) {
    std::string out;
    for (const QARecord& r : records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<QARecord> records_from_jsonl(const std::string& content) {
    return jsonl_to_items<QARecord>(content, "record", record_from_json);
}

std::string pretrain_to_jsonl(const std::vector<PretrainPair>& pairs) {
    std::string out;
    for (const PretrainPair& p : pairs) {
        out += pair_to_json(p).dump();
        out += '\n';
    }
    return out;
}

std::vector<PretrainPair> pretrain_from_jsonl(const std::string& content) {
    return jsonl_to_items<PretrainPair>(content, "pretrain pair", pair_from_json);
}

void write_records(const std::string& path, const std::vector<QARecord>& records) {
    atomic_write_file(path, records_to_jsonl(records));
}

std::vector<QARecord> read_records(const std::string& path) {
    return records_from_jsonl(read_file(path));
}

void write_pretrain(const std::string& path, const std::vector<PretrainPair>& pairs) {
    atomic_write_file(path, pretrain_to_jsonl(pairs));
}

std::vector<PretrainPair> read_pretrain(const std::string& path) {
    return pretrain_from_jsonl(read_file(path));
}

void write_vocab(const std::string& path, const Vocabulary& vocab) {
    json j{{"tokens", vocab.tokens()}};
    atomic_write_file(path, j.dump(2) + "\n");
}

Vocabulary read_vocab(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    detail::check_keys(j, {"tokens"}, "vocabulary");
    try {
        return Vocabulary::from_tokens(j.at("tokens").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
    json splits = json::object();
    for (const auto& [name, entry] : manifest.splits) {
        splits[name] = json{{"count", entry.count}, {"hash", entry.hash}};
    }
    json j{{"seed", manifest.seed},
           {"config", detail::datagen_to_json(manifest.config)},
           {"splits", splits}};
    atomic_write_file(path, j.dump(2) + "\n");
}

DatasetManifest read_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    detail::check_keys(j, {"seed", "config", "splits"}, "manifest");
    DatasetManifest m;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config = detail::datagen_from_json(j.at("config"), "manifest.config");
        for (const auto& [name, entry] : j.at("splits").items()) {
            detail::check_keys(entry, {"count", "hash"}, "manifest.splits." + name);
            SplitEntry s;
            s.count = entry.at("count").get<std::size_t>();
            s.hash = entry.at("hash").get<std::string>();
            m.splits[name] = s;
        }
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    return m;
}

}  // namespace grpolab

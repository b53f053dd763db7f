#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "grpolab/datagen.hpp"
#include "grpolab/vocab.hpp"

namespace grpolab {

std::string records_to_jsonl(const std::vector<QARecord>& records);
std::vector<QARecord> records_from_jsonl(const std::string& content);

std::string pretrain_to_jsonl(const std::vector<PretrainPair>& pairs);
std::vector<PretrainPair> pretrain_from_jsonl(const std::string& content);

void write_records(const std::string& path, const std::vector<QARecord>& records);
std::vector<QARecord> read_records(const std::string& path);

void write_pretrain(const std::string& path, const std::vector<PretrainPair>& pairs);
std::vector<PretrainPair> read_pretrain(const std::string& path);

void write_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocab(const std::string& path);

struct SplitEntry {
    std::size_t count = 0;
    std::string hash;  // fnv-1a 64 of the split file bytes, hex
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    DatagenConfig config;
    std::map<std::string, SplitEntry> splits;  // keyed by split name
};

void write_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::string& path);

}  // namespace grpolab

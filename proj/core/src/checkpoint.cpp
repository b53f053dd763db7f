#include "grpolab/checkpoint.hpp"

#include <cstring>

#include <nlohmann/json.hpp>

#include "grpolab/errors.hpp"
#include "grpolab/hash.hpp"
#include "grpolab/io.hpp"

namespace grpolab {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'G', 'R', 'P', 'L'};
constexpr std::uint32_t kVersion = 1;

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t read_u32(const std::string& data, std::size_t& pos) {
    if (pos + 4 > data.size()) throw IoError("checkpoint is truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
}

std::uint64_t read_u64(const std::string& data, std::size_t& pos) {
    if (pos + 8 > data.size()) throw IoError("checkpoint is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
}

std::string params_bytes(const PolicyParams& params) {
    std::string bytes;
    bytes.resize(params.flat.size() * sizeof(double));
    for (std::size_t i = 0; i < params.flat.size(); ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &params.flat[i], sizeof(double));
        for (int b = 0; b < 8; ++b) {
            bytes[i * 8 + static_cast<std::size_t>(b)] =
                static_cast<char>((bits >> (8 * b)) & 0xFF);
        }
    }
    return bytes;
}

}  // namespace

void save_checkpoint(const std::string& path, const PolicyParams& params,
                     const Vocabulary& vocab) {
    if (!params.all_finite()) throw Error("refusing to save non-finite parameters");
    const std::string values = params_bytes(params);
    json header{{"config",
                 json{{"vocab_size", params.config.vocab_size},
                      {"embed_dim", params.config.embed_dim},
                      {"hidden_dim", params.config.hidden_dim},
                      {"proj_hidden_dim", params.config.proj_hidden_dim},
                      {"feature_a_dim", params.config.feature_a_dim},
                      {"feature_b_dim", params.config.feature_b_dim},
                      {"adapter", json{{"enabled", params.config.adapter.enabled},
                                       {"rank", params.config.adapter.rank},
                                       {"alpha", params.config.adapter.alpha}}}}},
                {"param_count", params.flat.size()},
                {"param_hash", to_hex(fnv1a64(values))},
                {"tokens", vocab.tokens()}};
    const std::string header_text = header.dump();

    std::string blob;
    blob.append(kMagic, 4);
    append_u32(blob, kVersion);
    append_u64(blob, header_text.size());
    blob += header_text;
    append_u64(blob, values.size());
    blob += values;
    atomic_write_file(path, blob);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string data = read_file(path);
    std::size_t pos = 0;
    if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0) {
        throw IoError(path + " is not a checkpoint file");
    }
    pos = 4;
    const std::uint32_t version = read_u32(data, pos);
    if (version != kVersion) {
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint64_t header_len = read_u64(data, pos);
    if (pos + header_len > data.size()) throw IoError("checkpoint is truncated");
    json header;
    try {
        header = json::parse(data.substr(pos, header_len));
    } catch (const json::exception& e) {
        throw IoError(path + ": bad checkpoint header: " + e.what());
    }
    pos += header_len;
    const std::uint64_t value_bytes = read_u64(data, pos);
    if (pos + value_bytes != data.size()) throw IoError("checkpoint is truncated");
    if (value_bytes % sizeof(double) != 0) throw IoError("checkpoint payload is misaligned");

    Checkpoint ckpt;
    try {
        const json& c = header.at("config");
        ckpt.params.config.vocab_size = c.at("vocab_size").get<int>();
        ckpt.params.config.embed_dim = c.at("embed_dim").get<int>();
        ckpt.params.config.hidden_dim = c.at("hidden_dim").get<int>();
        ckpt.params.config.proj_hidden_dim = c.at("proj_hidden_dim").get<int>();
        ckpt.params.config.feature_a_dim = c.at("feature_a_dim").get<int>();
        ckpt.params.config.feature_b_dim = c.at("feature_b_dim").get<int>();
        const json& a = c.at("adapter");
        ckpt.params.config.adapter.enabled = a.at("enabled").get<bool>();
        ckpt.params.config.adapter.rank = a.at("rank").get<int>();
        ckpt.params.config.adapter.alpha = a.at("alpha").get<double>();

        const std::string payload = data.substr(pos, value_bytes);
        const std::string expected_hash = header.at("param_hash").get<std::string>();
        if (to_hex(fnv1a64(payload)) != expected_hash) {
            throw IoError(path + ": checkpoint integrity check failed");
        }
        const std::uint64_t count = header.at("param_count").get<std::uint64_t>();
        if (count * sizeof(double) != value_bytes) {
            throw IoError(path + ": checkpoint parameter count mismatch");
        }

        ckpt.params.layout = ParamLayout::create(ckpt.params.config);
        if (ckpt.params.layout.total != count) {
            throw IoError(path + ": checkpoint layout does not match its dimensions");
        }
        ckpt.params.flat.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(
                            static_cast<unsigned char>(payload[i * 8 + static_cast<std::size_t>(b)]))
                        << (8 * b);
            }
            std::memcpy(&ckpt.params.flat[i], &bits, sizeof(double));
        }
        ckpt.vocab = Vocabulary::from_tokens(header.at("tokens").get<std::vector<std::string>>());
    } catch (const json::exception& e) {
        throw IoError(path + ": bad checkpoint header: " + e.what());
    }
    if (ckpt.params.config.vocab_size != ckpt.vocab.size()) {
        throw IoError(path + ": checkpoint vocabulary does not match its dimensions");
    }
    return ckpt;
}

}  // namespace grpolab

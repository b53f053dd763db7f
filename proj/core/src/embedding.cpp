#include "grpolab/embedding.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "grpolab/errors.hpp"
#include "grpolab/hash.hpp"
#include "grpolab/text.hpp"

namespace grpolab {

void EmbeddingConfig::validate() const {
    if (dimension < 8) throw ConfigError("embedding dimension must be >= 8");
    if (backend == EmbeddingBackend::remote && remote_endpoint.empty()) {
        throw ConfigError("remote embedding backend requires an endpoint");
    }
    if (timeout_ms <= 0) throw ConfigError("embedding timeout must be positive");
    if (max_retries < 0) throw ConfigError("embedding retry count must be >= 0");
}

ReferenceEmbedder::ReferenceEmbedder(const EmbeddingConfig& config)
    : dim_(config.dimension), seed_(config.seed) {
    config.validate();
}

std::vector<double> ReferenceEmbedder::embed(std::string_view text) const {
    std::vector<double> vec(static_cast<std::size_t>(dim_), 0.0);
    for (const std::string& token : tokenize_words(text)) {
        const std::size_t bucket =
            static_cast<std::size_t>(token_hash(token, seed_) % static_cast<std::uint64_t>(dim_));
        vec[bucket] += 1.0;
    }
    double norm_sq = 0.0;
    for (double v : vec) norm_sq += v * v;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : vec) v *= inv;
    }
    return vec;
}

std::vector<double> reference_embed(std::string_view text, const EmbeddingConfig& config) {
    return ReferenceEmbedder(config).embed(text);
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw ConfigError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace {

// Splits "http://host:port/path" into components. Scheme defaults to http.
void parse_endpoint(const std::string& endpoint, std::string& host, int& port, std::string& path) {
    std::string rest = endpoint;
    const std::string http = "http://";
    if (rest.rfind(http, 0) == 0) rest = rest.substr(http.size());
    port = 80;
    path = "/";
    const std::size_t slash = rest.find('/');
    std::string hostport = rest.substr(0, slash);
    if (slash != std::string::npos) path = rest.substr(slash);
    const std::size_t colon = hostport.find(':');
    if (colon != std::string::npos) {
        host = hostport.substr(0, colon);
        try {
            port = std::stoi(hostport.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("invalid port in embedding endpoint: " + endpoint);
        }
    } else {
        host = hostport;
    }
    if (host.empty()) throw ConfigError("invalid embedding endpoint: " + endpoint);
}

}  // namespace

RemoteEmbedder::RemoteEmbedder(const EmbeddingConfig& config) : config_(config), dim_(config.dimension) {
    config.validate();
    parse_endpoint(config.remote_endpoint, host_, port_, path_);
}

std::vector<double> RemoteEmbedder::embed(std::string_view text) const {
    nlohmann::json request;
    request["text"] = std::string(text);
    const std::string body = request.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(10 * attempt));
        httplib::Client client(host_, port_);
        client.set_connection_timeout(0, config_.timeout_ms * 1000);
        client.set_read_timeout(0, config_.timeout_ms * 1000);
        auto res = client.Post(path_, body, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad response body: ") + e.what();
            continue;
        }
        if (!parsed.contains("vector") || !parsed["vector"].is_array()) {
            last_error = "response missing \"vector\" array";
            continue;
        }
        std::vector<double> vec = parsed["vector"].get<std::vector<double>>();
        if (static_cast<int>(vec.size()) != dim_) {
            // Service disagrees about geometry: retrying cannot fix this.
            throw ConfigError("remote embedding dimension mismatch: expected " +
                              std::to_string(dim_) + ", got " + std::to_string(vec.size()));
        }
        return vec;
    }
    throw RemoteError("remote embed failed after " + std::to_string(config_.max_retries + 1) +
                      " attempts: " + last_error);
}

std::unique_ptr<Embedder> make_embedder(const EmbeddingConfig& config) {
    config.validate();
    if (config.backend == EmbeddingBackend::remote) {
        return std::make_unique<RemoteEmbedder>(config);
    }
    return std::make_unique<ReferenceEmbedder>(config);
}

}  // namespace grpolab

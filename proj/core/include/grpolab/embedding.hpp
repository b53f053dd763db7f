#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grpolab {

enum class EmbeddingBackend { reference, remote };

struct EmbeddingConfig {
    int dimension = 256;                 // must be >= 8
    std::uint64_t seed = 0xA11CE;
    EmbeddingBackend backend = EmbeddingBackend::reference;
    std::string remote_endpoint;         // e.g. http://127.0.0.1:8090/embed
    int timeout_ms = 2000;
    int max_retries = 3;

    void validate() const;               // throws ConfigError
};

/// Frozen text encoder. Implementations must be deterministic within a run
/// and safe to call concurrently.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    virtual int dimension() const = 0;
};

/// Hashed bag-of-words encoder: lowercase, split on non-alphanumeric runs,
/// seeded hash to a bucket, term counts, L2 normalization. All components
/// are non-negative, so cosine between two embeddings lies in [0, 1].
class ReferenceEmbedder final : public Embedder {
public:
    explicit ReferenceEmbedder(const EmbeddingConfig& config);
    std::vector<double> embed(std::string_view text) const override;
    int dimension() const override { return dim_; }

private:
    int dim_;
    std::uint64_t seed_;
};

/// HTTP client for an external embedding service. Request body is
/// {"text": "..."}; response body is {"vector": [..]}. Transient failures
/// are retried up to max_retries; a wrong-dimension response is a
/// configuration error, not retriable.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(const EmbeddingConfig& config);
    std::vector<double> embed(std::string_view text) const override;
    int dimension() const override { return dim_; }

private:
    EmbeddingConfig config_;
    int dim_;
    std::string host_;
    int port_;
    std::string path_;
};

/// Free-function form of the reference encoder.
std::vector<double> reference_embed(std::string_view text, const EmbeddingConfig& config);

/// u.v / (|u||v|); 0 if either norm is 0. Throws ConfigError on dimension
/// mismatch (caller bug).
double cosine(std::span<const double> u, std::span<const double> v);

std::unique_ptr<Embedder> make_embedder(const EmbeddingConfig& config);

}  // namespace grpolab

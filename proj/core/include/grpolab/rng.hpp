#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace grpolab {

/// One-shot 64-bit finalizer (splitmix64 step without state update).
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent child seed from a base seed and a stream index.
/// Chaining derive_seed calls builds per-slide / per-prompt RNG streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Deterministic RNG. All floating-point draws are mapped explicitly from
/// mt19937_64 output so results never depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n);

    /// Standard normal via Box-Muller (cached spare kept for determinism).
    double gaussian();

    /// Index draw from an explicit probability vector (CDF walk).
    std::size_t categorical(const std::vector<double>& probs);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace grpolab

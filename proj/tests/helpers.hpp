#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <grpolab/policy.hpp>
#include <grpolab/rng.hpp>

namespace testutil {

// Small policy instance sized for finite-difference checks.
inline grpolab::PolicyConfig tiny_policy_config(int vocab = 8) {
    grpolab::PolicyConfig cfg;
    cfg.vocab_size = vocab;
    cfg.embed_dim = 5;
    cfg.hidden_dim = 6;
    cfg.proj_hidden_dim = 4;
    cfg.feature_a_dim = 3;
    cfg.feature_b_dim = 3;
    return cfg;
}

inline grpolab::PromptContext random_context(const grpolab::PolicyConfig& cfg, grpolab::Rng& rng,
                                             int prompt_len) {
    grpolab::PromptContext ctx;
    for (int i = 0; i < prompt_len; ++i) {
        ctx.prompt.push_back(static_cast<int>(rng.uniform_int(static_cast<std::size_t>(cfg.vocab_size))));
    }
    for (int i = 0; i < cfg.feature_a_dim; ++i) ctx.feature_a.push_back(rng.gaussian());
    for (int i = 0; i < cfg.feature_b_dim; ++i) ctx.feature_b.push_back(rng.gaussian());
    return ctx;
}

inline std::vector<int> random_tokens(const grpolab::PolicyConfig& cfg, grpolab::Rng& rng,
                                      int len) {
    std::vector<int> out;
    for (int i = 0; i < len; ++i) {
        out.push_back(static_cast<int>(rng.uniform_int(static_cast<std::size_t>(cfg.vocab_size))));
    }
    return out;
}

// Component-wise comparison of an analytic gradient against central finite
// differences. Relative error where the magnitude supports it, absolute
// near zero.
inline double gradient_disagreement(const std::vector<double>& analytic,
                                    const std::vector<double>& fd) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double mag = std::max(std::abs(analytic[i]), std::abs(fd[i]));
        const double diff = std::abs(analytic[i] - fd[i]);
        const double err = mag > 1e-6 ? diff / mag : diff * 1e2;
        worst = std::max(worst, err);
    }
    return worst;
}

template <typename F>
std::vector<double> central_differences(grpolab::PolicyParams& params, F&& value, double step = 1e-5) {
    std::vector<double> grad(params.flat.size(), 0.0);
    for (std::size_t i = 0; i < params.flat.size(); ++i) {
        const double saved = params.flat[i];
        params.flat[i] = saved + step;
        const double hi = value(params);
        params.flat[i] = saved - step;
        const double lo = value(params);
        params.flat[i] = saved;
        grad[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("grpolab-test-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

}  // namespace testutil

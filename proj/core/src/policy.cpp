#include "grpolab/policy.hpp"

#include <algorithm>
#include <cmath>

#include "grpolab/errors.hpp"
#include "grpolab/rng.hpp"

namespace grpolab {

void PolicyConfig::validate() const {
    if (vocab_size <= 0) throw ConfigError("policy vocab_size must be positive");
    if (embed_dim <= 0 || hidden_dim <= 0 || proj_hidden_dim <= 0) {
        throw ConfigError("policy dims must be positive");
    }
    if (feature_a_dim <= 0 || feature_b_dim <= 0) {
        throw ConfigError("feature dims must be positive");
    }
    if (adapter.enabled && (adapter.rank <= 0 || adapter.alpha <= 0.0)) {
        throw ConfigError("adapter rank and alpha must be positive");
    }
}

ParamLayout ParamLayout::create(const PolicyConfig& config) {
    config.validate();
    const int v = config.vocab_size;
    const int e = config.embed_dim;
    const int h = config.hidden_dim;
    const int p = config.proj_hidden_dim;
    const int f = config.fused_dim();

    ParamLayout layout;
    auto add = [&layout](std::string name, int rows, int cols) {
        Segment seg{std::move(name), layout.total, rows, cols};
        layout.total += seg.size();
        layout.segments.push_back(std::move(seg));
    };
    add("token_embedding", v, e);
    add("recur_w", h, h + e);
    add("recur_b", h, 1);
    add("out_w", v, h);
    add("out_b", v, 1);
    add("proj1_w", p, f);
    add("proj1_b", p, 1);
    add("proj2_w", h, p);
    add("proj2_b", h, 1);
    if (config.adapter.enabled) {
        add("adapter_a", config.adapter.rank, h);
        add("adapter_b", v, config.adapter.rank);
    }
    return layout;
}

const ParamLayout::Segment& ParamLayout::find(std::string_view name) const {
    for (const Segment& seg : segments) {
        if (seg.name == name) return seg;
    }
    throw Error("unknown parameter segment: " + std::string(name));
}

bool ParamLayout::has(std::string_view name) const {
    for (const Segment& seg : segments) {
        if (seg.name == name) return true;
    }
    return false;
}

std::span<double> PolicyParams::segment(std::string_view name) {
    const auto& seg = layout.find(name);
    return {flat.data() + seg.offset, seg.size()};
}

std::span<const double> PolicyParams::segment(std::string_view name) const {
    const auto& seg = layout.find(name);
    return {flat.data() + seg.offset, seg.size()};
}

bool PolicyParams::all_finite() const {
    for (double v : flat) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

PolicyTensors unflatten(const PolicyParams& params) {
    PolicyTensors tensors;
    for (const auto& seg : params.layout.segments) {
        const double* base = params.flat.data() + seg.offset;
        tensors.segments.emplace_back(seg.name, std::vector<double>(base, base + seg.size()));
    }
    return tensors;
}

std::vector<double> flatten(const PolicyTensors& tensors) {
    std::vector<double> flat;
    for (const auto& [name, values] : tensors.segments) {
        flat.insert(flat.end(), values.begin(), values.end());
    }
    return flat;
}

std::vector<double> fuse_features(std::span<const double> feature_a,
                                  std::span<const double> feature_b) {
    std::vector<double> fused;
    fused.reserve(feature_a.size() + feature_b.size());
    fused.insert(fused.end(), feature_a.begin(), feature_a.end());
    fused.insert(fused.end(), feature_b.begin(), feature_b.end());
    return fused;
}

namespace {

// y = M x for row-major M (rows x cols).
void matvec(std::span<const double> m, std::span<const double> x, std::span<double> y, int rows,
            int cols) {
    for (int r = 0; r < rows; ++r) {
        const double* row = m.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
}

// y += M^T x for row-major M (rows x cols); x has rows entries, y has cols.
void matvec_transposed_accum(std::span<const double> m, std::span<const double> x,
                             std::span<double> y, int rows, int cols) {
    for (int r = 0; r < rows; ++r) {
        const double xr = x[static_cast<std::size_t>(r)];
        if (xr == 0.0) continue;
        const double* row = m.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
        for (int c = 0; c < cols; ++c) y[static_cast<std::size_t>(c)] += xr * row[c];
    }
}

// M += outer(u, v) for row-major M (|u| x |v|).
void outer_accum(std::span<double> m, std::span<const double> u, std::span<const double> v) {
    for (std::size_t r = 0; r < u.size(); ++r) {
        double* row = m.data() + r * v.size();
        const double ur = u[r];
        if (ur == 0.0) continue;
        for (std::size_t c = 0; c < v.size(); ++c) row[c] += ur * v[c];
    }
}

void check_context(const PolicyParams& params, const PromptContext& ctx) {
    if (static_cast<int>(ctx.feature_a.size()) != params.config.feature_a_dim ||
        static_cast<int>(ctx.feature_b.size()) != params.config.feature_b_dim) {
        throw ConfigError("prompt context feature dimensions do not match policy config");
    }
    for (int id : ctx.prompt) {
        if (id < 0 || id >= params.config.vocab_size) {
            throw Error("prompt token id out of range: " + std::to_string(id));
        }
    }
}

void check_tokens(const PolicyParams& params, const std::vector<int>& tokens) {
    if (tokens.empty()) throw Error("token sequence must be non-empty");
    for (int id : tokens) {
        if (id < 0 || id >= params.config.vocab_size) {
            throw Error("token id out of range: " + std::to_string(id));
        }
    }
}

// Shared forward state for scoring and backprop.
struct Forward {
    int prompt_len = 0;
    int cand_len = 0;
    std::vector<double> fused;      // f
    std::vector<double> proj_act;   // tanh(W1 fused + b1), size p
    std::vector<double> states;     // (prompt_len + cand_len) x h; states[0] = h0
    std::vector<double> probs;      // cand_len x V softmax rows
    std::vector<double> logprobs;   // per candidate position
};

class PolicyKernel {
public:
    explicit PolicyKernel(const PolicyParams& params)
        : p_(params),
          v_(params.config.vocab_size),
          e_(params.config.embed_dim),
          h_(params.config.hidden_dim),
          ph_(params.config.proj_hidden_dim),
          f_(params.config.fused_dim()),
          emb_(params.token_embedding()),
          rec_w_(params.recur_w()),
          rec_b_(params.recur_b()),
          out_w_(params.out_w()),
          out_b_(params.out_b()) {
        if (p_.config.adapter.enabled) {
            rank_ = p_.config.adapter.rank;
            scale_ = p_.config.adapter.alpha / static_cast<double>(rank_);
            ad_a_ = p_.segment("adapter_a");
            ad_b_ = p_.segment("adapter_b");
        }
    }

    std::vector<double> initial_state(const PromptContext& ctx, std::vector<double>* fused_out,
                                      std::vector<double>* act_out) const {
        std::vector<double> fused = fuse_features(ctx.feature_a, ctx.feature_b);
        std::vector<double> pre(static_cast<std::size_t>(ph_));
        matvec(p_.proj1_w(), fused, pre, ph_, f_);
        const auto b1 = p_.proj1_b();
        for (int i = 0; i < ph_; ++i) {
            pre[static_cast<std::size_t>(i)] = std::tanh(pre[static_cast<std::size_t>(i)] +
                                                         b1[static_cast<std::size_t>(i)]);
        }
        std::vector<double> h0(static_cast<std::size_t>(h_));
        matvec(p_.proj2_w(), pre, h0, h_, ph_);
        const auto b2 = p_.proj2_b();
        for (int i = 0; i < h_; ++i) h0[static_cast<std::size_t>(i)] += b2[static_cast<std::size_t>(i)];
        if (fused_out) *fused_out = std::move(fused);
        if (act_out) *act_out = std::move(pre);
        return h0;
    }

    // h_next = tanh(W [h ; emb(token)] + b)
    void advance(std::span<const double> h, int token, std::span<double> h_next) const {
        const double* erow = emb_.data() + static_cast<std::size_t>(token) * static_cast<std::size_t>(e_);
        const int cols = h_ + e_;
        for (int r = 0; r < h_; ++r) {
            const double* row =
                rec_w_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
            double acc = rec_b_[static_cast<std::size_t>(r)];
            for (int c = 0; c < h_; ++c) acc += row[c] * h[static_cast<std::size_t>(c)];
            for (int c = 0; c < e_; ++c) acc += row[h_ + c] * erow[c];
            h_next[static_cast<std::size_t>(r)] = std::tanh(acc);
        }
    }

    // logits = (out_w + scale * B A) h + out_b
    void logits(std::span<const double> h, std::span<double> out) const {
        matvec(out_w_, h, out, v_, h_);
        for (int i = 0; i < v_; ++i) out[static_cast<std::size_t>(i)] += out_b_[static_cast<std::size_t>(i)];
        if (rank_ > 0) {
            std::vector<double> ah(static_cast<std::size_t>(rank_));
            matvec(ad_a_, h, ah, rank_, h_);
            for (int r = 0; r < v_; ++r) {
                const double* brow =
                    ad_b_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(rank_);
                double acc = 0.0;
                for (int k = 0; k < rank_; ++k) acc += brow[k] * ah[static_cast<std::size_t>(k)];
                out[static_cast<std::size_t>(r)] += scale_ * acc;
            }
        }
    }

    // In place: logits -> softmax probabilities; returns log(sum exp) shift
    // so that logprob(t) = logits[t] - lse.
    static double softmax_inplace(std::span<double> logits) {
        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        double sum = 0.0;
        for (double& v : logits) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : logits) v /= sum;
        return mx + std::log(sum);
    }

    Forward run(const PromptContext& ctx, const std::vector<int>& tokens, bool keep_probs) const {
        Forward fwd;
        fwd.prompt_len = static_cast<int>(ctx.prompt.size());
        fwd.cand_len = static_cast<int>(tokens.size());
        const int n_states = fwd.prompt_len + fwd.cand_len;  // last token never consumed
        fwd.states.resize(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(h_));
        std::vector<double> h0 = initial_state(ctx, &fwd.fused, &fwd.proj_act);
        std::copy(h0.begin(), h0.end(), fwd.states.begin());

        auto state = [&fwd, this](int i) {
            return std::span<double>(fwd.states.data() +
                                         static_cast<std::size_t>(i) * static_cast<std::size_t>(h_),
                                     static_cast<std::size_t>(h_));
        };
        for (int i = 0; i < fwd.prompt_len; ++i) {
            advance(state(i), ctx.prompt[static_cast<std::size_t>(i)], state(i + 1));
        }
        for (int k = 0; k + 1 < fwd.cand_len; ++k) {
            advance(state(fwd.prompt_len + k), tokens[static_cast<std::size_t>(k)],
                    state(fwd.prompt_len + k + 1));
        }

        fwd.logprobs.resize(static_cast<std::size_t>(fwd.cand_len));
        if (keep_probs) {
            fwd.probs.resize(static_cast<std::size_t>(fwd.cand_len) * static_cast<std::size_t>(v_));
        }
        std::vector<double> row(static_cast<std::size_t>(v_));
        for (int k = 0; k < fwd.cand_len; ++k) {
            logits(state(fwd.prompt_len + k), row);
            const int tok = tokens[static_cast<std::size_t>(k)];
            const double raw = row[static_cast<std::size_t>(tok)];
            const double lse = softmax_inplace(row);
            fwd.logprobs[static_cast<std::size_t>(k)] = raw - lse;
            if (keep_probs) {
                std::copy(row.begin(), row.end(),
                          fwd.probs.begin() +
                              static_cast<std::size_t>(k) * static_cast<std::size_t>(v_));
            }
        }
        return fwd;
    }

    const PolicyParams& p_;
    const int v_, e_, h_, ph_, f_;
    std::span<const double> emb_, rec_w_, rec_b_, out_w_, out_b_;
    std::span<const double> ad_a_, ad_b_;
    int rank_ = 0;
    double scale_ = 0.0;
};

}  // namespace

std::vector<double> project(std::span<const double> fused, const PolicyParams& params) {
    if (static_cast<int>(fused.size()) != params.config.fused_dim()) {
        throw ConfigError("project: fused vector has wrong dimension");
    }
    const int ph = params.config.proj_hidden_dim;
    const int h = params.config.hidden_dim;
    std::vector<double> act(static_cast<std::size_t>(ph));
    matvec(params.proj1_w(), fused, act, ph, params.config.fused_dim());
    const auto b1 = params.proj1_b();
    for (int i = 0; i < ph; ++i) {
        act[static_cast<std::size_t>(i)] =
            std::tanh(act[static_cast<std::size_t>(i)] + b1[static_cast<std::size_t>(i)]);
    }
    std::vector<double> out(static_cast<std::size_t>(h));
    matvec(params.proj2_w(), act, out, h, ph);
    const auto b2 = params.proj2_b();
    for (int i = 0; i < h; ++i) out[static_cast<std::size_t>(i)] += b2[static_cast<std::size_t>(i)];
    return out;
}

PolicyParams init_policy(const PolicyConfig& config, std::uint64_t seed) {
    PolicyParams params;
    params.config = config;
    params.layout = ParamLayout::create(config);
    params.flat.assign(params.layout.total, 0.0);
    Rng rng(seed);
    for (const auto& seg : params.layout.segments) {
        const bool is_bias = seg.cols == 1;
        const bool zero_init = is_bias || seg.name == "adapter_b";
        if (zero_init) {
            // Biases and the adapter's B factor start at zero; skip the rng
            // so layouts with/without adapter share the base draw sequence.
            continue;
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(seg.cols));
        double* base = params.flat.data() + seg.offset;
        for (std::size_t i = 0; i < seg.size(); ++i) base[i] = rng.uniform(-bound, bound);
    }
    return params;
}

std::vector<double> effective_output_weights(const PolicyParams& params) {
    const int v = params.config.vocab_size;
    const int h = params.config.hidden_dim;
    std::vector<double> out(params.out_w().begin(), params.out_w().end());
    if (!params.config.adapter.enabled) return out;
    const int r = params.config.adapter.rank;
    const double scale = params.config.adapter.alpha / static_cast<double>(r);
    const auto a = params.segment("adapter_a");
    const auto b = params.segment("adapter_b");
    for (int row = 0; row < v; ++row) {
        for (int col = 0; col < h; ++col) {
            double acc = 0.0;
            for (int k = 0; k < r; ++k) {
                acc += b[static_cast<std::size_t>(row) * static_cast<std::size_t>(r) +
                         static_cast<std::size_t>(k)] *
                       a[static_cast<std::size_t>(k) * static_cast<std::size_t>(h) +
                         static_cast<std::size_t>(col)];
            }
            out[static_cast<std::size_t>(row) * static_cast<std::size_t>(h) +
                static_cast<std::size_t>(col)] += scale * acc;
        }
    }
    return out;
}

SequenceLogprob sequence_logprob(const PolicyParams& params, const PromptContext& ctx,
                                 const std::vector<int>& tokens) {
    check_context(params, ctx);
    check_tokens(params, tokens);
    PolicyKernel kernel(params);
    Forward fwd = kernel.run(ctx, tokens, /*keep_probs=*/false);
    SequenceLogprob out;
    out.per_token = std::move(fwd.logprobs);
    for (double lp : out.per_token) out.total += lp;
    return out;
}

LogprobGradient logprob_and_gradient(const PolicyParams& params, const PromptContext& ctx,
                                     const std::vector<int>& tokens) {
    check_context(params, ctx);
    check_tokens(params, tokens);
    const PolicyKernel kernel(params);
    const Forward fwd = kernel.run(ctx, tokens, /*keep_probs=*/true);

    LogprobGradient result;
    result.per_token = fwd.logprobs;
    for (double lp : fwd.logprobs) result.total += lp;
    result.gradient.assign(params.flat.size(), 0.0);

    const int v = kernel.v_, e = kernel.e_, h = kernel.h_, ph = kernel.ph_, f = kernel.f_;
    const int prompt_len = fwd.prompt_len;
    const int cand_len = fwd.cand_len;
    const int n_states = prompt_len + cand_len;

    auto gseg = [&](std::string_view name) {
        const auto& seg = params.layout.find(name);
        return std::span<double>(result.gradient.data() + seg.offset, seg.size());
    };
    auto g_emb = gseg("token_embedding");
    auto g_rec_w = gseg("recur_w");
    auto g_rec_b = gseg("recur_b");
    auto g_out_w = gseg("out_w");
    auto g_out_b = gseg("out_b");
    std::span<double> g_ad_a, g_ad_b;
    if (params.config.adapter.enabled) {
        g_ad_a = gseg("adapter_a");
        g_ad_b = gseg("adapter_b");
    }

    auto state = [&](int i) {
        return std::span<const double>(
            fwd.states.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(h),
            static_cast<std::size_t>(h));
    };

    std::vector<double> d_state(static_cast<std::size_t>(h), 0.0);
    std::vector<double> d_logits(static_cast<std::size_t>(v));
    std::vector<double> ah(static_cast<std::size_t>(kernel.rank_ > 0 ? kernel.rank_ : 1));
    std::vector<double> btd(static_cast<std::size_t>(kernel.rank_ > 0 ? kernel.rank_ : 1));
    std::vector<double> dz(static_cast<std::size_t>(h));
    std::vector<double> input_cat(static_cast<std::size_t>(h + e));

    // Consumed token stream: prompt tokens then candidate tokens except the
    // last (its consumption feeds nothing downstream).
    auto consumed_token = [&](int i) {
        return i < prompt_len ? ctx.prompt[static_cast<std::size_t>(i)]
                              : tokens[static_cast<std::size_t>(i - prompt_len)];
    };

    for (int i = n_states - 1; i >= 0; --i) {
        // Output-head gradient at candidate positions.
        if (i >= prompt_len) {
            const int k = i - prompt_len;
            const int tok = tokens[static_cast<std::size_t>(k)];
            const double* prow =
                fwd.probs.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(v);
            for (int j = 0; j < v; ++j) d_logits[static_cast<std::size_t>(j)] = -prow[j];
            d_logits[static_cast<std::size_t>(tok)] += 1.0;

            const auto h_i = state(i);
            outer_accum(g_out_w, d_logits, h_i);
            for (int j = 0; j < v; ++j) g_out_b[static_cast<std::size_t>(j)] += d_logits[static_cast<std::size_t>(j)];
            matvec_transposed_accum(kernel.out_w_, d_logits, d_state, v, h);
            if (kernel.rank_ > 0) {
                const int r = kernel.rank_;
                matvec(kernel.ad_a_, h_i, std::span<double>(ah.data(), static_cast<std::size_t>(r)),
                       r, h);
                // d adapter_b += scale * d_logits (A h)^T
                for (int row = 0; row < v; ++row) {
                    const double dl = d_logits[static_cast<std::size_t>(row)] * kernel.scale_;
                    if (dl == 0.0) continue;
                    double* brow = g_ad_b.data() +
                                   static_cast<std::size_t>(row) * static_cast<std::size_t>(r);
                    for (int k2 = 0; k2 < r; ++k2) brow[k2] += dl * ah[static_cast<std::size_t>(k2)];
                }
                // btd = B^T d_logits
                std::fill(btd.begin(), btd.begin() + r, 0.0);
                for (int row = 0; row < v; ++row) {
                    const double dl = d_logits[static_cast<std::size_t>(row)];
                    if (dl == 0.0) continue;
                    const double* brow = kernel.ad_b_.data() +
                                         static_cast<std::size_t>(row) * static_cast<std::size_t>(r);
                    for (int k2 = 0; k2 < r; ++k2) btd[static_cast<std::size_t>(k2)] += dl * brow[k2];
                }
                // d adapter_a += scale * (B^T d_logits) h^T ; d h += scale * A^T (B^T d_logits)
                for (int k2 = 0; k2 < r; ++k2) {
                    const double s = kernel.scale_ * btd[static_cast<std::size_t>(k2)];
                    if (s == 0.0) continue;
                    double* arow = g_ad_a.data() +
                                   static_cast<std::size_t>(k2) * static_cast<std::size_t>(h);
                    const double* ak = kernel.ad_a_.data() +
                                       static_cast<std::size_t>(k2) * static_cast<std::size_t>(h);
                    for (int c = 0; c < h; ++c) {
                        arow[c] += s * h_i[static_cast<std::size_t>(c)];
                        d_state[static_cast<std::size_t>(c)] += s * ak[c];
                    }
                }
            }
        }

        // Backprop the consumption step that produced this state (i > 0).
        if (i > 0) {
            const int tok = consumed_token(i - 1);
            const auto h_next = state(i);
            const auto h_prev = state(i - 1);
            for (int r = 0; r < h; ++r) {
                const double hv = h_next[static_cast<std::size_t>(r)];
                dz[static_cast<std::size_t>(r)] = d_state[static_cast<std::size_t>(r)] * (1.0 - hv * hv);
            }
            const double* erow = kernel.emb_.data() +
                                 static_cast<std::size_t>(tok) * static_cast<std::size_t>(e);
            std::copy(h_prev.begin(), h_prev.end(), input_cat.begin());
            std::copy(erow, erow + e, input_cat.begin() + h);
            outer_accum(g_rec_w, dz, input_cat);
            for (int r = 0; r < h; ++r) g_rec_b[static_cast<std::size_t>(r)] += dz[static_cast<std::size_t>(r)];

            // d input = W^T dz; head goes to the previous state, tail to the
            // consumed token's embedding row.
            std::fill(d_state.begin(), d_state.end(), 0.0);
            const int cols = h + e;
            double* g_erow = g_emb.data() + static_cast<std::size_t>(tok) * static_cast<std::size_t>(e);
            for (int r = 0; r < h; ++r) {
                const double d = dz[static_cast<std::size_t>(r)];
                if (d == 0.0) continue;
                const double* row = kernel.rec_w_.data() +
                                    static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
                for (int c = 0; c < h; ++c) d_state[static_cast<std::size_t>(c)] += d * row[c];
                for (int c = 0; c < e; ++c) g_erow[c] += d * row[h + c];
            }
        }
    }

    // d_state now holds the gradient at h0; push through the projector.
    auto g_p1_w = gseg("proj1_w");
    auto g_p1_b = gseg("proj1_b");
    auto g_p2_w = gseg("proj2_w");
    auto g_p2_b = gseg("proj2_b");
    outer_accum(g_p2_w, d_state, fwd.proj_act);
    for (int i = 0; i < h; ++i) g_p2_b[static_cast<std::size_t>(i)] += d_state[static_cast<std::size_t>(i)];
    std::vector<double> d_act(static_cast<std::size_t>(ph), 0.0);
    matvec_transposed_accum(params.proj2_w(), d_state, d_act, h, ph);
    for (int i = 0; i < ph; ++i) {
        const double a = fwd.proj_act[static_cast<std::size_t>(i)];
        d_act[static_cast<std::size_t>(i)] *= (1.0 - a * a);
    }
    outer_accum(g_p1_w, d_act, fwd.fused);
    for (int i = 0; i < ph; ++i) g_p1_b[static_cast<std::size_t>(i)] += d_act[static_cast<std::size_t>(i)];
    (void)f;
    return result;
}

std::vector<double> logprob_gradient(const PolicyParams& params, const PromptContext& ctx,
                                     const std::vector<int>& tokens) {
    return logprob_and_gradient(params, ctx, tokens).gradient;
}

namespace {

Rollout decode_loop(const PolicyParams& params, const PromptContext& ctx, int max_len, int eos_id,
                    double temperature, Rng* rng) {
    check_context(params, ctx);
    if (max_len < 1) throw Error("max_len must be >= 1");
    const PolicyKernel kernel(params);
    const int v = kernel.v_;
    const int h = kernel.h_;

    std::vector<double> state = kernel.initial_state(ctx, nullptr, nullptr);
    std::vector<double> next(static_cast<std::size_t>(h));
    for (int id : ctx.prompt) {
        kernel.advance(state, id, next);
        std::swap(state, next);
    }

    Rollout rollout;
    std::vector<double> raw(static_cast<std::size_t>(v));
    std::vector<double> tempered(static_cast<std::size_t>(v));
    for (int step = 0; step < max_len; ++step) {
        kernel.logits(state, raw);
        int tok;
        if (rng == nullptr) {
            tok = 0;
            for (int j = 1; j < v; ++j) {
                if (raw[static_cast<std::size_t>(j)] > raw[static_cast<std::size_t>(tok)]) tok = j;
            }
        } else {
            for (int j = 0; j < v; ++j) tempered[static_cast<std::size_t>(j)] = raw[static_cast<std::size_t>(j)] / temperature;
            PolicyKernel::softmax_inplace(tempered);
            tok = static_cast<int>(rng->categorical(tempered));
        }
        // Recorded log-probability is always at temperature 1.
        const double raw_logit = raw[static_cast<std::size_t>(tok)];
        const double lse = PolicyKernel::softmax_inplace(raw);
        rollout.tokens.push_back(tok);
        rollout.per_token_logprob.push_back(raw_logit - lse);
        rollout.total_logprob += rollout.per_token_logprob.back();
        if (tok == eos_id) break;
        kernel.advance(state, tok, next);
        std::swap(state, next);
    }
    return rollout;
}

}  // namespace

std::vector<Rollout> sample_candidates(const PolicyParams& params, const PromptContext& ctx,
                                       int n, double temperature, int max_len, int eos_id,
                                       std::uint64_t rng_seed) {
    if (n < 1) throw Error("sample_candidates: n must be >= 1");
    if (!(temperature > 0.0)) throw Error("sample_candidates: temperature must be positive");
    std::vector<Rollout> rollouts;
    rollouts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(rng_seed, static_cast<std::uint64_t>(i)));
        rollouts.push_back(decode_loop(params, ctx, max_len, eos_id, temperature, &rng));
    }
    return rollouts;
}

Rollout greedy_decode(const PolicyParams& params, const PromptContext& ctx, int max_len,
                      int eos_id) {
    return decode_loop(params, ctx, max_len, eos_id, 1.0, nullptr);
}

}  // namespace grpolab

// Copyright 2026 The gercodes Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// A small pre-LayerNorm transformer decoder that generates entity codes
// conditioned on query vectors, trained with label-smoothed cross-entropy.
//
// Sequence layout for a query of n_query rows and a code c_1..c_L:
//
//   [ q_1 .. q_nq | BOC c_1 .. c_{L-1} ]
//
// Query rows attend to each other only; code rows attend to every query row
// and causally to earlier code rows. The output at code row i predicts c_{i+1}
// over V + 2 classes (0 = begin-of-code, 1..V, V + 1 = end-of-code).
//
// Gradients are computed by explicit reverse-mode passes over cached
// activations; all arithmetic is in double precision.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gercodes/codetrie.hpp"
#include "gercodes/embedding.hpp"
#include "gercodes/error.hpp"
#include "gercodes/matrix.hpp"
#include "gercodes/parallel.hpp"
#include "gercodes/rng.hpp"
#include "gercodes/tokenizer.hpp"

namespace ger {

inline constexpr double kPretrainLabelSmoothing = 0.3;
inline constexpr double kFinetuneLabelSmoothing = 0.1;

struct ModelConfig {
    std::uint32_t vocab_size = 0;  // V; the model scores V + 2 classes
    std::uint32_t d_model = 64;
    std::uint32_t n_layers = 1;
    std::uint32_t n_heads = 2;
    std::uint32_t d_ff = 0;  // 0 selects 4 * d_model
    std::uint32_t query_dim = 0;
    std::uint32_t n_query = 1;
    std::uint32_t max_len = 4;  // longest code the model can emit
    std::uint64_t seed = 0;

    std::uint32_t classes() const noexcept { return vocab_size + 2; }
    std::uint32_t ff() const noexcept { return d_ff != 0 ? d_ff : 4 * d_model; }
    std::uint32_t head_dim() const noexcept { return d_model / n_heads; }

    void validate() const {
        require(vocab_size >= 1, ErrorKind::kInvalidArgument, "model vocab_size must be >= 1");
        require(d_model >= 1 && n_heads >= 1 && d_model % n_heads == 0, ErrorKind::kInvalidArgument,
                "d_model must be a positive multiple of n_heads");
        require(query_dim >= 1 && n_query >= 1, ErrorKind::kInvalidArgument, "query_dim and n_query must be >= 1");
        require(max_len >= 1, ErrorKind::kInvalidArgument, "max_len must be >= 1");
    }
};

struct TensorRef {
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const noexcept { return rows * cols; }
};

struct LayerParams {
    TensorRef ln1_g, ln1_b;
    TensorRef wq, bq, wk, bk, wv, bv, wo, bo;
    TensorRef ln2_g, ln2_b;
    TensorRef w1, b1, w2, b2;
};

// All parameters live in one flat buffer; this is the fixed tensor order used
// by checkpoints, the optimizer and gradient checks.
struct ParamLayout {
    TensorRef w_in, b_in, prefix_pos;
    TensorRef tok_emb, code_pos;
    std::vector<LayerParams> layers;
    TensorRef lnf_g, lnf_b;
    TensorRef w_out, b_out;
    std::vector<std::pair<std::string, TensorRef>> tensors;
    std::size_t total = 0;

    static ParamLayout make(const ModelConfig& cfg) {
        ParamLayout p;
        auto add = [&p](std::string name, std::size_t rows, std::size_t cols) {
            TensorRef t{p.total, rows, cols};
            p.total += rows * cols;
            p.tensors.emplace_back(std::move(name), t);
            return t;
        };
        const std::size_t d = cfg.d_model;
        p.w_in = add("w_in", cfg.query_dim, d);
        p.b_in = add("b_in", 1, d);
        p.prefix_pos = add("prefix_pos", cfg.n_query, d);
        p.tok_emb = add("tok_emb", cfg.classes(), d);
        p.code_pos = add("code_pos", cfg.max_len, d);
        for (std::uint32_t l = 0; l < cfg.n_layers; ++l) {
            const std::string pre = "layer" + std::to_string(l) + ".";
            LayerParams lp;
            lp.ln1_g = add(pre + "ln1_g", 1, d);
            lp.ln1_b = add(pre + "ln1_b", 1, d);
            lp.wq = add(pre + "wq", d, d);
            lp.bq = add(pre + "bq", 1, d);
            lp.wk = add(pre + "wk", d, d);
            lp.bk = add(pre + "bk", 1, d);
            lp.wv = add(pre + "wv", d, d);
            lp.bv = add(pre + "bv", 1, d);
            lp.wo = add(pre + "wo", d, d);
            lp.bo = add(pre + "bo", 1, d);
            lp.ln2_g = add(pre + "ln2_g", 1, d);
            lp.ln2_b = add(pre + "ln2_b", 1, d);
            lp.w1 = add(pre + "w1", d, cfg.ff());
            lp.b1 = add(pre + "b1", 1, cfg.ff());
            lp.w2 = add(pre + "w2", cfg.ff(), d);
            lp.b2 = add(pre + "b2", 1, d);
            p.layers.push_back(lp);
        }
        p.lnf_g = add("lnf_g", 1, d);
        p.lnf_b = add("lnf_b", 1, d);
        p.w_out = add("w_out", d, cfg.classes());
        p.b_out = add("b_out", 1, cfg.classes());
        return p;
    }
};

class TinyGerModel {
   public:
    TinyGerModel() = default;

    explicit TinyGerModel(const ModelConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        layout_ = ParamLayout::make(cfg_);
        params_.assign(layout_.total, 0.0);
        initialize();
    }

    const ModelConfig& config() const noexcept { return cfg_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    std::vector<double>& params() noexcept { return params_; }
    const std::vector<double>& params() const noexcept { return params_; }

    std::span<double> tensor(const TensorRef& t) { return {params_.data() + t.offset, t.size()}; }
    std::span<const double> tensor(const TensorRef& t) const { return {params_.data() + t.offset, t.size()}; }
    const double* ptr(const TensorRef& t) const { return params_.data() + t.offset; }

    bool all_finite() const {
        return std::all_of(params_.begin(), params_.end(), [](double x) { return std::isfinite(x); });
    }

    bool operator==(const TinyGerModel& o) const {
        return std::memcmp(&cfg_, &o.cfg_, sizeof(ModelConfig)) == 0 && params_ == o.params_;
    }

   private:
    void initialize() {
        Rng rng(derive_seed(cfg_.seed, "tinyger/init"));
        auto fill_normal = [&](const TensorRef& t, double std) {
            for (auto& x : tensor(t)) x = std * rng.normal();
        };
        auto fill_const = [&](const TensorRef& t, double v) {
            for (auto& x : tensor(t)) x = v;
        };
        const double d = cfg_.d_model;
        fill_normal(layout_.w_in, 1.0 / std::sqrt(static_cast<double>(cfg_.query_dim)));
        fill_normal(layout_.prefix_pos, 0.1);
        fill_normal(layout_.tok_emb, 1.0);
        fill_normal(layout_.code_pos, 0.1);
        for (const auto& lp : layout_.layers) {
            fill_const(lp.ln1_g, 1.0);
            fill_const(lp.ln2_g, 1.0);
            for (const auto* w : {&lp.wq, &lp.wk, &lp.wv, &lp.wo, &lp.w1}) fill_normal(*w, 1.0 / std::sqrt(d));
            fill_normal(lp.w2, 1.0 / std::sqrt(static_cast<double>(cfg_.ff())));
        }
        fill_const(layout_.lnf_g, 1.0);
        fill_normal(layout_.w_out, 1.0 / std::sqrt(d));
    }

    ModelConfig cfg_;
    ParamLayout layout_;
    std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Primitive kernels (row-major, T rows)

namespace nn {

inline constexpr double kLayerNormEps = 1e-5;

// Y = X W + b.  X: T x in, W: in x out.
inline void linear(const double* x, std::size_t rows, std::size_t in, const double* w, const double* b,
                   std::size_t out, double* y) {
    for (std::size_t t = 0; t < rows; ++t) {
        double* yr = y + t * out;
        std::copy(b, b + out, yr);
        const double* xr = x + t * in;
        for (std::size_t i = 0; i < in; ++i) {
            const double xi = xr[i];
            const double* wr = w + i * out;
            for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wr[o];
        }
    }
}

// Accumulates dX += dY W^T, dW += X^T dY, db += sum_t dY.  dx may be null.
inline void linear_backward(const double* x, std::size_t rows, std::size_t in, const double* w, std::size_t out,
                            const double* dy, double* dx, double* dw, double* db) {
    for (std::size_t t = 0; t < rows; ++t) {
        const double* dyr = dy + t * out;
        const double* xr = x + t * in;
        for (std::size_t o = 0; o < out; ++o) db[o] += dyr[o];
        for (std::size_t i = 0; i < in; ++i) {
            const double* wr = w + i * out;
            double* dwr = dw + i * out;
            const double xi = xr[i];
            double acc = 0.0;
            for (std::size_t o = 0; o < out; ++o) {
                acc += dyr[o] * wr[o];
                dwr[o] += xi * dyr[o];
            }
            if (dx) dx[t * in + i] += acc;
        }
    }
}

inline void layer_norm(const double* x, std::size_t rows, std::size_t d, const double* g, const double* b, double* y,
                       double* xhat, double* rstd) {
    for (std::size_t t = 0; t < rows; ++t) {
        const double* xr = x + t * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xr[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
        var /= static_cast<double>(d);
        const double r = 1.0 / std::sqrt(var + kLayerNormEps);
        rstd[t] = r;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xr[j] - mean) * r;
            xhat[t * d + j] = h;
            y[t * d + j] = g[j] * h + b[j];
        }
    }
}

inline void layer_norm_backward(std::size_t rows, std::size_t d, const double* g, const double* xhat,
                                const double* rstd, const double* dy, double* dx, double* dg, double* db) {
    std::vector<double> dxhat(d);
    for (std::size_t t = 0; t < rows; ++t) {
        const double* dyr = dy + t * d;
        const double* hr = xhat + t * d;
        double mean_dh = 0.0;
        double mean_dh_h = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dg[j] += dyr[j] * hr[j];
            db[j] += dyr[j];
            dxhat[j] = dyr[j] * g[j];
            mean_dh += dxhat[j];
            mean_dh_h += dxhat[j] * hr[j];
        }
        mean_dh /= static_cast<double>(d);
        mean_dh_h /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
            dx[t * d + j] += rstd[t] * (dxhat[j] - mean_dh - hr[j] * mean_dh_h);
        }
    }
}

inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
inline constexpr double kGeluA = 0.044715;

inline double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

inline double gelu_grad(double x) {
    const double t = std::tanh(kGeluC * (x + kGeluA * x * x * x));
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

// Numerically stable log-softmax of one row.
inline void log_softmax(std::span<const double> logits, std::span<double> out) {
    double m = -std::numeric_limits<double>::infinity();
    for (double z : logits) m = std::max(m, z);
    double s = 0.0;
    for (double z : logits) s += std::exp(z - m);
    const double lse = m + std::log(s);
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

inline void check_finite(const std::vector<double>& v, const char* what, std::size_t layer) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            fail(ErrorKind::kNonFinite, std::string("non-finite activation in ") + what +
                                            (layer == SIZE_MAX ? std::string() : " of layer " + std::to_string(layer)));
        }
    }
}

}  // namespace nn

// ---------------------------------------------------------------------------
// Full-sequence forward / backward

struct LayerCache {
    std::vector<double> x_in, ln1_xhat, ln1_rstd, a, q, k, v, attn, ctx, h;
    std::vector<double> ln2_xhat, ln2_rstd, m, f_pre, f_act;
};

struct ForwardCache {
    std::size_t rows = 0;     // n_query + number of code inputs
    std::size_t n_query = 0;
    std::size_t n_code = 0;
    std::vector<TokenValue> inputs;  // BOC followed by teacher-forced tokens
    std::vector<double> x0;
    std::vector<LayerCache> layers;
    std::vector<double> x_final, lnf_xhat, lnf_rstd, z;
    std::vector<double> logits;  // n_code x classes
};

inline bool attention_allowed(std::size_t t, std::size_t u, std::size_t n_query) {
    return t < n_query ? u < n_query : u <= t;
}

// Runs the decoder over the query rows plus `inputs` (the first must be
// the begin-of-code value) and fills cache.logits with one row per input.
inline void forward_logits(const TinyGerModel& model, const Matrix& query, std::span<const TokenValue> inputs,
                           ForwardCache& cache) {
    const auto& cfg = model.config();
    const auto& P = model.layout();
    require(query.rows() == cfg.n_query && query.cols() == cfg.query_dim, ErrorKind::kDimensionMismatch,
            "query must be " + std::to_string(cfg.n_query) + " x " + std::to_string(cfg.query_dim));
    require(!inputs.empty() && inputs.size() <= cfg.max_len, ErrorKind::kInvalidArgument,
            "code inputs must number 1.." + std::to_string(cfg.max_len));
    const std::size_t d = cfg.d_model;
    const std::size_t nq = cfg.n_query;
    const std::size_t n = inputs.size();
    const std::size_t T = nq + n;
    const std::size_t H = cfg.n_heads;
    const std::size_t dh = cfg.head_dim();
    const std::size_t ff = cfg.ff();
    const std::size_t K = cfg.classes();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    cache.rows = T;
    cache.n_query = nq;
    cache.n_code = n;
    cache.inputs.assign(inputs.begin(), inputs.end());
    cache.x0.assign(T * d, 0.0);

    nn::linear(query.data().data(), nq, cfg.query_dim, model.ptr(P.w_in), model.ptr(P.b_in), d, cache.x0.data());
    const double* ppos = model.ptr(P.prefix_pos);
    for (std::size_t t = 0; t < nq * d; ++t) cache.x0[t] += ppos[t];
    const double* emb = model.ptr(P.tok_emb);
    const double* cpos = model.ptr(P.code_pos);
    for (std::size_t i = 0; i < n; ++i) {
        require(inputs[i] < K, ErrorKind::kInvalidArgument, "input token out of range");
        double* xr = cache.x0.data() + (nq + i) * d;
        for (std::size_t j = 0; j < d; ++j) xr[j] = emb[inputs[i] * d + j] + cpos[i * d + j];
    }

    cache.layers.resize(cfg.n_layers);
    const std::vector<double>* x = &cache.x0;
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto& lp = P.layers[l];
        auto& c = cache.layers[l];
        c.x_in = *x;
        c.ln1_xhat.assign(T * d, 0.0);
        c.ln1_rstd.assign(T, 0.0);
        c.a.assign(T * d, 0.0);
        nn::layer_norm(c.x_in.data(), T, d, model.ptr(lp.ln1_g), model.ptr(lp.ln1_b), c.a.data(), c.ln1_xhat.data(),
                       c.ln1_rstd.data());
        c.q.assign(T * d, 0.0);
        c.k.assign(T * d, 0.0);
        c.v.assign(T * d, 0.0);
        nn::linear(c.a.data(), T, d, model.ptr(lp.wq), model.ptr(lp.bq), d, c.q.data());
        nn::linear(c.a.data(), T, d, model.ptr(lp.wk), model.ptr(lp.bk), d, c.k.data());
        nn::linear(c.a.data(), T, d, model.ptr(lp.wv), model.ptr(lp.bv), d, c.v.data());

        c.attn.assign(H * T * T, 0.0);
        c.ctx.assign(T * d, 0.0);
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t off = h * dh;
            for (std::size_t t = 0; t < T; ++t) {
                double* p = c.attn.data() + (h * T + t) * T;
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t u = 0; u < T; ++u) {
                    if (!attention_allowed(t, u, nq)) continue;
                    double s = 0.0;
                    for (std::size_t j = 0; j < dh; ++j) s += c.q[t * d + off + j] * c.k[u * d + off + j];
                    p[u] = s * scale;
                    mx = std::max(mx, p[u]);
                }
                double sum = 0.0;
                for (std::size_t u = 0; u < T; ++u) {
                    if (!attention_allowed(t, u, nq)) continue;
                    p[u] = std::exp(p[u] - mx);
                    sum += p[u];
                }
                for (std::size_t u = 0; u < T; ++u) {
                    if (!attention_allowed(t, u, nq)) continue;
                    p[u] /= sum;
                    for (std::size_t j = 0; j < dh; ++j) c.ctx[t * d + off + j] += p[u] * c.v[u * d + off + j];
                }
            }
        }
        c.h.assign(T * d, 0.0);
        nn::linear(c.ctx.data(), T, d, model.ptr(lp.wo), model.ptr(lp.bo), d, c.h.data());
        for (std::size_t i = 0; i < T * d; ++i) c.h[i] += c.x_in[i];
        nn::check_finite(c.h, "attention", l);

        c.ln2_xhat.assign(T * d, 0.0);
        c.ln2_rstd.assign(T, 0.0);
        c.m.assign(T * d, 0.0);
        nn::layer_norm(c.h.data(), T, d, model.ptr(lp.ln2_g), model.ptr(lp.ln2_b), c.m.data(), c.ln2_xhat.data(),
                       c.ln2_rstd.data());
        c.f_pre.assign(T * ff, 0.0);
        nn::linear(c.m.data(), T, d, model.ptr(lp.w1), model.ptr(lp.b1), ff, c.f_pre.data());
        c.f_act.resize(T * ff);
        for (std::size_t i = 0; i < T * ff; ++i) c.f_act[i] = nn::gelu(c.f_pre[i]);

        auto& next = (l + 1 < cfg.n_layers) ? cache.layers[l + 1].x_in : cache.x_final;
        next.assign(T * d, 0.0);
        nn::linear(c.f_act.data(), T, ff, model.ptr(lp.w2), model.ptr(lp.b2), d, next.data());
        for (std::size_t i = 0; i < T * d; ++i) next[i] += c.h[i];
        nn::check_finite(next, "feed-forward", l);
        x = &next;
    }
    if (cfg.n_layers == 0) cache.x_final = cache.x0;

    // Final norm and projection on code rows only.
    cache.lnf_xhat.assign(n * d, 0.0);
    cache.lnf_rstd.assign(n, 0.0);
    cache.z.assign(n * d, 0.0);
    nn::layer_norm(cache.x_final.data() + nq * d, n, d, model.ptr(P.lnf_g), model.ptr(P.lnf_b), cache.z.data(),
                   cache.lnf_xhat.data(), cache.lnf_rstd.data());
    cache.logits.assign(n * K, 0.0);
    nn::linear(cache.z.data(), n, d, model.ptr(P.w_out), model.ptr(P.b_out), K, cache.logits.data());
    nn::check_finite(cache.logits, "output projection", SIZE_MAX);
}

// Teacher-forced decoder inputs for a target code: BOC, c_1, ..., c_{L-1}.
inline std::vector<TokenValue> teacher_inputs(std::span<const TokenValue> target) {
    std::vector<TokenValue> inputs;
    inputs.reserve(target.size());
    inputs.push_back(kBeginOfCode);
    for (std::size_t i = 0; i + 1 < target.size(); ++i) inputs.push_back(target[i]);
    return inputs;
}

// Mean over positions of label-smoothed cross-entropy. When `dlogits` is
// non-null it receives d(loss)/d(logits) times `scale`.
inline double smoothed_cross_entropy(std::span<const double> logits, std::size_t classes,
                                     std::span<const TokenValue> target, double label_smoothing,
                                     std::vector<double>* dlogits = nullptr, double scale = 1.0) {
    const std::size_t n = target.size();
    std::vector<double> logp(classes);
    double loss = 0.0;
    if (dlogits) dlogits->assign(n * classes, 0.0);
    const double off = label_smoothing / static_cast<double>(classes);
    for (std::size_t i = 0; i < n; ++i) {
        nn::log_softmax(logits.subspan(i * classes, classes), logp);
        double li = 0.0;
        for (std::size_t j = 0; j < classes; ++j) {
            const double q = off + (j == target[i] ? 1.0 - label_smoothing : 0.0);
            li -= q * logp[j];
            if (dlogits) (*dlogits)[i * classes + j] = scale * (std::exp(logp[j]) - q) / static_cast<double>(n);
        }
        loss += li;
    }
    return loss / static_cast<double>(n);
}

struct TrainingExample {
    Matrix query;  // n_query x query_dim
    std::vector<TokenValue> target;
};

struct ForwardResult {
    double loss = 0.0;
    Matrix logits;  // L x (V + 2)
};

inline void check_target(const TinyGerModel& model, std::span<const TokenValue> target) {
    const auto& cfg = model.config();
    require(!target.empty() && target.size() <= cfg.max_len, ErrorKind::kInvalidArgument,
            "target length must be 1.." + std::to_string(cfg.max_len));
    for (TokenValue v : target) {
        require(v >= 1 && v < cfg.classes(), ErrorKind::kInvalidArgument,
                "target value " + std::to_string(v) + " outside [1, V + 1]");
    }
}

inline ForwardResult forward_loss(const TinyGerModel& model, const TrainingExample& ex, double label_smoothing) {
    require(label_smoothing >= 0.0 && label_smoothing < 1.0, ErrorKind::kInvalidArgument,
            "label smoothing must lie in [0, 1)");
    check_target(model, ex.target);
    ForwardCache cache;
    forward_logits(model, ex.query, teacher_inputs(ex.target), cache);
    const std::size_t K = model.config().classes();
    ForwardResult r;
    r.loss = smoothed_cross_entropy(cache.logits, K, ex.target, label_smoothing);
    r.logits = Matrix(ex.target.size(), K);
    std::copy(cache.logits.begin(), cache.logits.end(), r.logits.data().begin());
    return r;
}

// Reverse pass over `cache`; accumulates scale * d(loss)/d(params) into grad.
// Returns the loss.
inline double backward_from_cache(const TinyGerModel& model, const Matrix& query, std::span<const TokenValue> target,
                                  double label_smoothing, const ForwardCache& cache, std::span<double> grad,
                                  double scale = 1.0) {
    const auto& cfg = model.config();
    const auto& P = model.layout();
    require(grad.size() == P.total, ErrorKind::kDimensionMismatch, "gradient buffer size mismatch");
    const std::size_t d = cfg.d_model;
    const std::size_t nq = cache.n_query;
    const std::size_t n = cache.n_code;
    const std::size_t T = cache.rows;
    const std::size_t H = cfg.n_heads;
    const std::size_t dh = cfg.head_dim();
    const std::size_t ff = cfg.ff();
    const std::size_t K = cfg.classes();
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
    auto g = [&](const TensorRef& t) { return grad.data() + t.offset; };

    std::vector<double> dlogits;
    const double loss = smoothed_cross_entropy(cache.logits, K, target, label_smoothing, &dlogits, scale);

    std::vector<double> dz(n * d, 0.0);
    nn::linear_backward(cache.z.data(), n, d, model.ptr(P.w_out), K, dlogits.data(), dz.data(), g(P.w_out),
                        g(P.b_out));
    std::vector<double> dx(T * d, 0.0);
    nn::layer_norm_backward(n, d, model.ptr(P.lnf_g), cache.lnf_xhat.data(), cache.lnf_rstd.data(), dz.data(),
                            dx.data() + nq * d, g(P.lnf_g), g(P.lnf_b));

    for (std::size_t l = cfg.n_layers; l-- > 0;) {
        const auto& lp = P.layers[l];
        const auto& c = cache.layers[l];
        // x_out = h + W2 gelu(W1 LN2(h) + b1) + b2
        std::vector<double> dh_res = dx;
        std::vector<double> dact(T * ff, 0.0);
        nn::linear_backward(c.f_act.data(), T, ff, model.ptr(lp.w2), d, dx.data(), dact.data(), g(lp.w2), g(lp.b2));
        for (std::size_t i = 0; i < T * ff; ++i) dact[i] *= nn::gelu_grad(c.f_pre[i]);
        std::vector<double> dm(T * d, 0.0);
        nn::linear_backward(c.m.data(), T, d, model.ptr(lp.w1), ff, dact.data(), dm.data(), g(lp.w1), g(lp.b1));
        nn::layer_norm_backward(T, d, model.ptr(lp.ln2_g), c.ln2_xhat.data(), c.ln2_rstd.data(), dm.data(),
                                dh_res.data(), g(lp.ln2_g), g(lp.ln2_b));

        // h = x_in + Wo ctx + bo
        std::vector<double> dx_in = dh_res;
        std::vector<double> dctx(T * d, 0.0);
        nn::linear_backward(c.ctx.data(), T, d, model.ptr(lp.wo), d, dh_res.data(), dctx.data(), g(lp.wo), g(lp.bo));

        std::vector<double> dq(T * d, 0.0), dk(T * d, 0.0), dv(T * d, 0.0);
        std::vector<double> dp(T);
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t off = h * dh;
            for (std::size_t t = 0; t < T; ++t) {
                const double* p = c.attn.data() + (h * T + t) * T;
                double dot_pdp = 0.0;
                for (std::size_t u = 0; u < T; ++u) {
                    if (!attention_allowed(t, u, nq)) continue;
                    double s = 0.0;
                    for (std::size_t j = 0; j < dh; ++j) {
                        s += dctx[t * d + off + j] * c.v[u * d + off + j];
                        dv[u * d + off + j] += p[u] * dctx[t * d + off + j];
                    }
                    dp[u] = s;
                    dot_pdp += p[u] * s;
                }
                for (std::size_t u = 0; u < T; ++u) {
                    if (!attention_allowed(t, u, nq)) continue;
                    const double ds = p[u] * (dp[u] - dot_pdp) * att_scale;
                    for (std::size_t j = 0; j < dh; ++j) {
                        dq[t * d + off + j] += ds * c.k[u * d + off + j];
                        dk[u * d + off + j] += ds * c.q[t * d + off + j];
                    }
                }
            }
        }
        std::vector<double> da(T * d, 0.0);
        nn::linear_backward(c.a.data(), T, d, model.ptr(lp.wq), d, dq.data(), da.data(), g(lp.wq), g(lp.bq));
        nn::linear_backward(c.a.data(), T, d, model.ptr(lp.wk), d, dk.data(), da.data(), g(lp.wk), g(lp.bk));
        nn::linear_backward(c.a.data(), T, d, model.ptr(lp.wv), d, dv.data(), da.data(), g(lp.wv), g(lp.bv));
        nn::layer_norm_backward(T, d, model.ptr(lp.ln1_g), c.ln1_xhat.data(), c.ln1_rstd.data(), da.data(),
                                dx_in.data(), g(lp.ln1_g), g(lp.ln1_b));
        dx = std::move(dx_in);
    }

    // Embeddings.
    for (std::size_t i = 0; i < n; ++i) {
        const TokenValue tok = cache.inputs[i];
        double* ge = g(P.tok_emb) + tok * d;
        double* gp = g(P.code_pos) + i * d;
        const double* dr = dx.data() + (nq + i) * d;
        for (std::size_t j = 0; j < d; ++j) {
            ge[j] += dr[j];
            gp[j] += dr[j];
        }
    }
    double* gpp = g(P.prefix_pos);
    for (std::size_t i = 0; i < nq * d; ++i) gpp[i] += dx[i];
    nn::linear_backward(query.data().data(), nq, cfg.query_dim, model.ptr(P.w_in), d, dx.data(), nullptr, g(P.w_in),
                        g(P.b_in));
    return loss;
}

// Exact gradient of forward_loss with respect to every parameter, in the
// layout's flat order.
inline std::vector<double> backward(const TinyGerModel& model, const TrainingExample& ex, double label_smoothing) {
    require(label_smoothing >= 0.0 && label_smoothing < 1.0, ErrorKind::kInvalidArgument,
            "label smoothing must lie in [0, 1)");
    check_target(model, ex.target);
    ForwardCache cache;
    forward_logits(model, ex.query, teacher_inputs(ex.target), cache);
    std::vector<double> grad(model.layout().total, 0.0);
    backward_from_cache(model, ex.query, ex.target, label_smoothing, cache, grad);
    return grad;
}

// Sum of per-example gradients divided by `normalizer` (0 means the batch
// size) written to `grad`; returns the mean loss. Per-example gradients are
// reduced in index order, so the result does not depend on `threads`.
inline double batch_gradient(const TinyGerModel& model, std::span<const TrainingExample> data,
                             std::span<const std::size_t> batch, double label_smoothing, std::vector<double>& grad,
                             std::size_t threads = 1, double normalizer = 0.0) {
    require(!batch.empty(), ErrorKind::kEmptyInput, "empty batch");
    const std::size_t total = model.layout().total;
    const double norm = normalizer > 0.0 ? normalizer : static_cast<double>(batch.size());
    grad.assign(total, 0.0);
    std::vector<double> losses(batch.size(), 0.0);
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, batch.size()));
    if (workers == 1) {
        ForwardCache cache;
        std::vector<double> one(total);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const auto& ex = data[batch[b]];
            check_target(model, ex.target);
            std::fill(one.begin(), one.end(), 0.0);
            forward_logits(model, ex.query, teacher_inputs(ex.target), cache);
            losses[b] = backward_from_cache(model, ex.query, ex.target, label_smoothing, cache, one);
            for (std::size_t i = 0; i < total; ++i) grad[i] += one[i];
        }
    } else {
        std::vector<std::vector<double>> per(batch.size());
        parallel_for(batch.size(), workers, [&](std::size_t b) {
            const auto& ex = data[batch[b]];
            check_target(model, ex.target);
            ForwardCache cache;
            per[b].assign(total, 0.0);
            forward_logits(model, ex.query, teacher_inputs(ex.target), cache);
            losses[b] = backward_from_cache(model, ex.query, ex.target, label_smoothing, cache, per[b]);
        });
        for (const auto& one : per) {
            for (std::size_t i = 0; i < total; ++i) grad[i] += one[i];
        }
    }
    for (auto& x : grad) x /= norm;
    double mean = 0.0;
    for (double l : losses) mean += l;
    return mean / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
    std::size_t steps = 1000;
    std::size_t batch_size = 32;
    double lr = 0.05;
    double momentum = 0.9;
    double label_smoothing = kFinetuneLabelSmoothing;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    // Abort when the batch loss stays above divergence_factor x the first
    // batch loss for divergence_window consecutive steps.
    double divergence_factor = 10.0;
    std::size_t divergence_window = 100;
};

struct TrainReport {
    std::vector<double> loss_curve;  // mean batch loss per step
};

// SGD with momentum over shuffled epochs.
inline TrainReport train(TinyGerModel& model, std::span<const TrainingExample> data, const TrainOptions& opts) {
    require(!data.empty(), ErrorKind::kEmptyInput, "training set is empty");
    require(opts.batch_size >= 1, ErrorKind::kInvalidArgument, "batch_size must be >= 1");
    Rng rng(derive_seed(opts.seed, "tinyger/train"));
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));
    std::size_t cursor = 0;

    auto& params = model.params();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> grad;
    std::vector<std::size_t> batch(opts.batch_size);
    TrainReport report;
    report.loss_curve.reserve(opts.steps);
    std::size_t above = 0;
    for (std::size_t step = 0; step < opts.steps; ++step) {
        for (auto& b : batch) {
            if (cursor == order.size()) {
                rng.shuffle(std::span<std::size_t>(order));
                cursor = 0;
            }
            b = order[cursor++];
        }
        double loss = 0.0;
        try {
            loss = batch_gradient(model, data, batch, opts.label_smoothing, grad, opts.threads);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::kNonFinite) throw;
            fail(ErrorKind::kDiverged, "step " + std::to_string(step) + ": " + e.what());
        }
        if (!std::isfinite(loss)) {
            fail(ErrorKind::kDiverged, "non-finite loss at step " + std::to_string(step));
        }
        report.loss_curve.push_back(loss);
        if (loss > opts.divergence_factor * report.loss_curve.front()) {
            if (++above >= opts.divergence_window) {
                fail(ErrorKind::kDiverged, "loss " + std::to_string(loss) + " above " +
                                               std::to_string(opts.divergence_factor) + "x initial " +
                                               std::to_string(report.loss_curve.front()) + " for " +
                                               std::to_string(above) + " steps (step " + std::to_string(step) + ")");
            }
        } else {
            above = 0;
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            velocity[i] = opts.momentum * velocity[i] + grad[i];
            params[i] -= opts.lr * velocity[i];
        }
        if (!model.all_finite()) fail(ErrorKind::kDiverged, "non-finite parameter after step " + std::to_string(step));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Incremental decoding with per-layer key/value caches

struct DecodeStats {
    // Query-key dot products evaluated, summed over layers and heads.
    std::uint64_t attention_dots = 0;
    std::uint64_t steps = 0;
};

struct DecodeState {
    std::vector<std::vector<double>> keys;    // per layer, positions x d
    std::vector<std::vector<double>> values;  // per layer, positions x d
    std::size_t positions = 0;
    std::size_t code_inputs = 0;
};

inline DecodeState start_decoding(const TinyGerModel& model, const Matrix& query) {
    const auto& cfg = model.config();
    const auto& P = model.layout();
    require(query.rows() == cfg.n_query && query.cols() == cfg.query_dim, ErrorKind::kDimensionMismatch,
            "query must be " + std::to_string(cfg.n_query) + " x " + std::to_string(cfg.query_dim));
    const std::size_t d = cfg.d_model;
    const std::size_t nq = cfg.n_query;
    const std::size_t H = cfg.n_heads;
    const std::size_t dh = cfg.head_dim();
    const std::size_t ff = cfg.ff();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    DecodeState st;
    st.keys.resize(cfg.n_layers);
    st.values.resize(cfg.n_layers);
    std::vector<double> x(nq * d, 0.0);
    nn::linear(query.data().data(), nq, cfg.query_dim, model.ptr(P.w_in), model.ptr(P.b_in), d, x.data());
    const double* ppos = model.ptr(P.prefix_pos);
    for (std::size_t i = 0; i < nq * d; ++i) x[i] += ppos[i];

    std::vector<double> a(nq * d), xhat(nq * d), rstd(nq), q(nq * d), ctx(nq * d), h(nq * d), f(nq * ff),
        p(nq);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto& lp = P.layers[l];
        nn::layer_norm(x.data(), nq, d, model.ptr(lp.ln1_g), model.ptr(lp.ln1_b), a.data(), xhat.data(), rstd.data());
        auto& K = st.keys[l];
        auto& V = st.values[l];
        K.assign(nq * d, 0.0);
        V.assign(nq * d, 0.0);
        nn::linear(a.data(), nq, d, model.ptr(lp.wq), model.ptr(lp.bq), d, q.data());
        nn::linear(a.data(), nq, d, model.ptr(lp.wk), model.ptr(lp.bk), d, K.data());
        nn::linear(a.data(), nq, d, model.ptr(lp.wv), model.ptr(lp.bv), d, V.data());
        std::fill(ctx.begin(), ctx.end(), 0.0);
        for (std::size_t hd = 0; hd < H; ++hd) {
            const std::size_t off = hd * dh;
            for (std::size_t t = 0; t < nq; ++t) {
                double mx = -std::numeric_limits<double>::infinity();
                for (std::size_t u = 0; u < nq; ++u) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < dh; ++j) s += q[t * d + off + j] * K[u * d + off + j];
                    p[u] = s * scale;
                    mx = std::max(mx, p[u]);
                }
                double sum = 0.0;
                for (std::size_t u = 0; u < nq; ++u) {
                    p[u] = std::exp(p[u] - mx);
                    sum += p[u];
                }
                for (std::size_t u = 0; u < nq; ++u) {
                    const double w = p[u] / sum;
                    for (std::size_t j = 0; j < dh; ++j) ctx[t * d + off + j] += w * V[u * d + off + j];
                }
            }
        }
        nn::linear(ctx.data(), nq, d, model.ptr(lp.wo), model.ptr(lp.bo), d, h.data());
        for (std::size_t i = 0; i < nq * d; ++i) h[i] += x[i];
        nn::layer_norm(h.data(), nq, d, model.ptr(lp.ln2_g), model.ptr(lp.ln2_b), a.data(), xhat.data(), rstd.data());
        nn::linear(a.data(), nq, d, model.ptr(lp.w1), model.ptr(lp.b1), ff, f.data());
        for (auto& z : f) z = nn::gelu(z);
        nn::linear(f.data(), nq, ff, model.ptr(lp.w2), model.ptr(lp.b2), d, x.data());
        for (std::size_t i = 0; i < nq * d; ++i) x[i] += h[i];
    }
    st.positions = nq;
    return st;
}

// Feeds one code input (BOC first) and returns the logits for the next code
// token. Each call attends to every cached position plus itself.
inline std::vector<double> decode_step(const TinyGerModel& model, DecodeState& st, TokenValue input,
                                       DecodeStats* stats = nullptr) {
    const auto& cfg = model.config();
    const auto& P = model.layout();
    require(st.code_inputs < cfg.max_len, ErrorKind::kInvalidArgument, "decode past max_len");
    require(input < cfg.classes(), ErrorKind::kInvalidArgument, "input token out of range");
    const std::size_t d = cfg.d_model;
    const std::size_t H = cfg.n_heads;
    const std::size_t dh = cfg.head_dim();
    const std::size_t ff = cfg.ff();
    const std::size_t K = cfg.classes();
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const std::size_t pos = st.code_inputs;

    std::vector<double> x(d);
    const double* emb = model.ptr(P.tok_emb) + input * d;
    const double* cpos = model.ptr(P.code_pos) + pos * d;
    for (std::size_t j = 0; j < d; ++j) x[j] = emb[j] + cpos[j];

    std::vector<double> a(d), xhat(d), q(d), ctx(d), h(d), f(ff);
    double rstd = 0.0;
    const std::size_t n_pos = st.positions + 1;
    std::vector<double> p(n_pos);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const auto& lp = P.layers[l];
        nn::layer_norm(x.data(), 1, d, model.ptr(lp.ln1_g), model.ptr(lp.ln1_b), a.data(), xhat.data(), &rstd);
        auto& Kc = st.keys[l];
        auto& Vc = st.values[l];
        Kc.resize(n_pos * d);
        Vc.resize(n_pos * d);
        nn::linear(a.data(), 1, d, model.ptr(lp.wq), model.ptr(lp.bq), d, q.data());
        nn::linear(a.data(), 1, d, model.ptr(lp.wk), model.ptr(lp.bk), d, Kc.data() + st.positions * d);
        nn::linear(a.data(), 1, d, model.ptr(lp.wv), model.ptr(lp.bv), d, Vc.data() + st.positions * d);
        std::fill(ctx.begin(), ctx.end(), 0.0);
        for (std::size_t hd = 0; hd < H; ++hd) {
            const std::size_t off = hd * dh;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t u = 0; u < n_pos; ++u) {
                double s = 0.0;
                for (std::size_t j = 0; j < dh; ++j) s += q[off + j] * Kc[u * d + off + j];
                p[u] = s * scale;
                mx = std::max(mx, p[u]);
            }
            if (stats) stats->attention_dots += n_pos;
            double sum = 0.0;
            for (std::size_t u = 0; u < n_pos; ++u) {
                p[u] = std::exp(p[u] - mx);
                sum += p[u];
            }
            for (std::size_t u = 0; u < n_pos; ++u) {
                const double w = p[u] / sum;
                for (std::size_t j = 0; j < dh; ++j) ctx[off + j] += w * Vc[u * d + off + j];
            }
        }
        nn::linear(ctx.data(), 1, d, model.ptr(lp.wo), model.ptr(lp.bo), d, h.data());
        for (std::size_t j = 0; j < d; ++j) h[j] += x[j];
        nn::layer_norm(h.data(), 1, d, model.ptr(lp.ln2_g), model.ptr(lp.ln2_b), a.data(), xhat.data(), &rstd);
        nn::linear(a.data(), 1, d, model.ptr(lp.w1), model.ptr(lp.b1), ff, f.data());
        for (auto& z : f) z = nn::gelu(z);
        nn::linear(f.data(), 1, ff, model.ptr(lp.w2), model.ptr(lp.b2), d, x.data());
        for (std::size_t j = 0; j < d; ++j) x[j] += h[j];
    }
    st.positions = n_pos;
    ++st.code_inputs;
    if (stats) ++stats->steps;

    std::vector<double> z(d);
    nn::layer_norm(x.data(), 1, d, model.ptr(P.lnf_g), model.ptr(P.lnf_b), z.data(), xhat.data(), &rstd);
    std::vector<double> logits(K);
    nn::linear(z.data(), 1, d, model.ptr(P.w_out), model.ptr(P.b_out), K, logits.data());
    return logits;
}

// ---------------------------------------------------------------------------
// Beam search

struct Hypothesis {
    std::vector<TokenValue> code;
    double log_prob = 0.0;
};

struct BeamOptions {
    std::size_t beam_width = 3;
    std::size_t max_len = 4;
    const CodeTrie* trie = nullptr;             // restricts continuations when set
    std::optional<TokenValue> end_token;        // finishes a hypothesis early
};

// Ranked by total log-probability, ties by lexicographic code order.
inline bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.code < b.code;
}

inline std::vector<Hypothesis> beam_decode(const TinyGerModel& model, const Matrix& query, const BeamOptions& opts,
                                           DecodeStats* stats = nullptr) {
    require(opts.beam_width >= 1, ErrorKind::kInvalidArgument, "beam width must be >= 1");
    const std::size_t max_len = std::min<std::size_t>(opts.max_len, model.config().max_len);
    require(max_len >= 1, ErrorKind::kInvalidArgument, "max_len must be >= 1");
    const std::size_t K = model.config().classes();

    struct Beam {
        Hypothesis hyp;
        DecodeState state;
        CodeTrie::NodeId node = 0;
    };
    struct Candidate {
        Hypothesis hyp;
        std::size_t parent;
        CodeTrie::NodeId node;
    };

    std::vector<Beam> beams;
    beams.push_back({{}, start_decoding(model, query), opts.trie ? opts.trie->root() : 0});
    std::vector<Hypothesis> finished;
    std::vector<double> logp(K);

    for (std::size_t step = 0; step < max_len && !beams.empty(); ++step) {
        std::vector<Candidate> candidates;
        for (std::size_t b = 0; b < beams.size(); ++b) {
            auto& beam = beams[b];
            const TokenValue input = beam.hyp.code.empty() ? kBeginOfCode : beam.hyp.code.back();
            const auto logits = decode_step(model, beam.state, input, stats);
            nn::log_softmax(logits, logp);
            auto consider = [&](TokenValue v, CodeTrie::NodeId node) {
                Candidate c{beam.hyp, b, node};
                c.hyp.code.push_back(v);
                c.hyp.log_prob += logp[v];
                candidates.push_back(std::move(c));
            };
            if (opts.trie) {
                for (TokenValue v : opts.trie->next_values(beam.node)) {
                    if (v < K) consider(v, *opts.trie->child(beam.node, v));
                }
            } else {
                for (std::size_t v = 0; v < K; ++v) consider(static_cast<TokenValue>(v), 0);
            }
        }
        const std::size_t keep = std::min(opts.beam_width, candidates.size());
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                          [](const Candidate& a, const Candidate& b) { return ranks_before(a.hyp, b.hyp); });
        std::vector<Beam> next;
        for (std::size_t i = 0; i < keep; ++i) {
            auto& c = candidates[i];
            const bool ended = (opts.end_token && c.hyp.code.back() == *opts.end_token) || step + 1 == max_len ||
                               (opts.trie && opts.trie->next_values(c.node).empty());
            if (ended) {
                finished.push_back(std::move(c.hyp));
            } else {
                next.push_back({std::move(c.hyp), beams[c.parent].state, c.node});
            }
        }
        beams = std::move(next);
    }
    std::sort(finished.begin(), finished.end(), ranks_before);
    if (finished.size() > opts.beam_width) finished.resize(opts.beam_width);
    return finished;
}

// Argmax decoding through repeated full forward passes (no cache); ties go
// to the smallest token value.
inline Hypothesis greedy_decode(const TinyGerModel& model, const Matrix& query, std::size_t max_len,
                                std::optional<TokenValue> end_token = std::nullopt) {
    max_len = std::min<std::size_t>(max_len, model.config().max_len);
    const std::size_t K = model.config().classes();
    Hypothesis hyp;
    std::vector<TokenValue> inputs{kBeginOfCode};
    ForwardCache cache;
    std::vector<double> logp(K);
    for (std::size_t step = 0; step < max_len; ++step) {
        forward_logits(model, query, inputs, cache);
        nn::log_softmax(std::span<const double>(cache.logits).subspan(step * K, K), logp);
        const auto best = static_cast<TokenValue>(std::max_element(logp.begin(), logp.end()) - logp.begin());
        hyp.code.push_back(best);
        hyp.log_prob += logp[best];
        if (end_token && best == *end_token) break;
        inputs.push_back(best);
    }
    return hyp;
}

// log p(code | query) through one teacher-forced full forward pass.
inline double sequence_log_prob(const TinyGerModel& model, const Matrix& query, std::span<const TokenValue> code) {
    const std::size_t K = model.config().classes();
    ForwardCache cache;
    forward_logits(model, query, teacher_inputs(code), cache);
    std::vector<double> logp(K);
    double total = 0.0;
    for (std::size_t i = 0; i < code.size(); ++i) {
        nn::log_softmax(std::span<const double>(cache.logits).subspan(i * K, K), logp);
        total += logp[code[i]];
    }
    return total;
}

// ---------------------------------------------------------------------------
// Checkpoints: "TGER", u32 format version, u32 hyperparameters
// (vocab_size, d_model, n_layers, n_heads, d_ff, query_dim, n_query, max_len,
// seed low word, seed high word), u64 parameter count, then every parameter
// as a little-endian IEEE-754 double in ParamLayout order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(std::ostream& out, const TinyGerModel& model) {
    const auto& c = model.config();
    out.write("TGER", 4);
    for (std::uint32_t v : {kCheckpointVersion, c.vocab_size, c.d_model, c.n_layers, c.n_heads, c.d_ff, c.query_dim,
                            c.n_query, c.max_len, static_cast<std::uint32_t>(c.seed & 0xffffffffULL),
                            static_cast<std::uint32_t>(c.seed >> 32)}) {
        detail::put_u32(out, v);
    }
    detail::put_u64(out, model.params().size());
    for (double x : model.params()) detail::put_u64(out, std::bit_cast<std::uint64_t>(x));
}

inline TinyGerModel load_checkpoint(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TGER", 4) != 0) fail(ErrorKind::kParse, "missing TGER magic");
    const auto version = detail::get_u32(in);
    require(version == kCheckpointVersion, ErrorKind::kParse, "unsupported checkpoint version " + std::to_string(version));
    ModelConfig c;
    c.vocab_size = detail::get_u32(in);
    c.d_model = detail::get_u32(in);
    c.n_layers = detail::get_u32(in);
    c.n_heads = detail::get_u32(in);
    c.d_ff = detail::get_u32(in);
    c.query_dim = detail::get_u32(in);
    c.n_query = detail::get_u32(in);
    c.max_len = detail::get_u32(in);
    const std::uint64_t lo = detail::get_u32(in);
    const std::uint64_t hi = detail::get_u32(in);
    c.seed = lo | (hi << 32);
    TinyGerModel model(c);
    const auto count = detail::get_u64(in);
    require(count == model.params().size(), ErrorKind::kParse,
            "checkpoint holds " + std::to_string(count) + " parameters, layout expects " +
                std::to_string(model.params().size()));
    for (auto& x : model.params()) x = std::bit_cast<double>(detail::get_u64(in));
    require(model.all_finite(), ErrorKind::kNonFinite, "checkpoint has non-finite parameters");
    return model;
}

inline void save_checkpoint(const std::string& path, const TinyGerModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write checkpoint '" + path + "'");
    save_checkpoint(out, model);
}

inline TinyGerModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::kIo, "cannot open checkpoint '" + path + "'");
    try {
        return load_checkpoint(in);
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " in '" + path + "'");
    }
}

}  // namespace ger

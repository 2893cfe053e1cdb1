#pragma once

// Vision Transformer: patch extraction, token embedding, pre-norm encoder
// stack with multi-head self-attention, and a class-token classification
// head. Templated on the scalar so the full model runs in double for
// finite-difference verification.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vitc/common.hpp"
#include "vitc/ops.hpp"
#include "vitc/tensor.hpp"

namespace vitc::vit {

using core::Shape;
using core::Tensor;

struct ViTConfig {
    int image_size = 224;
    int patch_size = 16;
    int layers = 12;
    int hidden_d = 768;
    int mlp_size = 3072;
    int heads = 12;
    int num_classes = 1000;
    int channels = 3;
    double dropout = 0.0; // off by default; training-time knob

    int grid_side() const { return image_size / patch_size; }
    int num_patches() const { return grid_side() * grid_side(); }
    int seq_len() const { return num_patches() + 1; }
    int patch_dim() const { return patch_size * patch_size * channels; }

    void validate() const {
        if (image_size <= 0 || patch_size <= 0 || layers <= 0 || hidden_d <= 0 || mlp_size <= 0 || heads <= 0 ||
            num_classes <= 0 || channels <= 0)
            throw ValueError("ViTConfig: all dimensions must be positive");
        if (image_size % patch_size != 0)
            throw ValueError("ViTConfig: image_size " + std::to_string(image_size) +
                             " not divisible by patch_size " + std::to_string(patch_size));
        if (hidden_d % heads != 0)
            throw ValueError("ViTConfig: hidden_d " + std::to_string(hidden_d) + " not divisible by heads " +
                             std::to_string(heads));
        if (dropout < 0.0 || dropout >= 1.0) throw ValueError("ViTConfig: dropout must be in [0,1)");
    }

    static ViTConfig b16(int num_classes = 1000) {
        ViTConfig c;
        c.layers = 12;
        c.hidden_d = 768;
        c.mlp_size = 3072;
        c.heads = 12;
        c.num_classes = num_classes;
        return c;
    }

    static ViTConfig l16(int num_classes = 1000) {
        ViTConfig c;
        c.layers = 24;
        c.hidden_d = 1024;
        c.mlp_size = 4096;
        c.heads = 16;
        c.num_classes = num_classes;
        return c;
    }

    /// Desk-scale model for tests and smoke runs.
    static ViTConfig tiny(int num_classes = 7) {
        ViTConfig c;
        c.image_size = 32;
        c.patch_size = 8;
        c.layers = 2;
        c.hidden_d = 32;
        c.mlp_size = 64;
        c.heads = 2;
        c.num_classes = num_classes;
        return c;
    }
};

inline bool operator==(const ViTConfig& a, const ViTConfig& b) {
    return a.image_size == b.image_size && a.patch_size == b.patch_size && a.layers == b.layers &&
           a.hidden_d == b.hidden_d && a.mlp_size == b.mlp_size && a.heads == b.heads &&
           a.num_classes == b.num_classes && a.channels == b.channels;
}

/// The exact named-tensor set a config implies, in name order.
inline std::map<std::string, Shape> inventory(const ViTConfig& cfg) {
    cfg.validate();
    const int64_t d = cfg.hidden_d, m = cfg.mlp_size, k = cfg.num_classes;
    const int64_t pd = cfg.patch_dim(), s = cfg.seq_len();
    std::map<std::string, Shape> inv;
    inv["patch_embed.weight"] = {pd, d};
    inv["patch_embed.bias"] = {d};
    inv["class_token"] = {1, d};
    inv["pos_embed"] = {s, d};
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string p = "encoder." + std::to_string(l) + ".";
        inv[p + "ln1.gamma"] = {d};
        inv[p + "ln1.beta"] = {d};
        for (const char* w : {"wq", "wk", "wv", "wo"}) {
            inv[p + "attn." + w + ".weight"] = {d, d};
            inv[p + "attn." + w + ".bias"] = {d};
        }
        inv[p + "ln2.gamma"] = {d};
        inv[p + "ln2.beta"] = {d};
        inv[p + "mlp.fc1.weight"] = {d, m};
        inv[p + "mlp.fc1.bias"] = {m};
        inv[p + "mlp.fc2.weight"] = {m, d};
        inv[p + "mlp.fc2.bias"] = {d};
    }
    inv["final_norm.gamma"] = {d};
    inv["final_norm.beta"] = {d};
    inv["head.weight"] = {d, k};
    inv["head.bias"] = {k};
    return inv;
}

/// Exact parameter total implied by the config.
inline int64_t count_params(const ViTConfig& cfg) {
    int64_t total = 0;
    for (const auto& [name, shape] : inventory(cfg)) total += core::shape_numel(shape);
    return total;
}

template <typename T>
struct EncoderLayerParams {
    Tensor<T> ln1_gamma, ln1_beta;
    Tensor<T> wq, wq_bias, wk, wk_bias, wv, wv_bias, wo, wo_bias;
    Tensor<T> ln2_gamma, ln2_beta;
    Tensor<T> fc1, fc1_bias, fc2, fc2_bias;
};

template <typename T>
struct ModelParams {
    ViTConfig config;
    std::map<std::string, Tensor<T>> tensors;

    Tensor<T>& at(const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ValueError("unknown parameter tensor '" + name + "'");
        return it->second;
    }
    const Tensor<T>& at(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw ValueError("unknown parameter tensor '" + name + "'");
        return it->second;
    }

    EncoderLayerParams<T> layer(int l) const {
        const std::string p = "encoder." + std::to_string(l) + ".";
        return EncoderLayerParams<T>{at(p + "ln1.gamma"), at(p + "ln1.beta"),
                                     at(p + "attn.wq.weight"), at(p + "attn.wq.bias"),
                                     at(p + "attn.wk.weight"), at(p + "attn.wk.bias"),
                                     at(p + "attn.wv.weight"), at(p + "attn.wv.bias"),
                                     at(p + "attn.wo.weight"), at(p + "attn.wo.bias"),
                                     at(p + "ln2.gamma"), at(p + "ln2.beta"),
                                     at(p + "mlp.fc1.weight"), at(p + "mlp.fc1.bias"),
                                     at(p + "mlp.fc2.weight"), at(p + "mlp.fc2.bias")};
    }

    void set_requires_grad(bool on) {
        for (auto& [name, t] : tensors) t.set_requires_grad(on);
    }

    void zero_grad() {
        for (auto& [name, t] : tensors) t.zero_grad();
    }

    ModelParams clone() const {
        ModelParams out;
        out.config = config;
        for (const auto& [name, t] : tensors) out.tensors.emplace(name, t.clone());
        return out;
    }

    /// Shapes and key set must match the config's inventory exactly.
    void validate() const {
        auto inv = inventory(config);
        for (const auto& [name, shape] : inv) {
            auto it = tensors.find(name);
            if (it == tensors.end()) throw MismatchError("missing parameter tensor '" + name + "'");
            if (it->second.shape() != shape)
                throw MismatchError("parameter '" + name + "' has shape " + core::shape_str(it->second.shape()) +
                                    ", expected " + core::shape_str(shape));
        }
        for (const auto& [name, t] : tensors)
            if (!inv.count(name)) throw MismatchError("unexpected parameter tensor '" + name + "'");
    }
};

namespace detail {

/// Standard normal truncated at two sigma, Box-Muller over raw 64-bit
/// draws so the stream is engine-defined only.
class TruncNormal {
public:
    explicit TruncNormal(uint64_t seed) : rng_(seed) {}

    double next() {
        for (;;) {
            if (have_spare_) {
                have_spare_ = false;
                if (std::fabs(spare_) <= 2.0) return spare_;
                continue;
            }
            const double u1 = uniform_();
            const double u2 = uniform_();
            const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
            const double z0 = r * std::cos(2.0 * std::numbers::pi * u2);
            spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
            have_spare_ = true;
            if (std::fabs(z0) <= 2.0) return z0;
        }
    }

private:
    double uniform_() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    std::mt19937_64 rng_;
    double spare_ = 0;
    bool have_spare_ = false;
};

} // namespace detail

/// Deterministic initialization: weights ~ truncated normal (sigma 0.02),
/// biases / positional embedding / class token zero, norm gamma 1, beta 0.
template <typename T>
ModelParams<T> init_params(const ViTConfig& cfg, uint64_t seed) {
    ModelParams<T> params;
    params.config = cfg;
    detail::TruncNormal gen(seed);
    for (const auto& [name, shape] : inventory(cfg)) {
        Tensor<T> t(shape);
        if (name.ends_with(".weight")) {
            for (auto& v : t.data()) v = static_cast<T>(0.02 * gen.next());
        } else if (name.ends_with(".gamma")) {
            std::fill(t.data().begin(), t.data().end(), T(1));
        }
        // biases, beta, pos_embed, class_token stay zero
        params.tensors.emplace(name, std::move(t));
    }
    return params;
}

/// Splits an image into non-overlapping patches in row-major patch order,
/// each flattened row-major over (row, column, channel).
template <typename T>
Tensor<T> patchify(const Tensor<T>& image, int patch_size) {
    if (image.ndim() != 3)
        throw ValueError("patchify: expected [H,W,C] image, got " + core::shape_str(image.shape()));
    const int64_t h = image.dim(0), w = image.dim(1), c = image.dim(2), p = patch_size;
    if (p <= 0 || h % p != 0 || w % p != 0)
        throw ValueError("patchify: image " + core::shape_str(image.shape()) + " not divisible by patch size " +
                         std::to_string(patch_size));
    const int64_t gh = h / p, gw = w / p;
    Tensor<T> out({gh * gw, p * p * c});
    auto src = image.data();
    auto dst = out.data();
    int64_t o = 0;
    for (int64_t py = 0; py < gh; ++py)
        for (int64_t px = 0; px < gw; ++px)
            for (int64_t r = 0; r < p; ++r)
                for (int64_t col = 0; col < p; ++col)
                    for (int64_t ch = 0; ch < c; ++ch)
                        dst[o++] = src[((py * p + r) * w + px * p + col) * c + ch];
    return out;
}

/// Exact inverse of patchify.
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& patches, int image_h, int image_w, int channels, int patch_size) {
    const int64_t h = image_h, w = image_w, c = channels, p = patch_size;
    const int64_t gh = h / p, gw = w / p;
    if (patches.ndim() != 2 || patches.dim(0) != gh * gw || patches.dim(1) != p * p * c)
        throw ValueError("unpatchify: patches " + core::shape_str(patches.shape()) + " do not fit a " +
                         std::to_string(h) + "x" + std::to_string(w) + " image at patch size " + std::to_string(p));
    Tensor<T> out({h, w, c});
    auto src = patches.data();
    auto dst = out.data();
    int64_t o = 0;
    for (int64_t py = 0; py < gh; ++py)
        for (int64_t px = 0; px < gw; ++px)
            for (int64_t r = 0; r < p; ++r)
                for (int64_t col = 0; col < p; ++col)
                    for (int64_t ch = 0; ch < c; ++ch)
                        dst[((py * p + r) * w + px * p + col) * c + ch] = src[o++];
    return out;
}

/// Linear patch projection, class token prepended at row 0, positional
/// embedding added elementwise.
template <typename T>
Tensor<T> embed(const Tensor<T>& patches, const ModelParams<T>& params) {
    Tensor<T> proj = core::add(core::matmul(patches, params.at("patch_embed.weight")),
                               params.at("patch_embed.bias"));
    Tensor<T> seq = core::concat_rows<T>({params.at("class_token"), proj});
    return core::add(seq, params.at("pos_embed"));
}

/// Per-layer attention matrices [heads, S, S]; rows sum to 1.
template <typename T>
struct AttentionTrace {
    std::vector<Tensor<T>> per_layer;
};

/// Multi-head self-attention: per head, softmax(Q·Kᵀ/sqrt(d_h))·V;
/// heads concatenated and projected. When capture is non-null it receives
/// the detached [heads, S, S] attention matrices.
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const EncoderLayerParams<T>& lp, int heads,
                               Tensor<T>* capture = nullptr) {
    const int64_t s = x.dim(0), d = x.dim(1);
    if (d % heads != 0)
        throw ValueError("multi_head_attention: width " + std::to_string(d) + " not divisible by " +
                         std::to_string(heads) + " heads");
    const int64_t dh = d / heads;
    const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

    Tensor<T> q = core::add(core::matmul(x, lp.wq), lp.wq_bias);
    Tensor<T> k = core::add(core::matmul(x, lp.wk), lp.wk_bias);
    Tensor<T> v = core::add(core::matmul(x, lp.wv), lp.wv_bias);

    if (capture) *capture = Tensor<T>({heads, s, s});
    std::vector<Tensor<T>> head_outs;
    head_outs.reserve(static_cast<size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Tensor<T> qh = core::slice_cols(q, h * dh, dh);
        Tensor<T> kh = core::slice_cols(k, h * dh, dh);
        Tensor<T> vh = core::slice_cols(v, h * dh, dh);
        Tensor<T> attn = core::softmax(core::scale(core::matmul(qh, core::transpose(kh)), inv_sqrt_dh), 1);
        if (capture)
            std::copy_n(attn.data().data(), s * s, capture->data().data() + static_cast<int64_t>(h) * s * s);
        head_outs.push_back(core::matmul(attn, vh));
    }
    return core::add(core::matmul(core::concat_cols(head_outs), lp.wo), lp.wo_bias);
}

/// Pre-norm encoder block: x += MSA(LN(x)); x += MLP(LN(x)).
template <typename T>
Tensor<T> encoder_block(const Tensor<T>& x, const EncoderLayerParams<T>& lp, int heads, double dropout_rate = 0.0,
                        std::mt19937_64* rng = nullptr, Tensor<T>* capture = nullptr) {
    Tensor<T> attn_out =
        multi_head_attention(core::layer_norm(x, lp.ln1_gamma, lp.ln1_beta), lp, heads, capture);
    if (dropout_rate > 0.0 && rng) attn_out = core::dropout(attn_out, dropout_rate, *rng);
    Tensor<T> y = core::add(x, attn_out);

    Tensor<T> mlp_out = core::matmul(core::gelu(core::add(
                                         core::matmul(core::layer_norm(y, lp.ln2_gamma, lp.ln2_beta), lp.fc1),
                                         lp.fc1_bias)),
                                     lp.fc2);
    mlp_out = core::add(mlp_out, lp.fc2_bias);
    if (dropout_rate > 0.0 && rng) mlp_out = core::dropout(mlp_out, dropout_rate, *rng);
    return core::add(y, mlp_out);
}

/// Class-token representation after the final layer norm: the
/// penultimate feature the classification head consumes.
template <typename T>
Tensor<T> forward_features(const Tensor<T>& image, const ModelParams<T>& params,
                           AttentionTrace<T>* trace = nullptr, std::mt19937_64* dropout_rng = nullptr) {
    const ViTConfig& cfg = params.config;
    if (image.ndim() != 3 || image.dim(0) != cfg.image_size || image.dim(1) != cfg.image_size ||
        image.dim(2) != cfg.channels)
        throw ValueError("forward: image " + core::shape_str(image.shape()) + " does not match configured input " +
                         std::to_string(cfg.image_size) + "x" + std::to_string(cfg.image_size) + "x" +
                         std::to_string(cfg.channels) + "; preprocess first");
    if (trace) {
        trace->per_layer.clear();
        trace->per_layer.reserve(static_cast<size_t>(cfg.layers));
    }
    Tensor<T> x = embed(patchify(image, cfg.patch_size), params);
    for (int l = 0; l < cfg.layers; ++l) {
        Tensor<T> captured;
        x = encoder_block(x, params.layer(l), cfg.heads, cfg.dropout, dropout_rng, trace ? &captured : nullptr);
        if (trace) trace->per_layer.push_back(std::move(captured));
    }
    Tensor<T> normed = core::layer_norm(x, params.at("final_norm.gamma"), params.at("final_norm.beta"));
    return core::reshape(core::slice_rows(normed, 0, 1), {cfg.hidden_d});
}

/// Full forward pass: logits over classes for one preprocessed image.
template <typename T>
Tensor<T> forward(const Tensor<T>& image, const ModelParams<T>& params, AttentionTrace<T>* trace = nullptr,
                  std::mt19937_64* dropout_rng = nullptr) {
    Tensor<T> feat = forward_features(image, params, trace, dropout_rng);
    Tensor<T> logits = core::add(core::matmul(core::reshape(feat, {1, params.config.hidden_d}),
                                              params.at("head.weight")),
                                 params.at("head.bias"));
    return core::reshape(logits, {params.config.num_classes});
}

/// Batched forward: one logits row per image, [B, num_classes].
template <typename T>
Tensor<T> forward_batch(const std::vector<Tensor<T>>& images, const ModelParams<T>& params,
                        std::mt19937_64* dropout_rng = nullptr) {
    if (images.empty()) throw ValueError("forward_batch: empty batch");
    std::vector<Tensor<T>> rows;
    rows.reserve(images.size());
    for (const auto& img : images)
        rows.push_back(forward(img, params, static_cast<AttentionTrace<T>*>(nullptr), dropout_rng));
    return core::stack_rows(rows);
}

} // namespace vitc::vit

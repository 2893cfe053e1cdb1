#pragma once

// Attention rollout: head-averaged, identity-augmented attention
// matrices multiplied across layers (deepest layer as the leftmost
// factor), read out at the class-token row and rendered as a heatmap.

#include <string>
#include <vector>

#include "vitc/tensor.hpp"
#include "vitc/vit.hpp"

namespace vitc::rollout {

/// Unweighted mean over the head dimension of one layer's [H,S,S] trace;
/// rows remain stochastic.
template <typename T>
core::Tensor<T> average_heads(const core::Tensor<T>& layer_trace) {
    if (layer_trace.ndim() != 3 || layer_trace.dim(1) != layer_trace.dim(2))
        throw ValueError("average_heads: expected [heads,S,S], got " + core::shape_str(layer_trace.shape()));
    const int64_t h = layer_trace.dim(0), s = layer_trace.dim(1);
    core::Tensor<T> out({s, s});
    auto src = layer_trace.data();
    auto dst = out.data();
    const T inv = static_cast<T>(1.0 / static_cast<double>(h));
    for (int64_t head = 0; head < h; ++head)
        for (int64_t i = 0; i < s * s; ++i) dst[i] += src[head * s * s + i];
    for (int64_t i = 0; i < s * s; ++i) dst[i] *= inv;
    return out;
}

/// (A + I) / 2: identity augmentation with re-normalization so rows keep
/// summing to 1.
template <typename T>
core::Tensor<T> add_identity_normalize(const core::Tensor<T>& a) {
    if (a.ndim() != 2 || a.dim(0) != a.dim(1))
        throw ValueError("add_identity_normalize: expected square matrix, got " + core::shape_str(a.shape()));
    const int64_t s = a.dim(0);
    core::Tensor<T> out({s, s});
    auto src = a.data();
    auto dst = out.data();
    for (int64_t i = 0; i < s; ++i)
        for (int64_t j = 0; j < s; ++j)
            dst[i * s + j] = static_cast<T>(0.5) * (src[i * s + j] + (i == j ? T(1) : T(0)));
    return out;
}

template <typename T>
struct RolloutMap {
    core::Tensor<T> relevance;  // [S,S] rollout product
    std::vector<T> class_row;   // relevance row 0
    int grid_side = 0;          // sqrt(S-1); 0 when S-1 is not square
    std::vector<T> grid_raw;    // class_row minus the class-token entry
    std::vector<T> grid_scaled; // min-max rescaled to [0,1] (all 0.5 if flat)
};

/// R = A~_L · ... · A~_1 over identity-augmented head averages.
template <typename T>
RolloutMap<T> rollout(const vit::AttentionTrace<T>& trace) {
    if (trace.per_layer.empty()) throw ValueError("rollout: empty attention trace");
    const int64_t s = trace.per_layer.front().dim(1);
    for (const auto& layer : trace.per_layer)
        if (layer.dim(1) != s || layer.dim(2) != s)
            throw ValueError("rollout: inconsistent sequence length across layers: " +
                             core::shape_str(layer.shape()) + " vs S=" + std::to_string(s));

    // identity seed, then left-multiply each successive layer
    core::Tensor<T> result({s, s});
    for (int64_t i = 0; i < s; ++i) result.data()[i * s + i] = T(1);
    std::vector<T> scratch(static_cast<size_t>(s * s));
    for (const auto& layer : trace.per_layer) {
        core::Tensor<T> factor = add_identity_normalize(average_heads(layer));
        // result <- factor · result
        auto f = factor.data();
        auto r = result.data();
        for (int64_t i = 0; i < s; ++i)
            for (int64_t j = 0; j < s; ++j) {
                double acc = 0;
                for (int64_t k = 0; k < s; ++k)
                    acc += static_cast<double>(f[i * s + k]) * static_cast<double>(r[k * s + j]);
                scratch[static_cast<size_t>(i * s + j)] = static_cast<T>(acc);
            }
        std::copy(scratch.begin(), scratch.end(), result.data().begin());
    }

    RolloutMap<T> map;
    map.relevance = result;
    map.class_row.assign(result.data().begin(), result.data().begin() + s);

    // the patch grid exists only when S-1 is a perfect square (always the
    // case for model traces; synthetic traces may probe other sizes)
    const int64_t n = s - 1;
    const auto side = static_cast<int64_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (side * side == n) {
        map.grid_side = static_cast<int>(side);
        map.grid_raw.assign(map.class_row.begin() + 1, map.class_row.end());
        T lo = map.grid_raw[0], hi = map.grid_raw[0];
        for (T v : map.grid_raw) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        map.grid_scaled.resize(map.grid_raw.size());
        if (hi > lo) {
            const T span = hi - lo;
            for (size_t i = 0; i < map.grid_raw.size(); ++i) map.grid_scaled[i] = (map.grid_raw[i] - lo) / span;
        } else {
            std::fill(map.grid_scaled.begin(), map.grid_scaled.end(), static_cast<T>(0.5));
        }
    }
    return map;
}

/// Upsample the scaled grid to the image size, map through a fixed color
/// ramp, alpha-blend (0.5) over the input, and write a PNG.
void overlay(const std::vector<float>& grid_scaled, int grid_side, const core::TensorF& image,
             const std::string& output_path);

/// Raw (pre-rescale) grid values as CSV rows.
void write_grid_csv(const std::vector<float>& grid_raw, int grid_side, const std::string& output_path);

} // namespace vitc::rollout

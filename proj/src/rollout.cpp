#include "vitc/rollout.hpp"

#include <array>
#include <fstream>

#include "vitc/common.hpp"
#include "vitc/dataset.hpp"
#include "vitc/imageio.hpp"

namespace vitc::rollout {

namespace {

/// 256-entry blue->cyan->yellow->red ramp, generated from fixed piecewise
/// linear anchors so output bytes never depend on build environment.
std::array<std::array<float, 3>, 256> make_ramp() {
    constexpr std::array<std::array<float, 3>, 5> anchors = {{
        {0.0f, 0.0f, 0.5f},  // dark blue
        {0.0f, 0.75f, 1.0f}, // cyan
        {0.3f, 1.0f, 0.3f},  // green
        {1.0f, 1.0f, 0.0f},  // yellow
        {1.0f, 0.0f, 0.0f},  // red
    }};
    std::array<std::array<float, 3>, 256> ramp{};
    for (int i = 0; i < 256; ++i) {
        const float t = static_cast<float>(i) / 255.0f * 4.0f;
        const int seg = std::min(3, static_cast<int>(t));
        const float f = t - static_cast<float>(seg);
        for (int c = 0; c < 3; ++c)
            ramp[static_cast<size_t>(i)][static_cast<size_t>(c)] =
                anchors[static_cast<size_t>(seg)][static_cast<size_t>(c)] * (1.0f - f) +
                anchors[static_cast<size_t>(seg + 1)][static_cast<size_t>(c)] * f;
    }
    return ramp;
}

} // namespace

void overlay(const std::vector<float>& grid_scaled, int grid_side, const core::TensorF& image,
             const std::string& output_path) {
    if (grid_side <= 0 || static_cast<size_t>(grid_side) * static_cast<size_t>(grid_side) != grid_scaled.size())
        throw ValueError("overlay: grid of " + std::to_string(grid_scaled.size()) + " values is not " +
                         std::to_string(grid_side) + "x" + std::to_string(grid_side));
    if (image.ndim() != 3 || image.dim(2) != 3)
        throw ValueError("overlay: expected [H,W,3] image, got " + core::shape_str(image.shape()));

    core::TensorF grid({grid_side, grid_side, 1});
    std::copy(grid_scaled.begin(), grid_scaled.end(), grid.data().begin());
    const core::TensorF up =
        data::resize_bilinear(grid, static_cast<int>(image.dim(0)), static_cast<int>(image.dim(1)));

    static const auto ramp = make_ramp();
    core::TensorF blended(image.shape());
    auto img = image.data();
    auto heat = up.data();
    auto out = blended.data();
    constexpr float alpha = 0.5f;
    for (int64_t p = 0; p < up.numel(); ++p) {
        const float v = std::clamp(heat[p], 0.0f, 1.0f);
        const auto& color = ramp[static_cast<size_t>(std::lround(v * 255.0f))];
        for (int64_t c = 0; c < 3; ++c)
            out[p * 3 + c] = (1.0f - alpha) * img[p * 3 + c] + alpha * color[static_cast<size_t>(c)];
    }
    img::write_png(output_path, blended);
}

void write_grid_csv(const std::vector<float>& grid_raw, int grid_side, const std::string& output_path) {
    if (grid_side <= 0 || static_cast<size_t>(grid_side) * static_cast<size_t>(grid_side) != grid_raw.size())
        throw ValueError("write_grid_csv: grid of " + std::to_string(grid_raw.size()) + " values is not " +
                         std::to_string(grid_side) + "x" + std::to_string(grid_side));
    std::ofstream out(output_path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + output_path + "'");
    out.precision(8);
    for (int y = 0; y < grid_side; ++y) {
        for (int x = 0; x < grid_side; ++x) {
            if (x) out << ',';
            out << grid_raw[static_cast<size_t>(y * grid_side + x)];
        }
        out << "\n";
    }
}

} // namespace vitc::rollout

#include "vitc/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "vitc/common.hpp"

namespace vitc::aug {

namespace {

/// Reflect a coordinate into [0, n-1] without repeating the edge sample
/// (mirror about the boundary pixels).
double reflect101(double t, int64_t n) {
    if (n == 1) return 0.0;
    const double period = 2.0 * static_cast<double>(n - 1);
    t = std::fmod(t, period);
    if (t < 0) t += period;
    return (t > static_cast<double>(n - 1)) ? period - t : t;
}

float sample_bilinear_reflect(std::span<const float> src, int64_t h, int64_t w, int64_t c, double fy, double fx,
                              int64_t ch) {
    fy = reflect101(fy, h);
    fx = reflect101(fx, w);
    const int64_t y0 = static_cast<int64_t>(fy);
    const int64_t x0 = static_cast<int64_t>(fx);
    const int64_t y1 = std::min(y0 + 1, h - 1);
    const int64_t x1 = std::min(x0 + 1, w - 1);
    const double wy = fy - static_cast<double>(y0);
    const double wx = fx - static_cast<double>(x0);
    const double top = (1.0 - wx) * src[(y0 * w + x0) * c + ch] + wx * src[(y0 * w + x1) * c + ch];
    const double bot = (1.0 - wx) * src[(y1 * w + x0) * c + ch] + wx * src[(y1 * w + x1) * c + ch];
    return static_cast<float>((1.0 - wy) * top + wy * bot);
}

/// Inverse-map every destination pixel through `src_of_dst` with bilinear
/// sampling and edge reflection; clamps output to [0,1].
template <typename MapFn>
core::TensorF warp(const core::TensorF& pixels, MapFn src_of_dst) {
    const int64_t h = pixels.dim(0), w = pixels.dim(1), c = pixels.dim(2);
    core::TensorF out(pixels.shape());
    auto src = pixels.data();
    auto dst = out.data();
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
            const auto [fy, fx] = src_of_dst(static_cast<double>(y), static_cast<double>(x));
            for (int64_t ch = 0; ch < c; ++ch)
                dst[(y * w + x) * c + ch] =
                    std::clamp(sample_bilinear_reflect(src, h, w, c, fy, fx, ch), 0.0f, 1.0f);
        }
    }
    return out;
}

void check_image(const core::TensorF& pixels) {
    if (pixels.ndim() != 3) throw ValueError("augment: expected [H,W,C], got " + core::shape_str(pixels.shape()));
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

} // namespace

void AugmentSpec::validate() const {
    if (rotation_max_degrees < 0 || brightness_delta_max < 0 || shift_max_fraction < 0 || hue_delta_max < 0 ||
        sat_delta_max < 0)
        throw ValueError("AugmentSpec: ranges must be non-negative");
    if (hflip_probability < 0 || hflip_probability > 1)
        throw ValueError("AugmentSpec: hflip_probability must be in [0,1]");
    if (contrast_factor_min > contrast_factor_max || contrast_factor_min <= 0)
        throw ValueError("AugmentSpec: bad contrast factor range");
    if (scale_min > scale_max || scale_min <= 0) throw ValueError("AugmentSpec: bad scale range");
}

core::TensorF rotate(const core::TensorF& pixels, double degrees) {
    check_image(pixels);
    if (degrees == 0.0) return pixels.clone();
    const int64_t h = pixels.dim(0), w = pixels.dim(1);
    const double cy = static_cast<double>(h - 1) / 2.0;
    const double cx = static_cast<double>(w - 1) / 2.0;
    const double rad = degrees * std::numbers::pi / 180.0;
    // inverse map: rotate destination offsets by -angle. With y growing
    // downward this makes positive angles counter-clockwise on screen.
    const double c = std::cos(rad), s = std::sin(rad);
    return warp(pixels, [=](double y, double x) {
        const double dy = y - cy, dx = x - cx;
        return std::pair<double, double>{cy + s * dx + c * dy, cx + c * dx - s * dy};
    });
}

core::TensorF hflip(const core::TensorF& pixels) {
    check_image(pixels);
    const int64_t h = pixels.dim(0), w = pixels.dim(1), c = pixels.dim(2);
    core::TensorF out(pixels.shape());
    auto src = pixels.data();
    auto dst = out.data();
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            for (int64_t ch = 0; ch < c; ++ch) dst[(y * w + x) * c + ch] = src[(y * w + (w - 1 - x)) * c + ch];
    return out;
}

core::TensorF rgb_to_hsv(const core::TensorF& pixels) {
    check_image(pixels);
    if (pixels.dim(2) != 3) throw ValueError("rgb_to_hsv: expected 3 channels");
    core::TensorF out(pixels.shape());
    auto src = pixels.data();
    auto dst = out.data();
    for (int64_t i = 0; i < pixels.numel(); i += 3) {
        const double r = src[i], g = src[i + 1], b = src[i + 2];
        const double mx = std::max({r, g, b});
        const double mn = std::min({r, g, b});
        const double delta = mx - mn;
        double hdeg = 0;
        if (delta > 0) {
            if (mx == r)
                hdeg = 60.0 * std::fmod((g - b) / delta, 6.0);
            else if (mx == g)
                hdeg = 60.0 * ((b - r) / delta + 2.0);
            else
                hdeg = 60.0 * ((r - g) / delta + 4.0);
            if (hdeg < 0) hdeg += 360.0;
        }
        dst[i] = static_cast<float>(hdeg / 360.0);          // H in [0,1)
        dst[i + 1] = static_cast<float>(mx > 0 ? delta / mx : 0.0); // S
        dst[i + 2] = static_cast<float>(mx);                // V
    }
    return out;
}

core::TensorF hsv_to_rgb(const core::TensorF& pixels) {
    check_image(pixels);
    if (pixels.dim(2) != 3) throw ValueError("hsv_to_rgb: expected 3 channels");
    core::TensorF out(pixels.shape());
    auto src = pixels.data();
    auto dst = out.data();
    for (int64_t i = 0; i < pixels.numel(); i += 3) {
        const double h6 = static_cast<double>(src[i]) * 6.0;
        const double s = src[i + 1], v = src[i + 2];
        const int sector = static_cast<int>(std::floor(h6)) % 6;
        const double f = h6 - std::floor(h6);
        const double p = v * (1.0 - s);
        const double q = v * (1.0 - s * f);
        const double t = v * (1.0 - s * (1.0 - f));
        double r, g, b;
        switch (sector) {
            case 0: r = v; g = t; b = p; break;
            case 1: r = q; g = v; b = p; break;
            case 2: r = p; g = v; b = t; break;
            case 3: r = p; g = q; b = v; break;
            case 4: r = t; g = p; b = v; break;
            default: r = v; g = p; b = q; break;
        }
        dst[i] = static_cast<float>(r);
        dst[i + 1] = static_cast<float>(g);
        dst[i + 2] = static_cast<float>(b);
    }
    return out;
}

core::TensorF brightness_contrast(const core::TensorF& pixels, double delta, double factor) {
    check_image(pixels);
    if (delta == 0.0 && factor == 1.0) return pixels.clone();
    core::TensorF out(pixels.shape());
    auto src = pixels.data();
    auto dst = out.data();
    for (int64_t i = 0; i < pixels.numel(); ++i)
        dst[i] = static_cast<float>(std::clamp(factor * (static_cast<double>(src[i]) - 0.5) + 0.5 + delta, 0.0, 1.0));
    return out;
}

core::TensorF shift_scale(const core::TensorF& pixels, double dx_frac, double dy_frac, double scale) {
    check_image(pixels);
    if (scale <= 0) throw ValueError("shift_scale: scale must be positive");
    if (dx_frac == 0.0 && dy_frac == 0.0 && scale == 1.0) return pixels.clone();
    const int64_t h = pixels.dim(0), w = pixels.dim(1);
    const double cy = static_cast<double>(h - 1) / 2.0;
    const double cx = static_cast<double>(w - 1) / 2.0;
    const double tx = dx_frac * static_cast<double>(w);
    const double ty = dy_frac * static_cast<double>(h);
    // forward map: dst = center + scale*(src - center) + t
    return warp(pixels, [=](double y, double x) {
        return std::pair<double, double>{cy + (y - cy - ty) / scale, cx + (x - cx - tx) / scale};
    });
}

core::TensorF hsv_jitter(const core::TensorF& pixels, double hue_delta, double sat_delta) {
    core::TensorF hsv = rgb_to_hsv(pixels);
    auto hd = hsv.data();
    for (int64_t i = 0; i < hsv.numel(); i += 3) {
        double hue = static_cast<double>(hd[i]) + hue_delta;
        hue -= std::floor(hue); // wrap to [0,1)
        hd[i] = static_cast<float>(hue);
        hd[i + 1] = static_cast<float>(std::clamp(static_cast<double>(hd[i + 1]) + sat_delta, 0.0, 1.0));
    }
    return hsv_to_rgb(hsv);
}

core::TensorF augment_one(const core::TensorF& pixels, const AugmentSpec& spec, uint64_t sample_index,
                          uint64_t variant_index) {
    spec.validate();
    std::mt19937_64 rng(mix_seed(spec.seed, sample_index, variant_index));

    core::TensorF out = rotate(pixels, uniform_in(rng, -spec.rotation_max_degrees, spec.rotation_max_degrees));
    if (uniform_in(rng, 0.0, 1.0) < spec.hflip_probability) out = hflip(out);
    if (spec.hsv_enabled)
        out = hsv_jitter(out, uniform_in(rng, -spec.hue_delta_max, spec.hue_delta_max),
                         uniform_in(rng, -spec.sat_delta_max, spec.sat_delta_max));
    out = brightness_contrast(out, uniform_in(rng, -spec.brightness_delta_max, spec.brightness_delta_max),
                              uniform_in(rng, spec.contrast_factor_min, spec.contrast_factor_max));
    out = shift_scale(out, uniform_in(rng, -spec.shift_max_fraction, spec.shift_max_fraction),
                      uniform_in(rng, -spec.shift_max_fraction, spec.shift_max_fraction),
                      uniform_in(rng, spec.scale_min, spec.scale_max));
    return out;
}

std::vector<data::Sample> augment_dataset(const std::vector<data::Sample>& train, const AugmentSpec& spec,
                                          int workers) {
    spec.validate();
    constexpr int kVariants = 4; // plus the original: five-fold
    std::vector<data::Sample> out(train.size() * (kVariants + 1));

    std::atomic<size_t> cursor{0};
    auto work = [&] {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= train.size()) return;
            const auto& s = train[i];
            const size_t base = i * (kVariants + 1);
            out[base] = s; // original, unmodified
            for (int v = 0; v < kVariants; ++v) {
                data::Sample aug;
                aug.pixels = augment_one(s.pixels, spec, i, static_cast<uint64_t>(v));
                aug.label = s.label;
                aug.source_path = s.source_path + "#aug" + std::to_string(v);
                out[base + 1 + static_cast<size_t>(v)] = std::move(aug);
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return out;
}

} // namespace vitc::aug

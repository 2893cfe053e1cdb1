#pragma once

// Training-set transforms and five-fold dataset expansion. All transforms
// map [0,1] pixels to [0,1] pixels and never touch labels; neutral
// parameters reproduce the input bit-exactly.

#include <cstdint>
#include <vector>

#include "vitc/dataset.hpp"
#include "vitc/tensor.hpp"

namespace vitc::aug {

struct AugmentSpec {
    double rotation_max_degrees = 30.0;
    double hflip_probability = 0.5;
    bool hsv_enabled = true;
    double hue_delta_max = 0.05;
    double sat_delta_max = 0.1;
    double brightness_delta_max = 0.2;
    double contrast_factor_min = 0.8;
    double contrast_factor_max = 1.25;
    double shift_max_fraction = 0.1;
    double scale_min = 0.9;
    double scale_max = 1.1;
    uint64_t seed = 0;

    void validate() const;
};

/// Rotation about the image center, bilinear resampling, edge-reflected
/// fill, output clamped to [0,1]. Positive angles rotate content
/// counter-clockwise on screen. Zero degrees is the bit-exact identity.
core::TensorF rotate(const core::TensorF& pixels, double degrees);

/// Column order reversed; involution.
core::TensorF hflip(const core::TensorF& pixels);

/// RGB -> HSV hexcone conversion; hue normalized to [0,1). Achromatic
/// pixels take H=0, S=0.
core::TensorF rgb_to_hsv(const core::TensorF& pixels);

/// Inverse hexcone conversion; round-trips with rgb_to_hsv within 1e-5.
core::TensorF hsv_to_rgb(const core::TensorF& pixels);

/// clamp(factor*(x-0.5)+0.5+delta, 0, 1) per channel.
core::TensorF brightness_contrast(const core::TensorF& pixels, double delta, double factor);

/// Translate by fractions of width/height and scale about the center,
/// bilinear resampling with edge-reflected fill. Neutral parameters
/// (0,0,1) are the bit-exact identity.
core::TensorF shift_scale(const core::TensorF& pixels, double dx_frac, double dy_frac, double scale);

/// Hue/saturation jitter through HSV space (convert, perturb, convert
/// back); exposed for tests, used by the sampled pipeline.
core::TensorF hsv_jitter(const core::TensorF& pixels, double hue_delta, double sat_delta);

/// One sampled application of all enabled transforms. The RNG stream for
/// (sample_index, variant_index) is derived from spec.seed alone.
core::TensorF augment_one(const core::TensorF& pixels, const AugmentSpec& spec, uint64_t sample_index,
                          uint64_t variant_index);

/// Five-fold expansion: for each input, the unmodified original followed
/// by four sampled variants. `workers` parallelizes over samples only.
std::vector<data::Sample> augment_dataset(const std::vector<data::Sample>& train, const AugmentSpec& spec,
                                          int workers = 1);

} // namespace vitc::aug

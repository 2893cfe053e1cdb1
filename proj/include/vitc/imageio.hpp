#pragma once

// Image decode/encode. Decodes PNG, JPEG, and PPM into [H,W,3] float
// tensors in [0,1]; encodes PNG and PPM with fixed settings so output
// bytes are deterministic for fixed input.

#include <string>

#include "vitc/tensor.hpp"

namespace vitc::img {

/// Decode by content sniffing (PNG/JPEG magic, PPM "P6"/"P3").
/// Throws IoError on unreadable files, FormatError on unsupported content.
core::TensorF decode_image(const std::string& path);

/// 8-bit RGB PNG; pixel values clamped to [0,1] and rounded.
void write_png(const std::string& path, const core::TensorF& image);

/// Binary P6 PPM, maxval 255.
void write_ppm(const std::string& path, const core::TensorF& image);

} // namespace vitc::img

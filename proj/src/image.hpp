// Binary PPM (P6, maxval 255) loading and detector preprocessing.
#pragma once

#include <array>
#include <string>

#include "tensor.hpp"

namespace td {

// Decodes to a 1x3xHxW RGB tensor with values in [0, 255].
Tensor decode_ppm(const std::string& bytes);
Tensor load_ppm_file(const std::string& path);

// Full preprocessing: decode, bilinear-resize to (target_h, target_w),
// reorder channels to BGR, subtract per-channel means. No further scaling.
Tensor load_image_ppm(const std::string& path, int target_h, int target_w,
                      const std::array<float, 3>& means);

Tensor preprocess_image(const Tensor& rgb, int target_h, int target_w,
                        const std::array<float, 3>& means);

}  // namespace td

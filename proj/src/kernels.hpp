// Numeric kernels on NCHW tensors: convolutions, pooling, activation,
// normalization, resampling and merge ops. Everything here is a pure
// function of its inputs and runs single-threaded, so identical inputs give
// bitwise-identical outputs.
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace td {

enum class ConvKind { standard, depthwise, pointwise };

struct ConvSpec {
  ConvKind kind = ConvKind::standard;
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;
  int in_c = 0, out_c = 0;
  bool has_bias = false;

  void validate() const;
  // floor-mode output sizing
  int out_h(int in_h) const { return (in_h + 2 * ph - kh) / sh + 1; }
  int out_w(int in_w) const { return (in_w + 2 * pw - kw) / sw + 1; }
  int64_t weight_count() const;
  std::string describe() const;  // "conv3x3/s2", "dwconv3x3/s1", ...
};

ConvSpec conv_spec(int in_c, int out_c, int k, int stride, int pad, bool bias = false);
ConvSpec pointwise_spec(int in_c, int out_c, bool bias = false);
ConvSpec depthwise_spec(int c, int k = 3, int stride = 1, int pad = 1, bool bias = false);

// Batch normalization in its trained 4-parameter form. At inference the
// transform collapses to y = scale * x + shift per channel.
struct BatchNormParams {
  std::vector<float> gamma, beta, mean, var;
  float epsilon = 1e-5f;

  void validate(int channels) const;
  std::vector<float> scale_factors() const;  // gamma / sqrt(var + eps)
  std::vector<float> shift_factors() const;  // beta - mean * scale
};

// Discrete cross-correlation with zero padding, weights in OIHW order.
Tensor conv2d(const Tensor& x, std::span<const float> w, std::span<const float> bias,
              const ConvSpec& spec);
// Per-channel convolution; channel c of the output depends only on channel c
// of the input. Weights are one kh*kw kernel per channel.
Tensor dwconv2d(const Tensor& x, std::span<const float> w, std::span<const float> bias,
                const ConvSpec& spec);
// Ceil-mode max pooling; trailing partial windows use available elements only.
Tensor maxpool2d_ceil(const Tensor& x, int kernel = 2, int stride = 2);

Tensor relu(const Tensor& x);
void relu_inplace(Tensor& x);

Tensor batchnorm(const Tensor& x, const BatchNormParams& bn);
Tensor scale_shift_channels(const Tensor& x, std::span<const float> scale,
                            std::span<const float> shift);

// Folds a per-output-channel affine transform into conv weights. Returns
// {w', b'} with the bias always materialized: w'_o = scale_o * w_o,
// b'_o = shift_o + scale_o * b_o (absent bias treated as zero).
std::pair<std::vector<float>, std::vector<float>> fold_affine(std::span<const float> w,
                                                              std::span<const float> bias,
                                                              std::span<const float> scale,
                                                              std::span<const float> shift,
                                                              const ConvSpec& spec);
std::pair<std::vector<float>, std::vector<float>> fold_batchnorm(std::span<const float> w,
                                                                 std::span<const float> bias,
                                                                 const BatchNormParams& bn,
                                                                 const ConvSpec& spec);

// Bilinear resampling: F_c(x,y) = sum over the input grid of
// U_c(m,n) * t(m, s*x) * t(n, s*y) with t(a,b) = max(0, 1 - |a-b|) and
// s = in/out per axis. Coordinates outside the grid contribute zero; border
// weights are not renormalized.
Tensor bilinear_resample(const Tensor& x, int out_h, int out_w);

// Channel concatenation, input order preserved.
Tensor concat_channels(std::span<const Tensor* const> xs);
Tensor add_elementwise(const Tensor& a, const Tensor& b);

// Per-position channel L2 normalization with a learned per-channel scale:
// v_c <- gamma_c * v_c / sqrt(sum_c v_c^2 + 1e-10).
Tensor l2norm_channels(const Tensor& x, std::span<const float> gamma);

}  // namespace td

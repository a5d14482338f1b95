#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace td {

namespace {

std::string chan_err(const char* op, int got, int want) {
  return std::string(op) + ": input has " + std::to_string(got) + " channels, spec expects " +
         std::to_string(want);
}

void check_weights(const char* op, std::span<const float> w, std::span<const float> bias,
                   const ConvSpec& spec) {
  if (int64_t(w.size()) != spec.weight_count())
    fail(Errc::shape_mismatch, std::string(op) + ": weight array has " +
                                   std::to_string(w.size()) + " values, spec needs " +
                                   std::to_string(spec.weight_count()));
  if (spec.has_bias) {
    if (int(bias.size()) != spec.out_c)
      fail(Errc::shape_mismatch, std::string(op) + ": bias array has " +
                                     std::to_string(bias.size()) + " values, spec needs " +
                                     std::to_string(spec.out_c));
  } else if (!bias.empty()) {
    fail(Errc::shape_mismatch, std::string(op) + ": bias given but spec has has_bias=false");
  }
}

void check_out_size(const char* op, const Tensor& x, int oh, int ow) {
  if (oh < 1 || ow < 1)
    fail(Errc::shape_mismatch,
         std::string(op) + ": output would be empty for input " + x.shape().str());
}

}  // namespace

void ConvSpec::validate() const {
  if (kh < 1 || kw < 1 || sh < 1 || sw < 1 || ph < 0 || pw < 0 || in_c < 1 || out_c < 1)
    fail(Errc::invalid_argument, "conv spec has out-of-range fields: " + describe());
  if (kind == ConvKind::depthwise && out_c != in_c)
    fail(Errc::invalid_argument, "depthwise conv requires out_c == in_c, got " +
                                     std::to_string(in_c) + " -> " + std::to_string(out_c));
  if (kind == ConvKind::pointwise && (kh != 1 || kw != 1 || ph != 0 || pw != 0))
    fail(Errc::invalid_argument, "pointwise conv requires 1x1 kernel with zero padding");
}

int64_t ConvSpec::weight_count() const {
  if (kind == ConvKind::depthwise) return int64_t(in_c) * kh * kw;
  return int64_t(out_c) * in_c * kh * kw;
}

std::string ConvSpec::describe() const {
  std::string base = kind == ConvKind::depthwise ? "dwconv" : "conv";
  return base + std::to_string(kh) + "x" + std::to_string(kw) + "/s" + std::to_string(sh);
}

ConvSpec conv_spec(int in_c, int out_c, int k, int stride, int pad, bool bias) {
  return ConvSpec{ConvKind::standard, k, k, stride, stride, pad, pad, in_c, out_c, bias};
}

ConvSpec pointwise_spec(int in_c, int out_c, bool bias) {
  return ConvSpec{ConvKind::pointwise, 1, 1, 1, 1, 0, 0, in_c, out_c, bias};
}

ConvSpec depthwise_spec(int c, int k, int stride, int pad, bool bias) {
  return ConvSpec{ConvKind::depthwise, k, k, stride, stride, pad, pad, c, c, bias};
}

void BatchNormParams::validate(int channels) const {
  size_t c = size_t(channels);
  if (gamma.size() != c || beta.size() != c || mean.size() != c || var.size() != c)
    fail(Errc::invalid_params, "batchnorm arrays must all have " + std::to_string(channels) +
                                   " entries");
  if (epsilon <= 0.0f) fail(Errc::invalid_params, "batchnorm epsilon must be > 0");
  for (float v : var)
    if (v < 0.0f) fail(Errc::invalid_params, "batchnorm variance must be >= 0");
}

std::vector<float> BatchNormParams::scale_factors() const {
  std::vector<float> out(gamma.size());
  for (size_t i = 0; i < gamma.size(); ++i)
    out[i] = float(double(gamma[i]) / std::sqrt(double(var[i]) + double(epsilon)));
  return out;
}

std::vector<float> BatchNormParams::shift_factors() const {
  std::vector<float> scale = scale_factors();
  std::vector<float> out(beta.size());
  for (size_t i = 0; i < beta.size(); ++i) out[i] = beta[i] - mean[i] * scale[i];
  return out;
}

namespace {

// Accumulates one kernel tap across a whole output plane. Shared by the
// standard and depthwise paths so that dwconv2d matches a per-channel conv2d
// bit for bit (same accumulation order).
void accumulate_tap(float* yp, const float* xp, float wv, int H, int W, int OH, int OW, int sh,
                    int sw, int ph, int pw, int ky, int kx) {
  for (int oy = 0; oy < OH; ++oy) {
    const int iy = oy * sh - ph + ky;
    if (iy < 0 || iy >= H) continue;
    const float* xrow = xp + int64_t(iy) * W;
    float* yrow = yp + int64_t(oy) * OW;
    int ox0 = 0;
    const int off = kx - pw;  // ix = ox*sw + off
    if (off < 0) ox0 = (-off + sw - 1) / sw;
    const int hi = W - 1 - off;
    if (hi < 0) continue;
    const int ox1 = std::min(OW, hi / sw + 1);
    if (sw == 1) {
      const float* xq = xrow + off + ox0;
      for (int ox = ox0; ox < ox1; ++ox) yrow[ox] += wv * xq[ox - ox0];
    } else {
      for (int ox = ox0; ox < ox1; ++ox) yrow[ox] += wv * xrow[int64_t(ox) * sw + off];
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, std::span<const float> w, std::span<const float> bias,
              const ConvSpec& spec) {
  spec.validate();
  if (spec.kind == ConvKind::depthwise)
    fail(Errc::invalid_argument, "conv2d: depthwise specs go through dwconv2d");
  if (x.c() != spec.in_c) fail(Errc::shape_mismatch, chan_err("conv2d", x.c(), spec.in_c));
  check_weights("conv2d", w, bias, spec);

  const int N = x.n(), IC = spec.in_c, H = x.h(), W = x.w();
  const int OC = spec.out_c, OH = spec.out_h(H), OW = spec.out_w(W);
  check_out_size("conv2d", x, OH, OW);
  Tensor y(N, OC, OH, OW);

  const bool is_1x1 = spec.kh == 1 && spec.kw == 1 && spec.sh == 1 && spec.sw == 1 &&
                      spec.ph == 0 && spec.pw == 0;
  for (int n = 0; n < N; ++n) {
    for (int oc = 0; oc < OC; ++oc) {
      float* yp = y.plane(n, oc);
      if (spec.has_bias) std::fill(yp, yp + int64_t(OH) * OW, bias[oc]);
      if (is_1x1) {
        const int64_t pixels = int64_t(H) * W;
        for (int ic = 0; ic < IC; ++ic) {
          const float wv = w[int64_t(oc) * IC + ic];
          const float* xp = x.plane(n, ic);
          for (int64_t p = 0; p < pixels; ++p) yp[p] += wv * xp[p];
        }
      } else {
        for (int ic = 0; ic < IC; ++ic) {
          const float* xp = x.plane(n, ic);
          const float* wk = &w[(int64_t(oc) * IC + ic) * spec.kh * spec.kw];
          for (int ky = 0; ky < spec.kh; ++ky)
            for (int kx = 0; kx < spec.kw; ++kx)
              accumulate_tap(yp, xp, wk[ky * spec.kw + kx], H, W, OH, OW, spec.sh, spec.sw,
                             spec.ph, spec.pw, ky, kx);
        }
      }
    }
  }
  return y;
}

Tensor dwconv2d(const Tensor& x, std::span<const float> w, std::span<const float> bias,
                const ConvSpec& spec) {
  spec.validate();
  if (spec.kind != ConvKind::depthwise)
    fail(Errc::invalid_argument, "dwconv2d: spec kind must be depthwise");
  if (x.c() != spec.in_c) fail(Errc::shape_mismatch, chan_err("dwconv2d", x.c(), spec.in_c));
  check_weights("dwconv2d", w, bias, spec);

  const int N = x.n(), C = spec.in_c, H = x.h(), W = x.w();
  const int OH = spec.out_h(H), OW = spec.out_w(W);
  check_out_size("dwconv2d", x, OH, OW);
  Tensor y(N, C, OH, OW);

  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      float* yp = y.plane(n, c);
      if (spec.has_bias) std::fill(yp, yp + int64_t(OH) * OW, bias[c]);
      const float* xp = x.plane(n, c);
      const float* wk = &w[int64_t(c) * spec.kh * spec.kw];
      for (int ky = 0; ky < spec.kh; ++ky)
        for (int kx = 0; kx < spec.kw; ++kx)
          accumulate_tap(yp, xp, wk[ky * spec.kw + kx], H, W, OH, OW, spec.sh, spec.sw, spec.ph,
                         spec.pw, ky, kx);
    }
  }
  return y;
}

Tensor maxpool2d_ceil(const Tensor& x, int kernel, int stride) {
  if (kernel < 1 || stride < 1) fail(Errc::invalid_argument, "maxpool: kernel/stride must be >= 1");
  const int H = x.h(), W = x.w();
  const int OH = (H <= kernel) ? 1 : (H - kernel + stride - 1) / stride + 1;
  const int OW = (W <= kernel) ? 1 : (W - kernel + stride - 1) / stride + 1;
  Tensor y(x.n(), x.c(), OH, OW);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float* xp = x.plane(n, c);
      float* yp = y.plane(n, c);
      for (int oy = 0; oy < OH; ++oy) {
        const int y0 = oy * stride;
        const int y1 = std::min(y0 + kernel, H);
        for (int ox = 0; ox < OW; ++ox) {
          const int x0 = ox * stride;
          const int x1 = std::min(x0 + kernel, W);
          float m = -std::numeric_limits<float>::infinity();
          for (int iy = y0; iy < y1; ++iy)
            for (int ix = x0; ix < x1; ++ix) m = std::max(m, xp[int64_t(iy) * W + ix]);
          yp[int64_t(oy) * OW + ox] = m;
        }
      }
    }
  }
  return y;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  relu_inplace(y);
  return y;
}

void relu_inplace(Tensor& x) {
  float* p = x.data();
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) p[i] = std::max(0.0f, p[i]);
}

Tensor scale_shift_channels(const Tensor& x, std::span<const float> scale,
                            std::span<const float> shift) {
  if (int(scale.size()) != x.c() || int(shift.size()) != x.c())
    fail(Errc::shape_mismatch, "scale_shift: arrays must have " + std::to_string(x.c()) +
                                   " entries");
  Tensor y(x.shape());
  const int64_t pixels = int64_t(x.h()) * x.w();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float a = scale[c], b = shift[c];
      const float* xp = x.plane(n, c);
      float* yp = y.plane(n, c);
      for (int64_t p = 0; p < pixels; ++p) yp[p] = a * xp[p] + b;
    }
  }
  return y;
}

Tensor batchnorm(const Tensor& x, const BatchNormParams& bn) {
  bn.validate(x.c());
  const std::vector<float> a = bn.scale_factors();
  const std::vector<float> b = bn.shift_factors();
  return scale_shift_channels(x, a, b);
}

std::pair<std::vector<float>, std::vector<float>> fold_affine(std::span<const float> w,
                                                              std::span<const float> bias,
                                                              std::span<const float> scale,
                                                              std::span<const float> shift,
                                                              const ConvSpec& spec) {
  spec.validate();
  check_weights("fold_affine", w, bias, spec);
  if (int(scale.size()) != spec.out_c || int(shift.size()) != spec.out_c)
    fail(Errc::shape_mismatch, "fold_affine: scale/shift must have " +
                                   std::to_string(spec.out_c) + " entries");
  const int64_t per_out = spec.weight_count() / spec.out_c;
  std::vector<float> wf(w.size());
  std::vector<float> bf(size_t(spec.out_c));
  for (int o = 0; o < spec.out_c; ++o) {
    const float a = scale[o];
    const float* src = &w[int64_t(o) * per_out];
    float* dst = &wf[int64_t(o) * per_out];
    for (int64_t i = 0; i < per_out; ++i) dst[i] = a * src[i];
    bf[o] = shift[o] + a * (spec.has_bias ? bias[o] : 0.0f);
  }
  return {std::move(wf), std::move(bf)};
}

std::pair<std::vector<float>, std::vector<float>> fold_batchnorm(std::span<const float> w,
                                                                 std::span<const float> bias,
                                                                 const BatchNormParams& bn,
                                                                 const ConvSpec& spec) {
  bn.validate(spec.out_c);
  const std::vector<float> a = bn.scale_factors();
  const std::vector<float> b = bn.shift_factors();
  return fold_affine(w, bias, a, b, spec);
}

Tensor bilinear_resample(const Tensor& x, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) fail(Errc::invalid_argument, "resample: output size must be >= 1");
  const int H = x.h(), W = x.w();
  const double sy = double(H) / out_h;
  const double sx = double(W) / out_w;
  Tensor y(x.n(), x.c(), out_h, out_w);

  // Only the two integer taps around the source coordinate can have nonzero
  // weight, so the full-grid sum collapses to at most four terms.
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const float* xp = x.plane(n, c);
      float* yp = y.plane(n, c);
      for (int oy = 0; oy < out_h; ++oy) {
        const double fy = sy * oy;
        const int m0 = int(std::floor(fy));
        for (int ox = 0; ox < out_w; ++ox) {
          const double fx = sx * ox;
          const int n0 = int(std::floor(fx));
          double acc = 0.0;
          for (int m = m0; m <= m0 + 1; ++m) {
            if (m < 0 || m >= H) continue;
            const double wy = 1.0 - std::abs(m - fy);
            if (wy <= 0.0) continue;
            for (int t = n0; t <= n0 + 1; ++t) {
              if (t < 0 || t >= W) continue;
              const double wx = 1.0 - std::abs(t - fx);
              if (wx <= 0.0) continue;
              acc += double(xp[int64_t(m) * W + t]) * wy * wx;
            }
          }
          yp[int64_t(oy) * out_w + ox] = float(acc);
        }
      }
    }
  }
  return y;
}

Tensor concat_channels(std::span<const Tensor* const> xs) {
  if (xs.empty()) fail(Errc::invalid_argument, "concat: needs at least one input");
  const Tensor& first = *xs[0];
  int total_c = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const Tensor& t = *xs[i];
    if (t.n() != first.n() || t.h() != first.h() || t.w() != first.w())
      fail(Errc::shape_mismatch, "concat: input " + std::to_string(i) + " has shape " +
                                     t.shape().str() + ", expected batch/spatial " +
                                     first.shape().str());
    total_c += t.c();
  }
  Tensor y(first.n(), total_c, first.h(), first.w());
  const int64_t pixels = int64_t(first.h()) * first.w();
  for (int n = 0; n < first.n(); ++n) {
    int oc = 0;
    for (const Tensor* t : xs) {
      for (int c = 0; c < t->c(); ++c, ++oc)
        std::copy_n(t->plane(n, c), pixels, y.plane(n, oc));
    }
  }
  return y;
}

Tensor add_elementwise(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape()))
    fail(Errc::shape_mismatch,
         "add: shapes differ, " + a.shape().str() + " vs " + b.shape().str());
  Tensor y(a.shape());
  const float* pa = a.data();
  const float* pb = b.data();
  float* py = y.data();
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) py[i] = pa[i] + pb[i];
  return y;
}

Tensor l2norm_channels(const Tensor& x, std::span<const float> gamma) {
  if (int(gamma.size()) != x.c())
    fail(Errc::shape_mismatch,
         "l2norm: gamma must have " + std::to_string(x.c()) + " entries");
  constexpr float kEps = 1e-10f;
  Tensor y(x.shape());
  const int C = x.c();
  const int64_t pixels = int64_t(x.h()) * x.w();
  for (int n = 0; n < x.n(); ++n) {
    const float* xp = x.plane(n, 0);
    float* yp = y.plane(n, 0);
    for (int64_t p = 0; p < pixels; ++p) {
      float ss = 0.0f;
      for (int c = 0; c < C; ++c) {
        const float v = xp[c * pixels + p];
        ss += v * v;
      }
      const float inv = 1.0f / std::sqrt(ss + kEps);
      for (int c = 0; c < C; ++c) yp[c * pixels + p] = gamma[c] * xp[c * pixels + p] * inv;
    }
  }
  return y;
}

}  // namespace td

#include "dfpn.hpp"

#include "weights.hpp"

namespace td {

namespace {

int emit_lateral(Graph& g, int in, int out_c, const std::string& name) {
  return g.add_conv(name, in, pointwise_spec(g.out_channels(in), out_c), true, true);
}

// dw3x3 stride 2 then 1x1 projection, BN+ReLU after each conv. The final
// pyramid module uses pad 0 (valid) so a 3x3 map reduces to 1x1.
int emit_downsample(Graph& g, int in, int out_c, const std::string& prefix, int pad) {
  const int c = g.out_channels(in);
  int x = g.add_conv(prefix + ".dw", in, depthwise_spec(c, 3, 2, pad), true, true);
  return g.add_conv(prefix + ".pw", x, pointwise_spec(c, out_c), true, true);
}

// bilinear resize to the target level's size, then dw3x3 + BN (no ReLU, the
// result feeds an additive merge).
int emit_upsample(Graph& g, int top, int size_like, const std::string& prefix) {
  int x = g.add_bilinear_like(prefix + ".resample", top, size_like);
  return g.add_conv(prefix + ".dw", x, depthwise_spec(g.out_channels(top)), true, false);
}

}  // namespace

std::array<int, kPyramidLevels> emit_dfpn(Graph& g, int tap38, int tap19, const DfpnConfig& cfg) {
  if (cfg.channels < 1) fail(Errc::config, "field 'dfpn.channels': must be >= 1");
  std::array<int, kPyramidLevels> down{};
  down[0] = emit_lateral(g, tap38, cfg.channels, "dfpn.lateral1");
  down[1] = emit_lateral(g, tap19, cfg.channels, "dfpn.lateral2");
  for (int k = 2; k < kPyramidLevels; ++k) {
    const bool last = (k == kPyramidLevels - 1);
    down[size_t(k)] = emit_downsample(g, down[size_t(k - 1)], cfg.channels,
                                      "dfpn.down" + std::to_string(k + 1), last ? 0 : 1);
  }
  if (!cfg.enabled) return down;

  std::array<int, kPyramidLevels> merged{};
  merged[kPyramidLevels - 1] = down[kPyramidLevels - 1];
  for (int k = kPyramidLevels - 2; k >= 0; --k) {
    int up = emit_upsample(g, merged[size_t(k + 1)], down[size_t(k)],
                           "dfpn.up" + std::to_string(k + 1));
    merged[size_t(k)] = g.add_add("dfpn.merge" + std::to_string(k + 1), down[size_t(k)], up);
  }
  return merged;
}

Tensor lateral_project_forward(const Tensor& tap, int out_c, const WeightStore& weights,
                               const std::string& prefix, const RunOptions& opt) {
  Graph g;
  int in = g.add_input("in", tap.c());
  int out = emit_lateral(g, in, out_c, prefix);
  const Tensor xs[] = {tap};
  const int wanted[] = {out};
  return std::move(run_graph(g, xs, weights, wanted, opt)[0]);
}

Tensor downsample_forward(const Tensor& x, int out_c, const WeightStore& weights,
                          const std::string& prefix, int pad, const RunOptions& opt) {
  Graph g;
  int in = g.add_input("in", x.c());
  int out = emit_downsample(g, in, out_c, prefix, pad);
  const Tensor xs[] = {x};
  const int wanted[] = {out};
  return std::move(run_graph(g, xs, weights, wanted, opt)[0]);
}

Tensor upsample_forward(const Tensor& top, int target_h, int target_w,
                        const WeightStore& weights, const std::string& prefix,
                        const RunOptions& opt) {
  if (target_h < top.h() || target_w < top.w())
    fail(Errc::invalid_argument, "upsample target must be at least the input size");
  Graph g;
  int in = g.add_input("in", top.c());
  int res = g.add_bilinear_fixed(prefix + ".resample", in, target_h, target_w);
  int out = g.add_conv(prefix + ".dw", res, depthwise_spec(top.c()), true, false);
  const Tensor xs[] = {top};
  const int wanted[] = {out};
  return std::move(run_graph(g, xs, weights, wanted, opt)[0]);
}

std::array<Tensor, kPyramidLevels> dfpn_forward(const FeatureTaps& taps,
                                                const WeightStore& weights, const DfpnConfig& cfg,
                                                const RunOptions& opt) {
  Graph g;
  int t38 = g.add_input("tap38", taps.tap38.c());
  int t19 = g.add_input("tap19", taps.tap19.c());
  std::array<int, kPyramidLevels> ids = emit_dfpn(g, t38, t19, cfg);
  const Tensor xs[] = {taps.tap38, taps.tap19};
  std::vector<Tensor> out = run_graph(g, xs, weights, std::span<const int>(ids), opt);
  std::array<Tensor, kPyramidLevels> levels;
  for (int i = 0; i < kPyramidLevels; ++i) levels[size_t(i)] = std::move(out[size_t(i)]);
  return levels;
}

}  // namespace td

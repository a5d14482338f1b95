#include "backbone.hpp"

#include "weights.hpp"

namespace td {

BackboneTapIds emit_backbone(Graph& g, int in, const BackboneConfig& cfg) {
  for (int i = 0; i < 4; ++i) {
    if (cfg.growth[size_t(i)] < 1)
      fail(Errc::config, "field 'backbone.growth': stage " + std::to_string(i) +
                             " growth must be >= 1");
    if (cfg.repeats[size_t(i)] < 0)
      fail(Errc::config, "field 'backbone.repeats': stage " + std::to_string(i) +
                             " repeat must be >= 0");
    if (cfg.transitions[size_t(i)] < 1)
      fail(Errc::config, "field 'backbone.transitions': stage " + std::to_string(i) +
                             " out channels must be >= 1");
  }
  if (cfg.block == BlockKind::ddb_a && cfg.expand < 1)
    fail(Errc::config, "field 'backbone.expand': must be >= 1 for ddb-a");

  BackboneTapIds taps;
  int x = emit_stem(g, in);
  for (int k = 0; k < 4; ++k) {
    StageSpec stage{cfg.block, cfg.growth[size_t(k)], cfg.expand, cfg.repeats[size_t(k)]};
    x = emit_stage(g, x, stage, "stage" + std::to_string(k));
    if (k == 1) taps.tap38 = x;  // highest-capacity 38x38 map, pre-transition
    TransitionSpec trans{g.out_channels(x), cfg.transitions[size_t(k)], k < 2};
    x = emit_transition(g, x, trans, "trans" + std::to_string(k));
  }
  taps.tap19 = x;
  return taps;
}

BackboneGraph build_backbone(const BackboneConfig& cfg) {
  BackboneGraph bg;
  bg.input = bg.graph.add_input("image", 3);
  BackboneTapIds taps = emit_backbone(bg.graph, bg.input, cfg);
  bg.tap38 = taps.tap38;
  bg.tap19 = taps.tap19;
  return bg;
}

FeatureTaps backbone_forward(const BackboneGraph& bg, const Tensor& img,
                             const WeightStore& weights, const RunOptions& opt) {
  const Tensor in[] = {img};
  const int wanted[] = {bg.tap38, bg.tap19};
  std::vector<Tensor> out = run_graph(bg.graph, in, weights, wanted, opt);
  return FeatureTaps{std::move(out[0]), std::move(out[1])};
}

}  // namespace td

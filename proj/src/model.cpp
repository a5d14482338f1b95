#include "model.hpp"

namespace td {

Model build_model(const ArchConfig& cfg) {
  Model m;
  m.cfg = cfg;
  m.input = m.graph.add_input("input", 3);
  BackboneTapIds taps = emit_backbone(m.graph, m.input, cfg.backbone);
  m.tap38 = taps.tap38;
  m.tap19 = taps.tap19;
  m.pyramid = emit_dfpn(m.graph, m.tap38, m.tap19, cfg.dfpn);
  m.head = emit_head(m.graph, m.pyramid, cfg.head);

  // the configured input size must produce six non-empty levels
  try {
    const Shape in[] = {m.input_shape()};
    infer_shapes(m.graph, in);
  } catch (const Error& e) {
    fail(Errc::config, "input size " + std::to_string(cfg.input.height) + "x" +
                           std::to_string(cfg.input.width) +
                           " is too small for six pyramid levels (" + e.what() + ")");
  }
  return m;
}

std::vector<LevelSize> model_level_sizes(const Model& m, int input_h, int input_w) {
  const Shape in[] = {Shape{1, 3, input_h, input_w}};
  std::vector<Shape> shapes = infer_shapes(m.graph, in);
  std::vector<LevelSize> sizes;
  sizes.reserve(kPyramidLevels);
  for (int id : m.pyramid)
    sizes.push_back({shapes[size_t(id)].h, shapes[size_t(id)].w});
  return sizes;
}

ModelReport model_report(const Model& m, int input_h, int input_w) {
  const Shape in[] = {Shape{1, 3, input_h, input_w}};
  return analyze_graph(m.graph, in);
}

std::vector<PriorBox> model_priors(const Model& m) {
  std::vector<LevelSize> sizes = model_level_sizes(m, m.cfg.input.height, m.cfg.input.width);
  return gen_priors(m.cfg.head, sizes);
}

std::vector<Detection> detect(const Model& m, const WeightStore& weights, const Tensor& image,
                              float conf_thresh, const RunOptions& opt) {
  if (image.n() != 1) fail(Errc::invalid_argument, "detect: batch must be 1");
  if (image.c() != 3 || image.h() != m.cfg.input.height || image.w() != m.cfg.input.width)
    fail(Errc::shape_mismatch, "detect: image must be 1x3x" +
                                   std::to_string(m.cfg.input.height) + "x" +
                                   std::to_string(m.cfg.input.width) + ", got " +
                                   image.shape().str());

  std::vector<int> wanted(m.head.loc.begin(), m.head.loc.end());
  wanted.insert(wanted.end(), m.head.conf.begin(), m.head.conf.end());
  const Tensor in[] = {image};
  std::vector<Tensor> maps = run_graph(m.graph, in, weights, wanted, opt);

  HeadOutput out = flatten_head(std::span<const Tensor>(maps.data(), 6),
                                std::span<const Tensor>(maps.data() + 6, 6), m.cfg.head);
  softmax_categories(out);

  std::vector<PriorBox> priors = model_priors(m);
  const float thresh = conf_thresh < 0.0f ? m.cfg.head.conf_thresh : conf_thresh;
  return select_detections(out, priors, m.cfg.head, thresh);
}

}  // namespace td

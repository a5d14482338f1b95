// Ties the pieces together: config -> full layer graph (backbone + pyramid +
// head) plus the end-to-end detection pipeline.
#pragma once

#include "analysis.hpp"
#include "dfpn.hpp"
#include "head.hpp"
#include "weights.hpp"

namespace td {

struct Model {
  ArchConfig cfg;
  Graph graph;
  int input = -1;
  int tap38 = -1, tap19 = -1;
  std::array<int, kPyramidLevels> pyramid{};
  HeadNodeIds head;

  Shape input_shape(int batch = 1) const {
    return Shape{batch, 3, cfg.input.height, cfg.input.width};
  }
};

// Builds and validates the graph; fails with a config error when the input
// size cannot sustain six pyramid levels.
Model build_model(const ArchConfig& cfg);

// Spatial sizes of the six pyramid levels for a given input size.
std::vector<LevelSize> model_level_sizes(const Model& m, int input_h, int input_w);

ModelReport model_report(const Model& m, int input_h, int input_w);

std::vector<PriorBox> model_priors(const Model& m);

// Full pipeline on a preprocessed 1x3xHxW image tensor. `conf_thresh` < 0
// uses the configured threshold.
std::vector<Detection> detect(const Model& m, const WeightStore& weights, const Tensor& image,
                              float conf_thresh = -1.0f, const RunOptions& opt = {});

}  // namespace td

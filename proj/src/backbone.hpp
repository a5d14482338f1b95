// Assembles the full feature extractor (stem + four dense stages with
// transitions) and exposes the two taps the pyramid front-end consumes.
#pragma once

#include "blocks.hpp"

namespace td {

struct FeatureTaps {
  Tensor tap38;  // dense stage 1 output (416x38x38 under defaults at 300x300)
  Tensor tap19;  // transition 3 output (64x19x19 under defaults)
};

struct BackboneTapIds {
  int tap38 = -1;
  int tap19 = -1;
};

// Appends the backbone to an existing graph; `in` must produce 3 channels.
BackboneTapIds emit_backbone(Graph& g, int in, const BackboneConfig& cfg);

// Standalone backbone graph with its own image input.
struct BackboneGraph {
  Graph graph;
  int input = -1;
  int tap38 = -1;
  int tap19 = -1;
};

BackboneGraph build_backbone(const BackboneConfig& cfg);

FeatureTaps backbone_forward(const BackboneGraph& bg, const Tensor& img,
                             const WeightStore& weights, const RunOptions& opt = {});

}  // namespace td

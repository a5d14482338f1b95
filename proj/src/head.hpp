// Multibox prediction head: default-box generation, per-level
// depthwise-separable predictors, box decoding, greedy NMS and the final
// detection list.
#pragma once

#include <array>
#include <vector>

#include "config.hpp"
#include "graph.hpp"

namespace td {

// Normalized center-form default box.
struct PriorBox {
  float cx = 0, cy = 0, w = 0, h = 0;
};

// Final detection; background (category 0) is never emitted.
struct Detection {
  int category = 0;  // 1 .. categories-1
  float score = 0;
  float xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

struct LevelSize {
  int h = 0, w = 0;
};

// Priors in deterministic order: level-major, then row-major over cells,
// then per cell: square s_k, square sqrt(s_k*s_{k+1}), then ratios
// 2, 1/2 (and 3, 1/3 on six-box levels). Box sides are clipped to <= 1.
std::vector<PriorBox> gen_priors(const HeadConfig& cfg, std::span<const LevelSize> sizes);

uint64_t prior_count(const HeadConfig& cfg, std::span<const LevelSize> sizes);

// Per-level predictor node ids.
struct HeadNodeIds {
  std::array<int, 6> loc{};
  std::array<int, 6> conf{};
};

HeadNodeIds emit_head(Graph& g, const std::array<int, 6>& pyramid, const HeadConfig& cfg);

// Predictions flattened to prior order (level-major).
struct HeadOutput {
  int batch = 0;
  int priors = 0;
  int categories = 0;
  std::vector<float> loc;   // batch * priors * 4
  std::vector<float> conf;  // batch * priors * categories (raw logits)
};

HeadOutput flatten_head(std::span<const Tensor> loc_maps, std::span<const Tensor> conf_maps,
                        const HeadConfig& cfg);

// Standalone head forward on six pyramid tensors.
HeadOutput head_forward(std::span<const Tensor> pyramid, const WeightStore& weights,
                        const HeadConfig& cfg, const RunOptions& opt = {});

// In-place softmax over the category axis of HeadOutput::conf.
void softmax_categories(HeadOutput& out);

// Variance-encoded offsets -> clipped corner box.
std::array<float, 4> decode_box(const PriorBox& prior, const float loc[4],
                                const std::array<float, 4>& variances);

// Greedy NMS: descending score, suppress IoU > threshold, ties broken by
// lower index. Returns kept indices in selection order.
std::vector<int> nms(std::span<const std::array<float, 4>> boxes, std::span<const float> scores,
                     float iou_threshold);

float box_iou(const std::array<float, 4>& a, const std::array<float, 4>& b);

// Post-processing shared by detect(): threshold, per-category NMS, global
// top-k. `conf` must already be softmaxed.
std::vector<Detection> select_detections(const HeadOutput& out,
                                         std::span<const PriorBox> priors, const HeadConfig& cfg,
                                         float conf_thresh);

// Normative one-line text form: "category score xmin ymin xmax ymax".
std::string detections_to_text(std::span<const Detection> dets);

}  // namespace td

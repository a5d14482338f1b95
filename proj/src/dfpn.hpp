// Depthwise feature pyramid front-end: a downsampling path that extends the
// two backbone taps to six scales, and an optional reverse path that carries
// deeper semantics back up via bilinear resampling + depthwise convolution,
// merged by element-wise addition.
#pragma once

#include <array>

#include "backbone.hpp"

namespace td {

inline constexpr int kPyramidLevels = 6;

// Appends the pyramid to a graph. Returns the node ids of the six final
// level tensors (reverse path applied when cfg.enabled).
std::array<int, kPyramidLevels> emit_dfpn(Graph& g, int tap38, int tap19, const DfpnConfig& cfg);

// Standalone pieces.
Tensor lateral_project_forward(const Tensor& tap, int out_c, const WeightStore& weights,
                               const std::string& prefix, const RunOptions& opt = {});
Tensor downsample_forward(const Tensor& x, int out_c, const WeightStore& weights,
                          const std::string& prefix, int pad = 1, const RunOptions& opt = {});
Tensor upsample_forward(const Tensor& top, int target_h, int target_w, const WeightStore& weights,
                        const std::string& prefix, const RunOptions& opt = {});

std::array<Tensor, kPyramidLevels> dfpn_forward(const FeatureTaps& taps,
                                                const WeightStore& weights, const DfpnConfig& cfg,
                                                const RunOptions& opt = {});

}  // namespace td

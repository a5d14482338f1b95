// Static model accounting: per-layer shapes, parameter counts and
// multiply-accumulate counts, plus the DDB complexity-scaling scanner.
// Convention: 1 FLOP = 1 MAC; pooling, activations, additions, resampling
// and normalization are tracked separately as elementwise ops.
#pragma once

#include <span>

#include "blocks.hpp"
#include "graph.hpp"

namespace td {

struct LayerRow {
  std::string name;
  std::string kind;
  Shape out;
  uint64_t params = 0;
  uint64_t macs = 0;
  uint64_t elems = 0;  // elementwise op count, excluded from MACs
};

struct ModelReport {
  std::vector<LayerRow> rows;
  uint64_t total_params = 0;
  uint64_t total_macs = 0;
  uint64_t total_elems = 0;

  const LayerRow* find(const std::string& name) const;
};

ModelReport analyze_graph(const Graph& g, std::span<const Shape> inputs);

// Parameter total from the per-layer formulas alone (standard conv:
// out*in*kh*kw, depthwise: c*kh*kw, bias: out, batchnorm: 2 per channel,
// L2 norm: 1 per channel). Independent of rand_init's array sizes.
uint64_t count_params(const Graph& g);

uint64_t count_flops(const Graph& g, std::span<const Shape> inputs);

std::string format_report_text(const ModelReport& report);
std::string format_report_csv(const ModelReport& report);
std::string format_totals_line(const ModelReport& report);  // "params: 0.98M  flops(MAC): 1.16B"

// Stacks L blocks at a fixed spatial size, counts MACs per depth, and fits
// the log-log slope over the largest half of the depths.
struct ComplexityFit {
  BlockKind kind = BlockKind::ddb_b;
  int g = 0, w = 0, n0 = 0;
  std::vector<int> depths;
  std::vector<uint64_t> macs;
  double exponent = 0.0;
};

ComplexityFit complexity_scan(BlockKind kind, int g, int w, int n0, std::span<const int> depths);

}  // namespace td

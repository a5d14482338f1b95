// Composite units of the backbone: stem, depthwise dense blocks (DDB-a and
// DDB-b), transition layers and dense stages. Each unit exists in two forms:
// an emitter that appends nodes to a graph, and a standalone forward that
// runs the unit on its own.
#pragma once

#include "config.hpp"
#include "graph.hpp"

namespace td {

struct DdbASpec {
  int g = 0;  // growth rate: channels appended by the block
  int w = 0;  // integer expand ratio for the inner depthwise conv
  int n = 0;  // input channel count
};

struct DdbBSpec {
  int g = 0;
  int n = 0;
};

struct TransitionSpec {
  int in_c = 0, out_c = 0;
  bool pool = false;  // 2x2 ceil-mode max pool after the 1x1 conv
};

struct StageSpec {
  BlockKind kind = BlockKind::ddb_b;
  int g = 0;
  int w = 0;  // ddb-a only
  int repeat = 0;
};

// Emitters; the return value is the unit's output node id. Weight names are
// derived from `prefix`: "<prefix>.pw", "<prefix>.dw", "<prefix>.pw2" for
// blocks, "<prefix>.conv" for transitions, and stages name their blocks
// "<prefix>.block<i>".
int emit_ddb_a(Graph& g, int in, const DdbASpec& spec, const std::string& prefix);
int emit_ddb_b(Graph& g, int in, const DdbBSpec& spec, const std::string& prefix);
int emit_stem(Graph& g, int in);
int emit_transition(Graph& g, int in, const TransitionSpec& spec, const std::string& prefix);
int emit_stage(Graph& g, int in, const StageSpec& spec, const std::string& prefix);

Tensor ddb_a_forward(const Tensor& x, const DdbASpec& spec, const WeightStore& weights,
                     const std::string& prefix = "block", const RunOptions& opt = {});
Tensor ddb_b_forward(const Tensor& x, const DdbBSpec& spec, const WeightStore& weights,
                     const std::string& prefix = "block", const RunOptions& opt = {});
Tensor stem_forward(const Tensor& x, const WeightStore& weights, const RunOptions& opt = {});
Tensor transition_forward(const Tensor& x, const TransitionSpec& spec,
                          const WeightStore& weights, const std::string& prefix = "trans",
                          const RunOptions& opt = {});
Tensor stage_forward(const Tensor& x, const StageSpec& spec, const WeightStore& weights,
                     const std::string& prefix = "stage", const RunOptions& opt = {});

}  // namespace td

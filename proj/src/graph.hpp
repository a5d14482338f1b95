// Flat layer graph: nodes reference producers by index, weights are looked
// up by node name. One graph drives both the numeric forward pass and the
// static shape/params/MACs analysis.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "kernels.hpp"

namespace td {

class WeightStore;

enum class OpKind { input, conv, pool, bilinear, concat, add, l2norm };

struct Node {
  std::string name;
  OpKind kind = OpKind::input;
  std::vector<int> in;  // producer node ids

  ConvSpec conv;      // conv nodes
  bool bn = false;    // conv followed by batchnorm (stored as .bn.scale/.bn.shift)
  bool relu = false;  // trailing ReLU

  int pool_k = 2, pool_s = 2;  // pool nodes (ceil mode)

  // bilinear nodes: resize to the spatial size of node `size_like`, or to
  // the fixed (out_h, out_w) when size_like < 0.
  int size_like = -1;
  int out_h = 0, out_w = 0;

  int channels = 0;  // static output channel count
};

class Graph {
 public:
  int add_input(const std::string& name, int channels);
  int add_conv(const std::string& name, int in, const ConvSpec& spec, bool bn, bool relu);
  int add_pool(const std::string& name, int in, int k = 2, int s = 2);
  int add_bilinear_like(const std::string& name, int in, int size_like);
  int add_bilinear_fixed(const std::string& name, int in, int out_h, int out_w);
  int add_concat(const std::string& name, const std::vector<int>& in);
  int add_add(const std::string& name, int a, int b);
  int add_l2norm(const std::string& name, int in);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int id) const { return nodes_[size_t(id)]; }
  int size() const { return int(nodes_.size()); }
  const std::vector<int>& input_ids() const { return input_ids_; }
  int out_channels(int id) const { return nodes_[size_t(id)].channels; }

  // -1 when no node has this name
  int find(const std::string& name) const;

 private:
  int push(Node n);
  void check_id(int id, const std::string& who) const;

  std::vector<Node> nodes_;
  std::vector<int> input_ids_;
};

struct RunOptions {
  bool fold_bn = true;  // merge batchnorm into conv weights before the conv
};

// Evaluates the graph on the given inputs (one tensor per input node, in
// declaration order) and returns the tensors of the `wanted` nodes in order.
// Intermediates are released as soon as their last consumer has run.
std::vector<Tensor> run_graph(const Graph& g, std::span<const Tensor> inputs,
                              const WeightStore& weights, std::span<const int> wanted,
                              const RunOptions& opt = {});

// Shapes of every node for the given input shapes (no numeric work).
std::vector<Shape> infer_shapes(const Graph& g, std::span<const Shape> inputs);

// Weight records a graph expects, in deterministic node order.
struct RecordSpec {
  enum class Init { xavier, zero, one, l2norm_gamma };
  std::string name;
  std::vector<uint32_t> dims;
  Init init = Init::zero;
  int fan_in = 0, fan_out = 0;  // xavier only

  uint64_t value_count() const;
};

std::vector<RecordSpec> enumerate_records(const Graph& g);

}  // namespace td

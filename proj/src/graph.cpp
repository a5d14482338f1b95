#include "graph.hpp"

#include <algorithm>

#include "weights.hpp"

namespace td {

int Graph::push(Node n) {
  if (n.name.empty()) fail(Errc::invalid_argument, "graph nodes need a name");
  if (find(n.name) >= 0) fail(Errc::invalid_argument, "duplicate layer name '" + n.name + "'");
  for (int id : n.in) check_id(id, n.name);
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

void Graph::check_id(int id, const std::string& who) const {
  if (id < 0 || id >= int(nodes_.size()))
    fail(Errc::invalid_argument, "layer '" + who + "' references unknown node " +
                                     std::to_string(id));
}

int Graph::find(const std::string& name) const {
  for (size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name) return int(i);
  return -1;
}

int Graph::add_input(const std::string& name, int channels) {
  if (channels < 1) fail(Errc::invalid_argument, "input '" + name + "' needs channels >= 1");
  Node n;
  n.name = name;
  n.kind = OpKind::input;
  n.channels = channels;
  int id = push(std::move(n));
  input_ids_.push_back(id);
  return id;
}

int Graph::add_conv(const std::string& name, int in, const ConvSpec& spec, bool bn, bool relu) {
  check_id(in, name);
  spec.validate();
  if (nodes_[size_t(in)].channels != spec.in_c)
    fail(Errc::config, "layer '" + name + "': expects " + std::to_string(spec.in_c) +
                           " input channels but '" + nodes_[size_t(in)].name + "' produces " +
                           std::to_string(nodes_[size_t(in)].channels));
  Node n;
  n.name = name;
  n.kind = OpKind::conv;
  n.in = {in};
  n.conv = spec;
  n.bn = bn;
  n.relu = relu;
  n.channels = spec.out_c;
  return push(std::move(n));
}

int Graph::add_pool(const std::string& name, int in, int k, int s) {
  check_id(in, name);
  Node n;
  n.name = name;
  n.kind = OpKind::pool;
  n.in = {in};
  n.pool_k = k;
  n.pool_s = s;
  n.channels = nodes_[size_t(in)].channels;
  return push(std::move(n));
}

int Graph::add_bilinear_like(const std::string& name, int in, int size_like) {
  check_id(in, name);
  check_id(size_like, name);
  Node n;
  n.name = name;
  n.kind = OpKind::bilinear;
  n.in = {in};
  n.size_like = size_like;
  n.channels = nodes_[size_t(in)].channels;
  return push(std::move(n));
}

int Graph::add_bilinear_fixed(const std::string& name, int in, int out_h, int out_w) {
  check_id(in, name);
  if (out_h < 1 || out_w < 1)
    fail(Errc::invalid_argument, "layer '" + name + "': target size must be >= 1");
  Node n;
  n.name = name;
  n.kind = OpKind::bilinear;
  n.in = {in};
  n.out_h = out_h;
  n.out_w = out_w;
  n.channels = nodes_[size_t(in)].channels;
  return push(std::move(n));
}

int Graph::add_concat(const std::string& name, const std::vector<int>& in) {
  if (in.empty()) fail(Errc::invalid_argument, "layer '" + name + "': concat needs inputs");
  int total = 0;
  for (int id : in) {
    check_id(id, name);
    total += nodes_[size_t(id)].channels;
  }
  Node n;
  n.name = name;
  n.kind = OpKind::concat;
  n.in = in;
  n.channels = total;
  return push(std::move(n));
}

int Graph::add_add(const std::string& name, int a, int b) {
  check_id(a, name);
  check_id(b, name);
  if (nodes_[size_t(a)].channels != nodes_[size_t(b)].channels)
    fail(Errc::config, "layer '" + name + "': operands have " +
                           std::to_string(nodes_[size_t(a)].channels) + " vs " +
                           std::to_string(nodes_[size_t(b)].channels) + " channels");
  Node n;
  n.name = name;
  n.kind = OpKind::add;
  n.in = {a, b};
  n.channels = nodes_[size_t(a)].channels;
  return push(std::move(n));
}

int Graph::add_l2norm(const std::string& name, int in) {
  check_id(in, name);
  Node n;
  n.name = name;
  n.kind = OpKind::l2norm;
  n.in = {in};
  n.channels = nodes_[size_t(in)].channels;
  return push(std::move(n));
}

namespace {

Shape node_out_shape(const Node& n, const Shape& x, std::span<const Shape> all) {
  switch (n.kind) {
    case OpKind::input:
      return x;
    case OpKind::conv: {
      int oh = n.conv.out_h(x.h), ow = n.conv.out_w(x.w);
      if (oh < 1 || ow < 1)
        fail(Errc::shape_mismatch, "layer '" + n.name + "': output would be empty for input " +
                                       x.str());
      return Shape{x.n, n.conv.out_c, oh, ow};
    }
    case OpKind::pool: {
      int oh = (x.h <= n.pool_k) ? 1 : (x.h - n.pool_k + n.pool_s - 1) / n.pool_s + 1;
      int ow = (x.w <= n.pool_k) ? 1 : (x.w - n.pool_k + n.pool_s - 1) / n.pool_s + 1;
      return Shape{x.n, x.c, oh, ow};
    }
    case OpKind::bilinear: {
      int oh = n.out_h, ow = n.out_w;
      if (n.size_like >= 0) {
        oh = all[size_t(n.size_like)].h;
        ow = all[size_t(n.size_like)].w;
      }
      return Shape{x.n, x.c, oh, ow};
    }
    case OpKind::concat:
      return Shape{x.n, n.channels, x.h, x.w};
    case OpKind::add:
    case OpKind::l2norm:
      return Shape{x.n, x.c, x.h, x.w};
  }
  fail(Errc::invalid_argument, "unreachable node kind");
}

}  // namespace

std::vector<Shape> infer_shapes(const Graph& g, std::span<const Shape> inputs) {
  if (inputs.size() != g.input_ids().size())
    fail(Errc::invalid_argument, "graph has " + std::to_string(g.input_ids().size()) +
                                     " inputs, got " + std::to_string(inputs.size()) +
                                     " shapes");
  std::vector<Shape> shapes(size_t(g.size()));
  size_t next_input = 0;
  for (int i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    if (n.kind == OpKind::input) {
      const Shape& s = inputs[next_input++];
      if (s.c != n.channels)
        fail(Errc::shape_mismatch, "input '" + n.name + "' expects " +
                                       std::to_string(n.channels) + " channels, got " + s.str());
      shapes[size_t(i)] = s;
      continue;
    }
    const Shape& x = shapes[size_t(n.in[0])];
    if (n.kind == OpKind::add && !(shapes[size_t(n.in[0])] == shapes[size_t(n.in[1])]))
      fail(Errc::shape_mismatch, "layer '" + n.name + "': operand shapes differ, " +
                                     shapes[size_t(n.in[0])].str() + " vs " +
                                     shapes[size_t(n.in[1])].str());
    shapes[size_t(i)] = node_out_shape(n, x, shapes);
  }
  return shapes;
}

std::vector<Tensor> run_graph(const Graph& g, std::span<const Tensor> inputs,
                              const WeightStore& weights, std::span<const int> wanted,
                              const RunOptions& opt) {
  if (inputs.size() != g.input_ids().size())
    fail(Errc::invalid_argument, "graph has " + std::to_string(g.input_ids().size()) +
                                     " inputs, got " + std::to_string(inputs.size()));
  // consumer counts so intermediates can be dropped early
  std::vector<int> refs(size_t(g.size()), 0);
  for (const Node& n : g.nodes())
    for (int id : n.in) ++refs[size_t(id)];
  for (int id : wanted) {
    if (id < 0 || id >= g.size()) fail(Errc::invalid_argument, "wanted node id out of range");
    ++refs[size_t(id)];
  }

  std::vector<Tensor> slots(size_t(g.size()));
  std::vector<Shape> shapes(size_t(g.size()));
  size_t next_input = 0;

  auto release = [&](int id) {
    if (--refs[size_t(id)] == 0) slots[size_t(id)] = Tensor();
  };

  for (int i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    Tensor out;
    try {
      switch (n.kind) {
        case OpKind::input: {
          const Tensor& t = inputs[next_input++];
          if (t.c() != n.channels)
            fail(Errc::shape_mismatch, "expects " + std::to_string(n.channels) +
                                           " channels, got " + t.shape().str());
          out = t;
          break;
        }
        case OpKind::conv: {
          const Tensor& x = slots[size_t(n.in[0])];
          std::span<const float> w = weights.values(n.name + ".w");
          std::span<const float> bias;
          if (n.conv.has_bias) bias = weights.values(n.name + ".b");
          if (n.bn) {
            std::span<const float> scale = weights.values(n.name + ".bn.scale");
            std::span<const float> shift = weights.values(n.name + ".bn.shift");
            if (opt.fold_bn) {
              auto [wf, bf] = fold_affine(w, bias, scale, shift, n.conv);
              ConvSpec folded = n.conv;
              folded.has_bias = true;
              out = n.conv.kind == ConvKind::depthwise ? dwconv2d(x, wf, bf, folded)
                                                       : conv2d(x, wf, bf, folded);
            } else {
              out = n.conv.kind == ConvKind::depthwise ? dwconv2d(x, w, bias, n.conv)
                                                       : conv2d(x, w, bias, n.conv);
              out = scale_shift_channels(out, scale, shift);
            }
          } else {
            out = n.conv.kind == ConvKind::depthwise ? dwconv2d(x, w, bias, n.conv)
                                                     : conv2d(x, w, bias, n.conv);
          }
          if (n.relu) relu_inplace(out);
          break;
        }
        case OpKind::pool:
          out = maxpool2d_ceil(slots[size_t(n.in[0])], n.pool_k, n.pool_s);
          break;
        case OpKind::bilinear: {
          int oh = n.out_h, ow = n.out_w;
          if (n.size_like >= 0) {
            oh = shapes[size_t(n.size_like)].h;
            ow = shapes[size_t(n.size_like)].w;
          }
          out = bilinear_resample(slots[size_t(n.in[0])], oh, ow);
          break;
        }
        case OpKind::concat: {
          std::vector<const Tensor*> xs;
          xs.reserve(n.in.size());
          for (int id : n.in) xs.push_back(&slots[size_t(id)]);
          out = concat_channels(xs);
          break;
        }
        case OpKind::add:
          out = add_elementwise(slots[size_t(n.in[0])], slots[size_t(n.in[1])]);
          break;
        case OpKind::l2norm:
          out = l2norm_channels(slots[size_t(n.in[0])], weights.values(n.name + ".gamma"));
          break;
      }
    } catch (const Error& e) {
      if (n.kind == OpKind::input) throw Error(e.code(), "input '" + n.name + "': " + e.what());
      throw Error(e.code(), "layer '" + n.name + "': " + e.what());
    }
    shapes[size_t(i)] = out.shape();
    slots[size_t(i)] = std::move(out);
    for (int id : n.in) release(id);
    if (refs[size_t(i)] == 0) slots[size_t(i)] = Tensor();
  }

  std::vector<Tensor> result;
  result.reserve(wanted.size());
  for (int id : wanted) result.push_back(slots[size_t(id)]);
  return result;
}

uint64_t RecordSpec::value_count() const {
  uint64_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

std::vector<RecordSpec> enumerate_records(const Graph& g) {
  std::vector<RecordSpec> out;
  for (const Node& n : g.nodes()) {
    if (n.kind == OpKind::conv) {
      RecordSpec w;
      w.name = n.name + ".w";
      if (n.conv.kind == ConvKind::depthwise)
        w.dims = {uint32_t(n.conv.in_c), 1, uint32_t(n.conv.kh), uint32_t(n.conv.kw)};
      else
        w.dims = {uint32_t(n.conv.out_c), uint32_t(n.conv.in_c), uint32_t(n.conv.kh),
                  uint32_t(n.conv.kw)};
      w.init = RecordSpec::Init::xavier;
      if (n.conv.kind == ConvKind::depthwise) {
        w.fan_in = n.conv.kh * n.conv.kw;
        w.fan_out = n.conv.kh * n.conv.kw;
      } else {
        w.fan_in = n.conv.in_c * n.conv.kh * n.conv.kw;
        w.fan_out = n.conv.out_c * n.conv.kh * n.conv.kw;
      }
      out.push_back(std::move(w));
      if (n.conv.has_bias)
        out.push_back({n.name + ".b", {uint32_t(n.conv.out_c)}, RecordSpec::Init::zero, 0, 0});
      if (n.bn) {
        out.push_back(
            {n.name + ".bn.scale", {uint32_t(n.conv.out_c)}, RecordSpec::Init::one, 0, 0});
        out.push_back(
            {n.name + ".bn.shift", {uint32_t(n.conv.out_c)}, RecordSpec::Init::zero, 0, 0});
      }
    } else if (n.kind == OpKind::l2norm) {
      out.push_back(
          {n.name + ".gamma", {uint32_t(n.channels)}, RecordSpec::Init::l2norm_gamma, 0, 0});
    }
  }
  return out;
}

}  // namespace td

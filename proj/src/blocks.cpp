#include "blocks.hpp"

#include "weights.hpp"

namespace td {

namespace {

void check_block_input(const char* what, int have, int want) {
  if (have != want)
    fail(Errc::config, std::string(what) + ": input has " + std::to_string(have) +
                           " channels, spec expects " + std::to_string(want));
}

// single-input fragment runner for the standalone forwards
Tensor run_fragment(Graph& g, int out, const Tensor& x, const WeightStore& ws,
                    const RunOptions& opt) {
  const Tensor in[] = {x};
  const int wanted[] = {out};
  return std::move(run_graph(g, in, ws, wanted, opt)[0]);
}

}  // namespace

int emit_ddb_a(Graph& g, int in, const DdbASpec& spec, const std::string& prefix) {
  if (spec.g < 1 || spec.w < 1)
    fail(Errc::config, "'" + prefix + "': growth and expand ratio must be >= 1");
  check_block_input(("'" + prefix + "'").c_str(), g.out_channels(in), spec.n);
  const int wide = spec.w * spec.n;
  int pw = g.add_conv(prefix + ".pw", in, pointwise_spec(spec.n, wide), true, true);
  int dw = g.add_conv(prefix + ".dw", pw, depthwise_spec(wide), true, true);
  int pw2 = g.add_conv(prefix + ".pw2", dw, pointwise_spec(wide, spec.g), true, true);
  return g.add_concat(prefix + ".concat", {in, pw2});
}

int emit_ddb_b(Graph& g, int in, const DdbBSpec& spec, const std::string& prefix) {
  if (spec.g < 1) fail(Errc::config, "'" + prefix + "': growth must be >= 1");
  check_block_input(("'" + prefix + "'").c_str(), g.out_channels(in), spec.n);
  int pw = g.add_conv(prefix + ".pw", in, pointwise_spec(spec.n, spec.g), true, true);
  int dw = g.add_conv(prefix + ".dw", pw, depthwise_spec(spec.g), true, true);
  return g.add_concat(prefix + ".concat", {in, dw});
}

int emit_stem(Graph& g, int in) {
  check_block_input("stem", g.out_channels(in), 3);
  int x = g.add_conv("stem.conv1", in, conv_spec(3, 64, 3, 2, 1), true, true);
  x = g.add_conv("stem.conv2", x, pointwise_spec(64, 64), true, true);
  x = g.add_conv("stem.dw1", x, depthwise_spec(64), true, true);
  x = g.add_conv("stem.conv3", x, pointwise_spec(64, 128), true, true);
  x = g.add_conv("stem.dw2", x, depthwise_spec(128), true, true);
  return g.add_pool("stem.pool", x);
}

int emit_transition(Graph& g, int in, const TransitionSpec& spec, const std::string& prefix) {
  if (spec.out_c < 1) fail(Errc::config, "'" + prefix + "': out channels must be >= 1");
  check_block_input(("'" + prefix + "'").c_str(), g.out_channels(in), spec.in_c);
  int x = g.add_conv(prefix + ".conv", in, pointwise_spec(spec.in_c, spec.out_c), true, true);
  if (spec.pool) x = g.add_pool(prefix + ".pool", x);
  return x;
}

int emit_stage(Graph& g, int in, const StageSpec& spec, const std::string& prefix) {
  if (spec.repeat < 0) fail(Errc::config, "'" + prefix + "': repeat must be >= 0");
  int x = in;
  for (int i = 0; i < spec.repeat; ++i) {
    const std::string name = prefix + ".block" + std::to_string(i);
    const int n = g.out_channels(x);
    if (spec.kind == BlockKind::ddb_a)
      x = emit_ddb_a(g, x, DdbASpec{spec.g, spec.w, n}, name);
    else
      x = emit_ddb_b(g, x, DdbBSpec{spec.g, n}, name);
  }
  return x;
}

Tensor ddb_a_forward(const Tensor& x, const DdbASpec& spec, const WeightStore& weights,
                     const std::string& prefix, const RunOptions& opt) {
  Graph g;
  int in = g.add_input("in", spec.n);
  int out = emit_ddb_a(g, in, spec, prefix);
  return run_fragment(g, out, x, weights, opt);
}

Tensor ddb_b_forward(const Tensor& x, const DdbBSpec& spec, const WeightStore& weights,
                     const std::string& prefix, const RunOptions& opt) {
  Graph g;
  int in = g.add_input("in", spec.n);
  int out = emit_ddb_b(g, in, spec, prefix);
  return run_fragment(g, out, x, weights, opt);
}

Tensor stem_forward(const Tensor& x, const WeightStore& weights, const RunOptions& opt) {
  Graph g;
  int in = g.add_input("in", 3);
  int out = emit_stem(g, in);
  return run_fragment(g, out, x, weights, opt);
}

Tensor transition_forward(const Tensor& x, const TransitionSpec& spec, const WeightStore& weights,
                          const std::string& prefix, const RunOptions& opt) {
  Graph g;
  int in = g.add_input("in", spec.in_c);
  int out = emit_transition(g, in, spec, prefix);
  return run_fragment(g, out, x, weights, opt);
}

Tensor stage_forward(const Tensor& x, const StageSpec& spec, const WeightStore& weights,
                     const std::string& prefix, const RunOptions& opt) {
  Graph g;
  int in = g.add_input("in", x.c());
  int out = emit_stage(g, in, spec, prefix);
  if (out == in) return x;  // repeat == 0
  return run_fragment(g, out, x, weights, opt);
}

}  // namespace td

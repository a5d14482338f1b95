#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace td {

const LayerRow* ModelReport::find(const std::string& name) const {
  for (const LayerRow& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

namespace {

uint64_t conv_params(const Node& n) {
  uint64_t p = uint64_t(n.conv.weight_count());
  if (n.conv.has_bias) p += uint64_t(n.conv.out_c);
  if (n.bn) p += 2 * uint64_t(n.conv.out_c);
  return p;
}

uint64_t conv_macs(const Node& n, const Shape& out) {
  const uint64_t positions = uint64_t(out.n) * uint64_t(out.h) * uint64_t(out.w);
  if (n.conv.kind == ConvKind::depthwise)
    return positions * uint64_t(n.conv.in_c) * uint64_t(n.conv.kh) * uint64_t(n.conv.kw);
  return positions * uint64_t(n.conv.out_c) * uint64_t(n.conv.in_c) * uint64_t(n.conv.kh) *
         uint64_t(n.conv.kw);
}

std::string node_kind_str(const Node& n) {
  switch (n.kind) {
    case OpKind::input:
      return "input";
    case OpKind::conv: {
      std::string s = n.conv.describe();
      if (n.bn) s += "+bn";
      if (n.relu) s += "+relu";
      return s;
    }
    case OpKind::pool:
      return "maxpool" + std::to_string(n.pool_k) + "x" + std::to_string(n.pool_k) + "/s" +
             std::to_string(n.pool_s) + "(ceil)";
    case OpKind::bilinear:
      return "bilinear";
    case OpKind::concat:
      return "concat";
    case OpKind::add:
      return "add";
    case OpKind::l2norm:
      return "l2norm";
  }
  return "?";
}

}  // namespace

ModelReport analyze_graph(const Graph& g, std::span<const Shape> inputs) {
  std::vector<Shape> shapes = infer_shapes(g, inputs);
  ModelReport rep;
  rep.rows.reserve(size_t(g.size()));
  for (int i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    const Shape& out = shapes[size_t(i)];
    LayerRow row;
    row.name = n.name;
    row.kind = node_kind_str(n);
    row.out = out;
    switch (n.kind) {
      case OpKind::input:
        break;
      case OpKind::conv:
        row.params = conv_params(n);
        row.macs = conv_macs(n, out);
        if (n.relu || n.bn) row.elems = uint64_t(out.numel());
        break;
      case OpKind::l2norm:
        row.params = uint64_t(n.channels);
        row.elems = uint64_t(out.numel());
        break;
      case OpKind::pool:
      case OpKind::bilinear:
      case OpKind::add:
      case OpKind::concat:
        row.elems = uint64_t(out.numel());
        break;
    }
    rep.total_params += row.params;
    rep.total_macs += row.macs;
    rep.total_elems += row.elems;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

uint64_t count_params(const Graph& g) {
  uint64_t total = 0;
  for (const Node& n : g.nodes()) {
    if (n.kind == OpKind::conv)
      total += conv_params(n);
    else if (n.kind == OpKind::l2norm)
      total += uint64_t(n.channels);
  }
  return total;
}

uint64_t count_flops(const Graph& g, std::span<const Shape> inputs) {
  return analyze_graph(g, inputs).total_macs;
}

std::string format_report_text(const ModelReport& report) {
  size_t name_w = 5;
  size_t kind_w = 4;
  for (const LayerRow& r : report.rows) {
    name_w = std::max(name_w, r.name.size());
    kind_w = std::max(kind_w, r.kind.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(int(name_w + 2)) << "layer" << std::setw(int(kind_w + 2))
      << "kind" << std::setw(16) << "output" << std::right << std::setw(12) << "params"
      << std::setw(16) << "macs" << "\n";
  for (const LayerRow& r : report.rows) {
    out << std::left << std::setw(int(name_w + 2)) << r.name << std::setw(int(kind_w + 2))
        << r.kind << std::setw(16) << r.out.chw_str() << std::right << std::setw(12) << r.params
        << std::setw(16) << r.macs << "\n";
  }
  out << std::left << std::setw(int(name_w + 2)) << "total" << std::setw(int(kind_w + 2)) << ""
      << std::setw(16) << "" << std::right << std::setw(12) << report.total_params
      << std::setw(16) << report.total_macs << "\n";
  out << format_totals_line(report) << "\n";
  out << "elementwise ops (not counted as MACs): " << report.total_elems << "\n";
  return out.str();
}

std::string format_report_csv(const ModelReport& report) {
  std::ostringstream out;
  out << "name,kind,out_c,out_h,out_w,params,macs\n";
  for (const LayerRow& r : report.rows)
    out << r.name << "," << r.kind << "," << r.out.c << "," << r.out.h << "," << r.out.w << ","
        << r.params << "," << r.macs << "\n";
  out << "total,,,,," << report.total_params << "," << report.total_macs << "\n";
  return out.str();
}

std::string format_totals_line(const ModelReport& report) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "params: %.2fM  flops(MAC): %.2fB",
                double(report.total_params) / 1e6, double(report.total_macs) / 1e9);
  return buf;
}

ComplexityFit complexity_scan(BlockKind kind, int g, int w, int n0, std::span<const int> depths) {
  if (depths.size() < 2)
    fail(Errc::invalid_argument, "complexity_scan: need at least two depths");
  if (g < 1 || n0 < 1) fail(Errc::invalid_argument, "complexity_scan: g and n0 must be >= 1");
  if (kind == BlockKind::ddb_a && w < 1)
    fail(Errc::invalid_argument, "complexity_scan: ddb-a needs expand ratio >= 1");

  ComplexityFit fit;
  fit.kind = kind;
  fit.g = g;
  fit.w = kind == BlockKind::ddb_a ? w : 0;
  fit.n0 = n0;
  fit.depths.assign(depths.begin(), depths.end());
  std::sort(fit.depths.begin(), fit.depths.end());
  for (int d : fit.depths)
    if (d < 1) fail(Errc::invalid_argument, "complexity_scan: depths must be >= 1");

  constexpr int kSpatial = 8;  // fixed spatial size; area scales every term equally
  for (int L : fit.depths) {
    Graph graph;
    int x = graph.add_input("in", n0);
    StageSpec stage{kind, g, w, L};
    emit_stage(graph, x, stage, "scan");
    const Shape in[] = {Shape{1, n0, kSpatial, kSpatial}};
    fit.macs.push_back(count_flops(graph, in));
  }
  for (size_t i = 1; i < fit.macs.size(); ++i)
    if (fit.macs[i] <= fit.macs[i - 1])
      fail(Errc::invalid_argument, "complexity_scan: MACs not increasing in depth");

  // least-squares slope of log(macs) vs log(L) over the largest half
  const size_t n = fit.depths.size();
  const size_t start = n - (n + 1) / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = double(n - start);
  for (size_t i = start; i < n; ++i) {
    const double lx = std::log(double(fit.depths[i]));
    const double ly = std::log(double(fit.macs[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return fit;
}

}  // namespace td

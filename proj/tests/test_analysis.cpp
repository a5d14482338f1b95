#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "model.hpp"
#include "oracles.hpp"

using namespace td;

namespace {

Model model_for(int categories, int height = 300, int width = 300) {
  ArchConfig cfg;
  cfg.head.categories = categories;
  cfg.input.height = height;
  cfg.input.width = width;
  return build_model(cfg);
}

// counts every multiply-accumulate a naive convolution would issue,
// including taps that land in the zero padding
uint64_t loop_counted_macs(int n, int in_c, int out_c, int h, int w, int k, int s, int p) {
  const int oh = (h + 2 * p - k) / s + 1;
  const int ow = (w + 2 * p - k) / s + 1;
  uint64_t macs = 0;
  for (int b = 0; b < n; ++b)
    for (int oc = 0; oc < out_c; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          for (int ic = 0; ic < in_c; ++ic)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) ++macs;
  return macs;
}

}  // namespace

TEST_CASE("per-layer parameter counts follow the formulas") {
  Model m = model_for(21);
  ModelReport rep = model_report(m, 300, 300);

  const LayerRow* conv1 = rep.find("stem.conv1");
  REQUIRE(conv1 != nullptr);
  CHECK(conv1->params == 1728 + 128);  // 64*3*3*3 weights + 2*64 batchnorm

  const LayerRow* t0 = rep.find("trans0.conv");
  REQUIRE(t0 != nullptr);
  CHECK(t0->params == 32768 + 256);  // 128*256 weights + 2*128 batchnorm
}

TEST_CASE("stem conv1 MACs at 300x300 and the loop-counting oracle") {
  Model m = model_for(21);
  ModelReport rep = model_report(m, 300, 300);
  const LayerRow* conv1 = rep.find("stem.conv1");
  REQUIRE(conv1 != nullptr);
  CHECK(conv1->macs == 38880000ULL);  // 150*150*64*3*3*3

  // same formula validated against an instrumented naive loop at 30x30
  Graph frag;
  int in = frag.add_input("in", 3);
  frag.add_conv("c", in, conv_spec(3, 64, 3, 2, 1), true, true);
  const Shape small[] = {Shape{1, 3, 30, 30}};
  ModelReport frag_rep = analyze_graph(frag, small);
  const LayerRow* c1 = frag_rep.find("c");
  REQUIRE(c1 != nullptr);
  CHECK(c1->macs == loop_counted_macs(1, 3, 64, 30, 30, 3, 2, 1));
}

TEST_CASE("resource totals land in the reported budget windows") {
  Model voc = model_for(21);
  ModelReport voc_rep = model_report(voc, 300, 300);
  CHECK(voc_rep.total_params >= 855000);
  CHECK(voc_rep.total_params <= 1045000);
  CHECK(voc_rep.total_macs >= 950000000ULL);
  CHECK(voc_rep.total_macs <= 1170000000ULL);

  Model coco = model_for(81);
  CHECK(model_report(coco, 300, 300).total_params >= 1035000);
  CHECK(model_report(coco, 300, 300).total_params <= 1265000);

  Model kitti = model_for(4, 300, 1200);
  ModelReport kitti_rep = model_report(kitti, 300, 1200);
  CHECK(kitti_rep.total_params >= 765000);
  CHECK(kitti_rep.total_params <= 935000);
  CHECK(kitti_rep.total_macs >= 3500000000ULL);
  CHECK(kitti_rep.total_macs <= 4700000000ULL);
}

TEST_CASE("count_params agrees with rand_init value counts and report rows") {
  for (int categories : {21, 81, 4}) {
    Model m = model_for(categories);
    const uint64_t formula = count_params(m.graph);
    WeightStore ws = rand_init(m.graph, 99);
    CHECK(formula == ws.total_value_count());

    ModelReport rep = model_report(m, 300, 300);
    uint64_t row_sum = 0;
    for (const LayerRow& r : rep.rows) row_sum += r.params;
    CHECK(formula == row_sum);
    CHECK(row_sum == rep.total_params);
  }
}

TEST_CASE("MAC totals scale linearly with input area") {
  Model m = model_for(21);
  const uint64_t at_300 = model_report(m, 300, 300).total_macs;
  const uint64_t at_wide = model_report(m, 300, 1200).total_macs;
  const double ratio = double(at_wide) / double(at_300);
  CHECK(ratio >= 3.8);
  CHECK(ratio <= 4.2);
}

TEST_CASE("complexity scan recovers the cubic ddb-a growth") {
  const int depths[] = {8, 16, 32, 64};
  ComplexityFit fit = complexity_scan(BlockKind::ddb_a, 8, 2, 32, depths);
  CHECK(fit.exponent >= 2.5);
  CHECK(fit.exponent <= 3.2);
  for (size_t i = 1; i < fit.macs.size(); ++i) CHECK(fit.macs[i] > fit.macs[i - 1]);
}

TEST_CASE("complexity scan recovers the quadratic ddb-b growth") {
  const int depths[] = {8, 16, 32, 64};
  ComplexityFit fit = complexity_scan(BlockKind::ddb_b, 32, 0, 32, depths);
  CHECK(fit.exponent >= 1.7);
  CHECK(fit.exponent <= 2.3);
}

TEST_CASE("doubling ddb-b depth approaches a 4x MAC ratio") {
  const int depths[] = {128, 256};
  ComplexityFit fit = complexity_scan(BlockKind::ddb_b, 32, 0, 32, depths);
  const double ratio = double(fit.macs[1]) / double(fit.macs[0]);
  CHECK(ratio >= 3.9);
  CHECK(ratio <= 4.02);
}

TEST_CASE("complexity scan needs at least two depths") {
  const int depths[] = {8};
  CHECK_THROWS_AS(complexity_scan(BlockKind::ddb_b, 32, 0, 32, depths), Error);
}

TEST_CASE("swapping ddb-b for ddb-a never reduces MACs when n0 >= g") {
  auto rng = oracle::test_rng(50);
  std::uniform_int_distribution<int> gd(1, 12), wd(1, 3), ld(1, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const int g = gd(rng), w = wd(rng), L = ld(rng);
    std::uniform_int_distribution<int> nd(g, 48);
    const int n0 = nd(rng);
    const int depths[] = {L, L + 1};
    ComplexityFit a = complexity_scan(BlockKind::ddb_a, g, w, n0, depths);
    ComplexityFit b = complexity_scan(BlockKind::ddb_b, g, 0, n0, depths);
    CHECK(a.macs[0] >= b.macs[0]);
  }
}

TEST_CASE("report rows reproduce the backbone output-size column") {
  Model m = model_for(21);
  ModelReport rep = model_report(m, 300, 300);
  const std::pair<const char*, Shape> checkpoints[] = {
      {"stem.pool", Shape{1, 128, 75, 75}},
      {"stage0.block3.concat", Shape{1, 256, 75, 75}},
      {"trans0.pool", Shape{1, 128, 38, 38}},
      {"stage1.block5.concat", Shape{1, 416, 38, 38}},
      {"trans1.pool", Shape{1, 128, 19, 19}},
      {"stage2.block5.concat", Shape{1, 512, 19, 19}},
      {"trans2.conv", Shape{1, 256, 19, 19}},
      {"stage3.block5.concat", Shape{1, 736, 19, 19}},
      {"trans3.conv", Shape{1, 64, 19, 19}},
  };
  for (const auto& [name, shape] : checkpoints) {
    const LayerRow* row = rep.find(name);
    REQUIRE_MESSAGE(row != nullptr, name);
    CHECK_MESSAGE(row->out == shape, name);
  }
}

TEST_CASE("an empty graph reports zero totals") {
  Graph g;
  g.add_input("in", 3);
  const Shape in[] = {Shape{1, 3, 8, 8}};
  ModelReport rep = analyze_graph(g, in);
  CHECK(rep.rows.size() == 1);
  CHECK(rep.total_params == 0);
  CHECK(rep.total_macs == 0);
  CHECK(format_report_text(rep).find("layer") != std::string::npos);
}

TEST_CASE("category count only changes the confidence predictor rows") {
  Model voc = model_for(21);
  Model coco = model_for(81);
  ModelReport a = model_report(voc, 300, 300);
  ModelReport b = model_report(coco, 300, 300);
  REQUIRE(a.rows.size() == b.rows.size());
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].name == b.rows[i].name);
    const bool conf_pw = a.rows[i].name.rfind("head.conf", 0) == 0 &&
                         a.rows[i].name.find(".pw") != std::string::npos;
    if (conf_pw)
      CHECK(a.rows[i].params < b.rows[i].params);
    else
      CHECK(a.rows[i].params == b.rows[i].params);
  }
}

TEST_CASE("csv report has one row per layer plus a total") {
  Model m = model_for(21);
  ModelReport rep = model_report(m, 300, 300);
  std::string csv = format_report_csv(rep);
  size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == rep.rows.size() + 2);  // header + rows + total
  CHECK(csv.rfind("total,,,,,", 0) == std::string::npos);  // total is last, not first
  CHECK(csv.find("total,,,,,") != std::string::npos);
}

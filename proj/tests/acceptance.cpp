// Acceptance suite: runs every resource-budget and property gate at its
// pinned tolerance and prints one PASS/FAIL line per criterion.
//
// Usage: acceptance <path-to-tinydsod-cli>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "image.hpp"
#include "model.hpp"
#include "oracles.hpp"

using namespace td;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, what.c_str());
  if (!ok) ++g_failures;
}

Model model_for(int categories, int height = 300, int width = 300) {
  ArchConfig cfg;
  cfg.head.categories = categories;
  cfg.input.height = height;
  cfg.input.width = width;
  return build_model(cfg);
}

std::string fmt_m(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3fM", double(v) / 1e6);
  return buf;
}

std::string fmt_b(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3fB", double(v) / 1e9);
  return buf;
}

// 1. Backbone output shapes, exact
void criterion_table_conformance() {
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
  int matched = 0;
  std::string bad;
  for (const auto& [name, want] : checkpoints) {
    const LayerRow* row = rep.find(name);
    if (row && row->out == want)
      ++matched;
    else
      bad += std::string(" ") + name;
  }
  // the stem's intermediate rows must hold as well
  const std::pair<const char*, Shape> stem_rows[] = {
      {"stem.conv1", Shape{1, 64, 150, 150}}, {"stem.conv2", Shape{1, 64, 150, 150}},
      {"stem.dw1", Shape{1, 64, 150, 150}},   {"stem.conv3", Shape{1, 128, 150, 150}},
      {"stem.dw2", Shape{1, 128, 150, 150}},
  };
  bool stem_ok = true;
  for (const auto& [name, want] : stem_rows) {
    const LayerRow* row = rep.find(name);
    stem_ok = stem_ok && row && row->out == want;
  }
  const bool ok = matched == 9 && stem_ok;
  report(1, ok,
         "backbone output shapes match the reference table exactly (" + std::to_string(matched) +
             "/9 checkpoints" + (bad.empty() ? "" : ", mismatched:" + bad) + ")");
}

// 2. Default 21-category budget
void criterion_voc_budget() {
  Model m = model_for(21);
  ModelReport rep = model_report(m, 300, 300);
  const bool params_ok = rep.total_params >= 855000 && rep.total_params <= 1045000;
  const bool macs_ok = rep.total_macs >= 950000000ULL && rep.total_macs <= 1170000000ULL;
  report(2, params_ok && macs_ok,
         "21-category budget: params " + fmt_m(rep.total_params) +
             " in [0.855M, 1.045M]; MACs " + fmt_b(rep.total_macs) + " in [0.95B, 1.17B]");
}

// 3. Category and input-size scaling
void criterion_category_scaling() {
  Model coco = model_for(81);
  const uint64_t coco_params = model_report(coco, 300, 300).total_params;
  const bool coco_ok = coco_params >= 1035000 && coco_params <= 1265000;

  Model kitti = model_for(4, 300, 1200);
  ModelReport kr = model_report(kitti, 300, 1200);
  const bool kitti_params_ok = kr.total_params >= 765000 && kr.total_params <= 935000;
  const bool kitti_macs_ok = kr.total_macs >= 3500000000ULL && kr.total_macs <= 4700000000ULL;

  report(3, coco_ok && kitti_params_ok && kitti_macs_ok,
         "scaling: 81-category params " + fmt_m(coco_params) +
             " in [1.035M, 1.265M]; 4-category at 1200x300 params " + fmt_m(kr.total_params) +
             " in [0.765M, 0.935M], MACs " + fmt_b(kr.total_macs) + " in [3.5B, 4.7B]");
}

// 4. Stacked-block complexity exponents
void criterion_complexity() {
  const int depths[] = {8, 16, 32, 64};
  ComplexityFit a = complexity_scan(BlockKind::ddb_a, 8, 2, 32, depths);
  ComplexityFit b = complexity_scan(BlockKind::ddb_b, 32, 0, 32, depths);
  const bool a_ok = a.exponent >= 2.5 && a.exponent <= 3.2;
  const bool b_ok = b.exponent >= 1.7 && b.exponent <= 2.3;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "complexity exponents: ddb-a %.3f in [2.5, 3.2]; ddb-b %.3f in [1.7, 2.3]",
                a.exponent, b.exponent);
  report(4, a_ok && b_ok, buf);
}

// 5. Resampler against the literal double sum
void criterion_resample_oracle() {
  auto rng = oracle::test_rng(501);
  std::uniform_int_distribution<int> in_size(1, 8), out_size(1, 19), chans(1, 3);
  int cases = 0;
  float worst = 0.0f;
  for (int trial = 0; trial < 120; ++trial) {
    const int h = in_size(rng), w = in_size(rng);
    Tensor x = oracle::random_tensor(rng, 1, chans(rng), h, w, -1.0f, 1.0f);
    const int oh = std::max(h, out_size(rng)), ow = std::max(w, out_size(rng));
    Tensor got = bilinear_resample(x, oh, ow);
    Tensor want = oracle::brute_force_resample(x, oh, ow);
    worst = std::max(worst, oracle::max_abs_diff(got, want));
    ++cases;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "upsample path vs brute-force double sum: max |diff| %.2e <= 1e-5 over %d cases",
                double(worst), cases);
  report(5, worst <= 1e-5f, buf);
}

// 6. Whole-network batchnorm folding
void criterion_bn_folding() {
  Model m = model_for(21);
  WeightStore ws = rand_init(m.graph, 601);

  // rand_init's batchnorm records are the identity transform; randomize them
  // (and the predictor biases) so folding actually moves values around
  std::mt19937 rng(602);
  std::uniform_real_distribution<float> scale_d(0.5f, 1.5f), shift_d(-0.5f, 0.5f),
      bias_d(-0.1f, 0.1f);
  for (const WeightRecord& r : ws.records()) {
    WeightRecord& mut = ws.record_mut(r.name);
    if (r.name.ends_with(".bn.scale"))
      for (float& v : mut.values) v = scale_d(rng);
    else if (r.name.ends_with(".bn.shift"))
      for (float& v : mut.values) v = shift_d(rng);
    else if (r.name.ends_with(".b"))
      for (float& v : mut.values) v = bias_d(rng);
  }

  auto rng2 = oracle::test_rng(603);
  Tensor img = oracle::random_tensor(rng2, 1, 3, 300, 300, -120.0f, 130.0f);
  std::vector<int> wanted(m.head.loc.begin(), m.head.loc.end());
  wanted.insert(wanted.end(), m.head.conf.begin(), m.head.conf.end());
  const Tensor in[] = {img};

  RunOptions folded_opt;
  folded_opt.fold_bn = true;
  RunOptions unfolded_opt;
  unfolded_opt.fold_bn = false;
  std::vector<Tensor> folded = run_graph(m.graph, in, ws, wanted, folded_opt);
  std::vector<Tensor> unfolded = run_graph(m.graph, in, ws, wanted, unfolded_opt);

  float worst = 0.0f;
  for (size_t i = 0; i < folded.size(); ++i)
    worst = std::max(worst, oracle::max_rel_diff(unfolded[i], folded[i]));
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "folded vs unfolded forward on the full default network: max rel dev %.2e <= 1e-4",
                double(worst));
  report(6, worst <= 1e-4f, buf);
}

// 7. Prior count and NMS reference equivalence
void criterion_priors_and_nms() {
  Model m = model_for(21);
  const size_t priors = model_priors(m).size();
  const bool priors_ok = priors == 8732;

  auto rng = oracle::test_rng(701);
  std::uniform_real_distribution<float> coord(0.0f, 0.8f), ext(0.02f, 0.5f), score(0.0f, 1.0f),
      thr_d(0.2f, 0.7f);
  std::uniform_int_distribution<int> count(1, 40);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = count(rng);
    std::vector<std::array<float, 4>> boxes;
    std::vector<float> scores;
    for (int i = 0; i < n; ++i) {
      const float x0 = coord(rng), y0 = coord(rng);
      boxes.push_back({x0, y0, std::min(1.0f, x0 + ext(rng)), std::min(1.0f, y0 + ext(rng))});
      scores.push_back(score(rng));
    }
    const float thr = thr_d(rng);
    if (nms(boxes, scores, thr) != oracle::reference_nms(boxes, scores, thr)) ++mismatches;
  }
  report(7, priors_ok && mismatches == 0,
         "default prior count " + std::to_string(priors) + " == 8732; NMS matched the O(n^2) " +
             "reference on " + std::to_string(1000 - mismatches) + "/1000 randomized cases");
}

// 8. End-to-end CLI determinism
void criterion_cli_end_to_end(const std::string& cli) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "tdsod_acceptance";
  fs::create_directories(dir);
  const std::string cfg = (dir / "default.ini").string();
  const std::string weights = (dir / "weights.tdsd").string();
  const std::string image = (dir / "scene.ppm").string();
  const std::string det1 = (dir / "det1.txt").string();
  const std::string det2 = (dir / "det2.txt").string();

  {
    std::ofstream out(cfg);  // empty config = default model
  }
  {
    std::ofstream out(image, std::ios::binary);
    const int w = 500, h = 400;
    out << "P6\n" << w << " " << h << "\n255\n";
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        out.put(char((x * 255) / w));
        out.put(char((y * 255) / h));
        out.put(char(((x + y) * 255) / (w + h)));
      }
  }

  auto run = [](const std::string& cmd) { return std::system(cmd.c_str()); };
  const std::string quiet = " 2>/dev/null";
  bool ok = true;
  std::string what;
  if (run("'" + cli + "' rand-init --config '" + cfg + "' --seed 7 --out '" + weights + "'" +
          quiet) != 0) {
    ok = false;
    what = "rand-init failed";
  } else if (run("'" + cli + "' infer --config '" + cfg + "' --weights '" + weights +
                 "' --image '" + image + "' --out '" + det1 + "'" + quiet) != 0 ||
             run("'" + cli + "' infer --config '" + cfg + "' --weights '" + weights +
                 "' --image '" + image + "' --out '" + det2 + "'" + quiet) != 0) {
    ok = false;
    what = "infer exited nonzero";
  } else if (run("'" + cli + "' infer --config '" + cfg + "' --weights '" + weights +
                 "' --image '" + image + "' --conf-thresh 1.0 --out '" +
                 (dir / "none.txt").string() + "'" + quiet) != 0 ||
             fs::file_size(dir / "none.txt") != 0) {
    ok = false;
    what = "threshold 1.0 should give an empty file and exit 0";
  } else {
    std::ifstream a(det1, std::ios::binary), b(det2, std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    if (sa.str() != sb.str()) {
      ok = false;
      what = "two infer runs differ byte-for-byte";
    } else {
      int lines = 0;
      std::istringstream in(sa.str());
      std::string line;
      while (std::getline(in, line)) {
        ++lines;
        int cat = 0;
        float score = 0, x0 = 0, y0 = 0, x1 = 0, y1 = 0;
        if (std::sscanf(line.c_str(), "%d %f %f %f %f %f", &cat, &score, &x0, &y0, &x1, &y1) !=
                6 ||
            cat < 1 || cat > 20 || score <= 0.0f || score > 1.0f || x0 < 0 || y0 < 0 ||
            x1 > 1.0f || y1 > 1.0f || x0 >= x1 || y0 >= y1) {
          ok = false;
          what = "invalid detection line: " + line;
          break;
        }
      }
      if (ok) what = "bitwise-identical runs, " + std::to_string(lines) + " valid detections";
    }
  }
  report(8, ok, "CLI rand-init + infer end to end: " + what);
  fs::remove_all(dir);
}

// 9. Store value count vs formula params, exact, per dataset config
void criterion_value_count_identity() {
  bool ok = true;
  std::string what;
  struct Case {
    const char* name;
    int categories, h, w;
  };
  const Case cases[] = {{"21-category", 21, 300, 300},
                        {"81-category", 81, 300, 300},
                        {"4-category wide", 4, 300, 1200}};
  for (const Case& c : cases) {
    Model m = model_for(c.categories, c.h, c.w);
    const uint64_t formula = count_params(m.graph);
    const uint64_t stored = rand_init(m.graph, 901).total_value_count();
    if (!what.empty()) what += "; ";
    what += std::string(c.name) + " " + std::to_string(stored);
    ok = ok && formula == stored;
    if (formula != stored) what += " != " + std::to_string(formula);
  }
  report(9, ok, "rand-init store value counts equal count_params exactly (" + what + ")");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-tinydsod-cli>\n");
    return 2;
  }
  criterion_table_conformance();
  criterion_voc_budget();
  criterion_category_scaling();
  criterion_complexity();
  criterion_resample_oracle();
  criterion_bn_folding();
  criterion_priors_and_nms();
  criterion_cli_end_to_end(argv[1]);
  criterion_value_count_identity();
  if (g_failures == 0) {
    std::printf("all 9 criteria passed\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", g_failures);
  return 1;
}

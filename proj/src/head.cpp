#include "head.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "weights.hpp"

namespace td {

namespace {

float level_scale(int k, int levels) {
  if (k > levels)  // one past the last level, pairs with its sqrt box
    return HeadConfig::kScaleBeyondLast;
  return HeadConfig::kScaleMin +
         (HeadConfig::kScaleMax - HeadConfig::kScaleMin) * float(k - 1) / float(levels - 1);
}

void append_cell_priors(std::vector<PriorBox>& out, float cx, float cy, float sk, float sk_next,
                        int boxes) {
  auto push = [&](float bw, float bh) {
    out.push_back({cx, cy, std::min(bw, 1.0f), std::min(bh, 1.0f)});
  };
  push(sk, sk);
  const float se = std::sqrt(sk * sk_next);
  push(se, se);
  push(sk * std::sqrt(2.0f), sk / std::sqrt(2.0f));
  push(sk / std::sqrt(2.0f), sk * std::sqrt(2.0f));
  if (boxes == 6) {
    push(sk * std::sqrt(3.0f), sk / std::sqrt(3.0f));
    push(sk / std::sqrt(3.0f), sk * std::sqrt(3.0f));
  }
}

}  // namespace

std::vector<PriorBox> gen_priors(const HeadConfig& cfg, std::span<const LevelSize> sizes) {
  if (sizes.size() != HeadConfig::kBoxesPerLevel.size())
    fail(Errc::invalid_argument, "gen_priors: expected " +
                                     std::to_string(HeadConfig::kBoxesPerLevel.size()) +
                                     " level sizes");
  const int levels = int(sizes.size());
  std::vector<PriorBox> out;
  out.reserve(size_t(prior_count(cfg, sizes)));
  for (int k = 1; k <= levels; ++k) {
    const LevelSize& fs = sizes[size_t(k - 1)];
    const int boxes = HeadConfig::kBoxesPerLevel[size_t(k - 1)];
    const float sk = level_scale(k, levels);
    const float sk_next = level_scale(k + 1, levels);
    for (int i = 0; i < fs.h; ++i) {
      const float cy = (float(i) + 0.5f) / float(fs.h);
      for (int j = 0; j < fs.w; ++j) {
        const float cx = (float(j) + 0.5f) / float(fs.w);
        append_cell_priors(out, cx, cy, sk, sk_next, boxes);
      }
    }
  }
  return out;
}

uint64_t prior_count(const HeadConfig&, std::span<const LevelSize> sizes) {
  uint64_t total = 0;
  for (size_t k = 0; k < sizes.size(); ++k)
    total += uint64_t(sizes[k].h) * uint64_t(sizes[k].w) *
             uint64_t(HeadConfig::kBoxesPerLevel[k]);
  return total;
}

HeadNodeIds emit_head(Graph& g, const std::array<int, 6>& pyramid, const HeadConfig& cfg) {
  if (cfg.categories < 2) fail(Errc::config, "field 'head.categories': must be >= 2");
  HeadNodeIds ids;
  for (int k = 0; k < 6; ++k) {
    const std::string lvl = std::to_string(k + 1);
    const int c = g.out_channels(pyramid[size_t(k)]);
    const int boxes = HeadConfig::kBoxesPerLevel[size_t(k)];
    int norm = g.add_l2norm("head.l2norm" + lvl, pyramid[size_t(k)]);
    int ldw = g.add_conv("head.loc" + lvl + ".dw", norm, depthwise_spec(c), true, true);
    ids.loc[size_t(k)] =
        g.add_conv("head.loc" + lvl + ".pw", ldw, pointwise_spec(c, boxes * 4, true), false, false);
    int cdw = g.add_conv("head.conf" + lvl + ".dw", norm, depthwise_spec(c), true, true);
    ids.conf[size_t(k)] = g.add_conv("head.conf" + lvl + ".pw", cdw,
                                     pointwise_spec(c, boxes * cfg.categories, true), false,
                                     false);
  }
  return ids;
}

HeadOutput flatten_head(std::span<const Tensor> loc_maps, std::span<const Tensor> conf_maps,
                        const HeadConfig& cfg) {
  if (loc_maps.size() != 6 || conf_maps.size() != 6)
    fail(Errc::invalid_argument, "flatten_head: expected six levels");
  HeadOutput out;
  out.batch = loc_maps[0].n();
  out.categories = cfg.categories;
  uint64_t priors = 0;
  for (size_t k = 0; k < 6; ++k)
    priors += uint64_t(loc_maps[k].h()) * loc_maps[k].w() *
              uint64_t(HeadConfig::kBoxesPerLevel[k]);
  out.priors = int(priors);
  out.loc.assign(size_t(out.batch) * priors * 4, 0.0f);
  out.conf.assign(size_t(out.batch) * priors * size_t(cfg.categories), 0.0f);

  // prior p = level offset + (i*w + j)*boxes + a; channel layout is
  // box-major: loc channel a*4+d, conf channel a*C+cls.
  for (int n = 0; n < out.batch; ++n) {
    uint64_t p0 = 0;
    for (size_t k = 0; k < 6; ++k) {
      const Tensor& lt = loc_maps[k];
      const Tensor& ct = conf_maps[k];
      const int boxes = HeadConfig::kBoxesPerLevel[k];
      const int H = lt.h(), W = lt.w();
      if (ct.h() != H || ct.w() != W)
        fail(Errc::shape_mismatch, "flatten_head: loc/conf sizes differ on level " +
                                       std::to_string(k + 1));
      if (lt.c() != boxes * 4 || ct.c() != boxes * cfg.categories)
        fail(Errc::shape_mismatch, "flatten_head: predictor channels wrong on level " +
                                       std::to_string(k + 1));
      for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
          for (int a = 0; a < boxes; ++a) {
            const uint64_t p = p0 + (uint64_t(i) * W + uint64_t(j)) * uint64_t(boxes) +
                               uint64_t(a);
            float* lp = &out.loc[(uint64_t(n) * uint64_t(out.priors) + p) * 4];
            for (int d = 0; d < 4; ++d) lp[d] = lt.at(n, a * 4 + d, i, j);
            float* cp =
                &out.conf[(uint64_t(n) * uint64_t(out.priors) + p) * uint64_t(cfg.categories)];
            for (int cls = 0; cls < cfg.categories; ++cls)
              cp[cls] = ct.at(n, a * cfg.categories + cls, i, j);
          }
      p0 += uint64_t(H) * W * uint64_t(boxes);
    }
  }
  return out;
}

HeadOutput head_forward(std::span<const Tensor> pyramid, const WeightStore& weights,
                        const HeadConfig& cfg, const RunOptions& opt) {
  if (pyramid.size() != 6) fail(Errc::invalid_argument, "head_forward: expected six levels");
  Graph g;
  std::array<int, 6> inputs{};
  for (int k = 0; k < 6; ++k)
    inputs[size_t(k)] = g.add_input("p" + std::to_string(k + 1), pyramid[size_t(k)].c());
  HeadNodeIds ids = emit_head(g, inputs, cfg);
  std::vector<int> wanted(ids.loc.begin(), ids.loc.end());
  wanted.insert(wanted.end(), ids.conf.begin(), ids.conf.end());
  std::vector<Tensor> maps = run_graph(g, pyramid, weights, wanted, opt);
  return flatten_head(std::span<const Tensor>(maps.data(), 6),
                      std::span<const Tensor>(maps.data() + 6, 6), cfg);
}

void softmax_categories(HeadOutput& out) {
  const int C = out.categories;
  for (uint64_t row = 0; row < uint64_t(out.batch) * uint64_t(out.priors); ++row) {
    float* p = &out.conf[row * uint64_t(C)];
    float mx = p[0];
    for (int c = 1; c < C; ++c) mx = std::max(mx, p[c]);
    float sum = 0.0f;
    for (int c = 0; c < C; ++c) {
      p[c] = std::exp(p[c] - mx);
      sum += p[c];
    }
    for (int c = 0; c < C; ++c) p[c] /= sum;
  }
}

std::array<float, 4> decode_box(const PriorBox& prior, const float loc[4],
                                const std::array<float, 4>& variances) {
  const float cx = prior.cx + loc[0] * variances[0] * prior.w;
  const float cy = prior.cy + loc[1] * variances[1] * prior.h;
  const float bw = prior.w * std::exp(loc[2] * variances[2]);
  const float bh = prior.h * std::exp(loc[3] * variances[3]);
  auto clip = [](float v) { return std::clamp(v, 0.0f, 1.0f); };
  return {clip(cx - bw * 0.5f), clip(cy - bh * 0.5f), clip(cx + bw * 0.5f), clip(cy + bh * 0.5f)};
}

float box_iou(const std::array<float, 4>& a, const std::array<float, 4>& b) {
  const float ix = std::max(0.0f, std::min(a[2], b[2]) - std::max(a[0], b[0]));
  const float iy = std::max(0.0f, std::min(a[3], b[3]) - std::max(a[1], b[1]));
  const float inter = ix * iy;
  const float area_a = (a[2] - a[0]) * (a[3] - a[1]);
  const float area_b = (b[2] - b[0]) * (b[3] - b[1]);
  const float uni = area_a + area_b - inter;
  return uni > 0.0f ? inter / uni : 0.0f;
}

std::vector<int> nms(std::span<const std::array<float, 4>> boxes, std::span<const float> scores,
                     float iou_threshold) {
  if (boxes.size() != scores.size())
    fail(Errc::invalid_argument, "nms: boxes and scores must have equal length");
  std::vector<int> order(boxes.size());
  for (size_t i = 0; i < order.size(); ++i) order[size_t(i)] = int(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[size_t(a)] != scores[size_t(b)]) return scores[size_t(a)] > scores[size_t(b)];
    return a < b;
  });
  std::vector<int> kept;
  std::vector<char> suppressed(boxes.size(), 0);
  for (size_t oi = 0; oi < order.size(); ++oi) {
    const int i = order[oi];
    if (suppressed[size_t(i)]) continue;
    kept.push_back(i);
    for (size_t oj = oi + 1; oj < order.size(); ++oj) {
      const int j = order[oj];
      if (!suppressed[size_t(j)] && box_iou(boxes[size_t(i)], boxes[size_t(j)]) > iou_threshold)
        suppressed[size_t(j)] = 1;
    }
  }
  return kept;
}

std::vector<Detection> select_detections(const HeadOutput& out, std::span<const PriorBox> priors,
                                         const HeadConfig& cfg, float conf_thresh) {
  if (out.batch != 1) fail(Errc::invalid_argument, "select_detections: batch must be 1");
  if (int(priors.size()) != out.priors)
    fail(Errc::shape_mismatch, "select_detections: " + std::to_string(priors.size()) +
                                   " priors for " + std::to_string(out.priors) + " predictions");

  // decode every prior once, reuse across categories
  std::vector<std::array<float, 4>> decoded(priors.size());
  for (size_t p = 0; p < priors.size(); ++p)
    decoded[p] = decode_box(priors[p], &out.loc[p * 4], HeadConfig::kVariances);

  std::vector<Detection> all;
  std::vector<int> cand;
  std::vector<std::array<float, 4>> cand_boxes;
  std::vector<float> cand_scores;
  for (int cls = 1; cls < out.categories; ++cls) {
    cand.clear();
    for (int p = 0; p < out.priors; ++p) {
      const float s = out.conf[uint64_t(p) * uint64_t(out.categories) + uint64_t(cls)];
      if (s <= conf_thresh) continue;
      const auto& b = decoded[size_t(p)];
      if (b[2] <= b[0] || b[3] <= b[1]) continue;  // degenerate after clipping
      cand.push_back(p);
    }
    std::sort(cand.begin(), cand.end(), [&](int a, int b) {
      const float sa = out.conf[uint64_t(a) * uint64_t(out.categories) + uint64_t(cls)];
      const float sb = out.conf[uint64_t(b) * uint64_t(out.categories) + uint64_t(cls)];
      if (sa != sb) return sa > sb;
      return a < b;
    });
    if (int(cand.size()) > HeadConfig::kPreNmsTopK) cand.resize(size_t(HeadConfig::kPreNmsTopK));

    cand_boxes.clear();
    cand_scores.clear();
    for (int p : cand) {
      cand_boxes.push_back(decoded[size_t(p)]);
      cand_scores.push_back(out.conf[uint64_t(p) * uint64_t(out.categories) + uint64_t(cls)]);
    }
    for (int idx : nms(cand_boxes, cand_scores, cfg.nms_iou)) {
      const auto& b = cand_boxes[size_t(idx)];
      all.push_back({cls, cand_scores[size_t(idx)], b[0], b[1], b[2], b[3]});
    }
  }

  std::stable_sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.category < b.category;
  });
  if (int(all.size()) > cfg.topk) all.resize(size_t(cfg.topk));
  return all;
}

std::string detections_to_text(std::span<const Detection> dets) {
  std::string out;
  char line[160];
  for (const Detection& d : dets) {
    std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f %.6f\n", d.category, d.score,
                  d.xmin, d.ymin, d.xmax, d.ymax);
    out += line;
  }
  return out;
}

}  // namespace td

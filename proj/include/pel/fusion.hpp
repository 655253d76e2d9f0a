#pragma once

// Pool-and-suppress baseline: greedy hard NMS over every model's detections.

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "pel/scoring.hpp"

namespace pel {

struct ScoredDetection {
  Polygon polygon;
  double confidence = 0.0;
  int source_model = 0;

  friend bool operator==(const ScoredDetection&, const ScoredDetection&) = default;
};

/// Greedy NMS. Candidates are visited by confidence (descending), then
/// source model, then input order; a candidate survives when its IoU with
/// every survivor is at most `iou_threshold`. Thresholds 0 and 1 are accepted
/// as the limiting cases.
inline std::vector<ScoredDetection> nms(std::span<const ScoredDetection> dets, double iou_threshold = 0.5) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) throw InputError("nms threshold must lie in [0, 1]");
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].confidence != dets[b].confidence) return dets[a].confidence > dets[b].confidence;
    return dets[a].source_model < dets[b].source_model;
  });
  std::vector<ScoredDetection> kept;
  for (std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const ScoredDetection& k) {
      return iou(k.polygon, dets[i].polygon) > iou_threshold;
    });
    if (!suppressed) kept.push_back(dets[i]);
  }
  return kept;
}

inline std::vector<ScoredDetection> pool(std::span<const RegionMap> model_outputs, const std::string& image_id) {
  std::vector<ScoredDetection> all;
  for (std::size_t m = 0; m < model_outputs.size(); ++m) {
    const auto it = model_outputs[m].find(image_id);
    if (it == model_outputs[m].end()) continue;
    for (const Region& r : it->second) all.push_back({r.polygon, r.confidence, static_cast<int>(m)});
  }
  return all;
}

/// Per image: pool all models, suppress, score against ground truth.
inline ModelScore fuse_and_score(std::span<const RegionMap> model_outputs, const RegionMap& gt,
                                 double iou_threshold = 0.5, const MatchConfig& cfg = {}) {
  RegionMap fused;
  for (const RegionMap& m : model_outputs) require_known_ids(m, gt);
  for (const auto& [id, _] : gt) {
    std::vector<Region>& out = fused[id];
    for (const ScoredDetection& d : nms(pool(model_outputs, id), iou_threshold)) {
      out.push_back({d.polygon, d.confidence, false});
    }
  }
  return score_model(fused, gt, cfg);
}

}  // namespace pel

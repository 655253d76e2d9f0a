#pragma once

// Detection-to-ground-truth matching and precision / recall / F-score.

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "pel/error.hpp"
#include "pel/geometry.hpp"
#include "pel/scene.hpp"

namespace pel {

struct EvalCounts {
  long n_match = 0;
  long n_det = 0;
  long n_gt = 0;

  EvalCounts& operator+=(const EvalCounts& o) {
    n_match += o.n_match;
    n_det += o.n_det;
    n_gt += o.n_gt;
    return *this;
  }
  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;

  friend bool operator==(const PrfScore&, const PrfScore&) = default;
};

enum class MatchMode {
  kOneToOne,      // greedy by descending IoU, each detection and GT used once
  kPaperLiteral,  // a detection matches if any GT exceeds tau; GTs may be reused
};

struct MatchConfig {
  double tau = 0.5;
  MatchMode mode = MatchMode::kOneToOne;
};

inline const char* to_string(MatchMode m) {
  return m == MatchMode::kOneToOne ? "one_to_one" : "paper_literal";
}

inline MatchMode parse_match_mode(const std::string& s) {
  if (s == "one_to_one") return MatchMode::kOneToOne;
  if (s == "paper_literal") return MatchMode::kPaperLiteral;
  throw InputError("unknown match mode '" + s + "' (expected one_to_one or paper_literal)");
}

inline void check(const MatchConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw InputError("tau must lie in (0, 1)");
}

inline EvalCounts match_detections(std::span<const Polygon> dets, std::span<const Polygon> gts,
                                   const MatchConfig& cfg = {}) {
  check(cfg);
  EvalCounts counts{0, static_cast<long>(dets.size()), static_cast<long>(gts.size())};
  if (dets.empty() || gts.empty()) return counts;

  if (cfg.mode == MatchMode::kPaperLiteral) {
    for (const Polygon& d : dets) {
      const bool hit = std::any_of(gts.begin(), gts.end(),
                                   [&](const Polygon& g) { return iou(d, g) > cfg.tau; });
      if (hit) ++counts.n_match;
    }
    return counts;
  }

  struct Pair {
    double iou;
    std::size_t det;
    std::size_t gt;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double v = iou(dets[i], gts[j]);
      if (v > cfg.tau) pairs.push_back({v, i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.iou, a.det, a.gt) < std::tie(a.iou, b.det, b.gt);
  });
  std::vector<bool> det_used(dets.size(), false);
  std::vector<bool> gt_used(gts.size(), false);
  for (const Pair& p : pairs) {
    if (det_used[p.det] || gt_used[p.gt]) continue;
    det_used[p.det] = gt_used[p.gt] = true;
    ++counts.n_match;
  }
  return counts;
}

/// Region-level matching. Don't-care ground truth is removed from N_gt and
/// from matching; detections that hit a don't-care region (IoU > tau) are
/// ignored rather than counted as false positives.
inline EvalCounts match_regions(std::span<const Region> dets, std::span<const Region> gts,
                                const MatchConfig& cfg = {}) {
  std::vector<Polygon> care;
  std::vector<Polygon> ignored;
  for (const Region& g : gts) (g.dont_care ? ignored : care).push_back(g.polygon);
  std::vector<Polygon> kept;
  kept.reserve(dets.size());
  for (const Region& d : dets) {
    const bool on_ignored = std::any_of(ignored.begin(), ignored.end(),
                                        [&](const Polygon& g) { return iou(d.polygon, g) > cfg.tau; });
    if (!on_ignored) kept.push_back(d.polygon);
  }
  return match_detections(kept, care, cfg);
}

inline PrfScore prf(double precision, double recall) {
  const double sum = precision + recall;
  return {precision, recall, sum > 0.0 ? 2.0 * precision * recall / sum : 0.0};
}

inline PrfScore prf(const EvalCounts& c) {
  const double p = c.n_det > 0 ? static_cast<double>(c.n_match) / static_cast<double>(c.n_det) : 0.0;
  const double r = c.n_gt > 0 ? static_cast<double>(c.n_match) / static_cast<double>(c.n_gt) : 0.0;
  return prf(p, r);
}

/// Dataset score from summed counts (micro average).
inline PrfScore micro_aggregate(std::span<const EvalCounts> per_image) {
  EvalCounts total;
  for (const EvalCounts& c : per_image) total += c;
  return prf(total);
}

struct ModelScore {
  std::map<std::string, EvalCounts> counts;
  std::map<std::string, PrfScore> per_image;
  PrfScore dataset;
};

inline std::vector<Region> regions_or_empty(const RegionMap& m, const std::string& id) {
  const auto it = m.find(id);
  return it == m.end() ? std::vector<Region>{} : it->second;
}

inline void require_known_ids(const RegionMap& outputs, const RegionMap& gt) {
  for (const auto& [id, _] : outputs) {
    if (!gt.contains(id)) throw InputError("image_id '" + id + "' has detections but no ground truth");
  }
}

/// Scores one model over every ground-truth image. Images absent from
/// `model_outputs` count as zero detections.
inline ModelScore score_model(const RegionMap& model_outputs, const RegionMap& gt,
                              const MatchConfig& cfg = {}) {
  check(cfg);
  require_known_ids(model_outputs, gt);
  ModelScore out;
  std::vector<EvalCounts> all;
  all.reserve(gt.size());
  for (const auto& [id, truth] : gt) {
    const auto it = model_outputs.find(id);
    const EvalCounts c = it == model_outputs.end()
                             ? match_regions({}, truth, cfg)
                             : match_regions(it->second, truth, cfg);
    out.counts[id] = c;
    out.per_image[id] = prf(c);
    all.push_back(c);
  }
  out.dataset = micro_aggregate(all);
  return out;
}

}  // namespace pel

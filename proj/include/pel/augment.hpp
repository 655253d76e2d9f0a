#pragma once

// Scene-space training augmentation: rotation, non-truncating crop and random
// don't-care masking. Labels of an augmented sample are recomputed from the
// base models' outputs transformed the same way.

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pel/features.hpp"
#include "pel/labeling.hpp"
#include "pel/scene.hpp"
#include "pel/selector.hpp"

namespace pel {

struct AugmentConfig {
  double max_rotation_deg = 15.0;
  double crop_area_min = 0.1;
  double crop_area_max = 1.0;
  double crop_aspect_min = 0.5;
  double crop_aspect_max = 2.0;
  int max_crop_attempts = 50;
};

/// The drawn transform. The crop window is expressed in the rotated frame.
struct AugmentParams {
  double angle_deg = 0.0;
  std::optional<Aabb> crop;
  std::vector<bool> mask;  // per input region; resized on apply if shorter
};

struct AugmentResult {
  SceneSample sample;
  AugmentParams params;
};

namespace detail {

struct RotatedFrame {
  double radians = 0.0;
  Point center;
  Point offset;  // subtracted after rotation so the rotated canvas starts at the origin
  double width = 0.0;
  double height = 0.0;
};

inline RotatedFrame rotated_frame(const SceneSample& s, double angle_deg) {
  RotatedFrame f;
  f.radians = angle_deg * std::numbers::pi / 180.0;
  f.center = {0.5 * s.width, 0.5 * s.height};
  if (angle_deg == 0.0) {
    f.width = s.width;
    f.height = s.height;
    return f;
  }
  const Point corners[] = {{0.0, 0.0}, {s.width, 0.0}, {s.width, s.height}, {0.0, s.height}};
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (Point c : corners) {
    const Point r = rotate(c, f.radians, f.center);
    x0 = std::min(x0, r.x);
    y0 = std::min(y0, r.y);
    x1 = std::max(x1, r.x);
    y1 = std::max(y1, r.y);
  }
  f.offset = {x0, y0};
  f.width = x1 - x0;
  f.height = y1 - y0;
  return f;
}

inline Polygon to_frame(const Polygon& p, const RotatedFrame& f) {
  if (f.radians == 0.0) return p;
  std::vector<Point> out;
  out.reserve(p.size());
  for (const Point& v : p.vertices()) out.push_back(rotate(v, f.radians, f.center) - f.offset);
  return Polygon(std::move(out));
}

enum class Placement { kInside, kOutside, kTruncated };

inline Placement place(const Polygon& p, const Aabb& window) {
  const Aabb b = p.bounds();
  if (b.x_min >= window.x_min && b.x_max <= window.x_max && b.y_min >= window.y_min && b.y_max <= window.y_max) {
    return Placement::kInside;
  }
  if (!intersect(p, Polygon::from_aabb(window))) return Placement::kOutside;
  return Placement::kTruncated;
}

}  // namespace detail

/// Deterministic application of a drawn transform to the ground truth.
inline SceneSample apply_augment(const SceneSample& s, const AugmentParams& params) {
  const detail::RotatedFrame frame = detail::rotated_frame(s, params.angle_deg);
  SceneSample out;
  out.image_id = s.image_id;
  out.width = frame.width;
  out.height = frame.height;
  Point shift{0.0, 0.0};
  if (params.crop) {
    out.width = params.crop->width();
    out.height = params.crop->height();
    shift = {-params.crop->x_min, -params.crop->y_min};
  }
  for (std::size_t i = 0; i < s.regions.size(); ++i) {
    Region r = s.regions[i];
    r.polygon = detail::to_frame(r.polygon, frame);
    if (params.crop) {
      const detail::Placement where = detail::place(r.polygon, *params.crop);
      if (where == detail::Placement::kOutside) continue;
      if (where == detail::Placement::kTruncated) throw InputError("crop window truncates a region");
      if (shift.x != 0.0 || shift.y != 0.0) r.polygon = translate(r.polygon, shift);
    }
    if (i < params.mask.size() && params.mask[i]) r.dont_care = true;
    out.regions.push_back(std::move(r));
  }
  return out;
}

/// Same transform applied to detector output: rotated, then clipped to the
/// crop window (detections are not protected from truncation).
inline std::vector<Region> apply_augment_to_detections(const SceneSample& s, std::span<const Region> dets,
                                                       const AugmentParams& params) {
  const detail::RotatedFrame frame = detail::rotated_frame(s, params.angle_deg);
  std::vector<Region> out;
  out.reserve(dets.size());
  for (const Region& d : dets) {
    Region r = d;
    r.polygon = detail::to_frame(d.polygon, frame);
    if (params.crop) {
      const auto clipped = intersect(r.polygon, Polygon::from_aabb(*params.crop));
      if (!clipped) continue;
      r.polygon = translate(*clipped, {-params.crop->x_min, -params.crop->y_min});
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Draws rotation, crop and mask, then applies them. When no crop window
/// without truncation is found within the attempt budget, only the rotation
/// (and masking) is applied.
inline AugmentResult augment(const SceneSample& s, std::mt19937_64& rng, double p_mask,
                             const AugmentConfig& cfg = {}) {
  AugmentResult res;
  std::uniform_real_distribution<double> angle(-cfg.max_rotation_deg, cfg.max_rotation_deg);
  res.params.angle_deg = angle(rng);

  const detail::RotatedFrame frame = detail::rotated_frame(s, res.params.angle_deg);
  std::vector<Polygon> rotated;
  rotated.reserve(s.regions.size());
  for (const Region& r : s.regions) rotated.push_back(detail::to_frame(r.polygon, frame));

  std::uniform_real_distribution<double> area_ratio(cfg.crop_area_min, cfg.crop_area_max);
  std::uniform_real_distribution<double> log_aspect(std::log(cfg.crop_aspect_min), std::log(cfg.crop_aspect_max));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double canvas = frame.width * frame.height;
  for (int attempt = 0; attempt < cfg.max_crop_attempts; ++attempt) {
    const double r = area_ratio(rng);
    const double a = std::exp(log_aspect(rng));
    const double w = std::sqrt(r * canvas * a);
    const double h = std::sqrt(r * canvas / a);
    const double ux = unit(rng);
    const double uy = unit(rng);
    if (w > frame.width || h > frame.height) continue;
    const double x0 = ux * (frame.width - w);
    const double y0 = uy * (frame.height - h);
    const Aabb win{x0, y0, x0 + w, y0 + h};
    bool ok = true;
    std::size_t inside = 0;
    for (const Polygon& p : rotated) {
      const detail::Placement where = detail::place(p, win);
      if (where == detail::Placement::kTruncated) {
        ok = false;
        break;
      }
      if (where == detail::Placement::kInside) ++inside;
    }
    if (ok && (inside > 0 || rotated.empty())) {
      res.params.crop = win;
      break;
    }
  }

  std::bernoulli_distribution masked(std::clamp(p_mask, 0.0, 1.0));
  res.params.mask.resize(s.regions.size());
  for (std::size_t i = 0; i < s.regions.size(); ++i) res.params.mask[i] = masked(rng);
  res.sample = apply_augment(s, res.params);
  return res;
}

/// Builds a training-time Augmenter over scenes and base-model outputs.
/// Record i of `records` must name a scene present in `scenes`.
class SceneAugmenter {
 public:
  SceneAugmenter(std::span<const LabelRecord> records, const std::map<std::string, SceneSample>& scenes,
                 std::span<const RegionMap> model_outputs, const FeatureExtractor& extractor,
                 MatchConfig match = {}, AugmentConfig cfg = {})
      : records_(records), scenes_(scenes), outputs_(model_outputs), extractor_(extractor), match_(match),
        cfg_(cfg) {
    for (const LabelRecord& r : records_) {
      if (!scenes_.contains(r.image_id)) throw InputError("no scene for record '" + r.image_id + "'");
    }
  }

  LabelRecord operator()(std::size_t index, std::mt19937_64& rng, double p_mask) const {
    const SceneSample& scene = scenes_.at(records_[index].image_id);
    const AugmentResult aug = augment(scene, rng, p_mask, cfg_);
    LabelRecord rec;
    rec.image_id = scene.image_id;
    rec.features = extractor_.extract(aug.sample);
    for (const RegionMap& m : outputs_) {
      const auto it = m.find(scene.image_id);
      const std::vector<Region> dets =
          it == m.end() ? std::vector<Region>{} : apply_augment_to_detections(scene, it->second, aug.params);
      rec.f_scores.push_back(prf(match_regions(dets, aug.sample.regions, match_)).f_score);
    }
    rec.labels = make_label(rec.f_scores);
    return rec;
  }

  Augmenter as_augmenter() const {
    return [this](std::size_t i, std::mt19937_64& rng, double p) { return (*this)(i, rng, p); };
  }

 private:
  std::span<const LabelRecord> records_;
  const std::map<std::string, SceneSample>& scenes_;
  std::span<const RegionMap> outputs_;
  const FeatureExtractor& extractor_;
  MatchConfig match_;
  AugmentConfig cfg_;
};

}  // namespace pel

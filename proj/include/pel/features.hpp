#pragma once

// Selector inputs computed from a scene descriptor.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "pel/error.hpp"
#include "pel/scene.hpp"

namespace pel {

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> extract(const SceneSample& sample) const = 0;
};

/// Handcrafted statistics over the non-don't-care regions of a scene.
///
/// Layout (D = 16):
///   0      log(1 + region count) / 3
///   1..4   mean, std, min, max of 1 + log10(area / extent area) / 4
///   5..6   mean, std of aspect ratio / 10
///   7..8   mean, std of orientation (radians)
///   9      summed region area / extent area
///   10..11 width / height, height / width
///   12..15 zero padding
class SceneStatsExtractor final : public FeatureExtractor {
 public:
  static constexpr std::size_t kDim = 16;
  static constexpr const char* kId = "scene_stats_v1";

  std::string id() const override { return kId; }
  std::size_t dimension() const override { return kDim; }

  std::vector<double> extract(const SceneSample& s) const override {
    if (!(s.width > 0.0 && s.height > 0.0)) throw InputError("scene '" + s.image_id + "' has empty extent");
    std::vector<double> f(kDim, 0.0);
    const double extent_area = s.width * s.height;
    std::vector<double> areas, aspects, angles;
    double covered = 0.0;
    for (const Region& r : s.regions) {
      if (r.dont_care) continue;
      const RegionAttributes a = describe(r.polygon);
      areas.push_back(1.0 + std::log10(a.area / extent_area) / 4.0);
      aspects.push_back(a.aspect / 10.0);
      angles.push_back(a.orientation);
      covered += a.area;
    }
    f[0] = std::log1p(static_cast<double>(areas.size())) / 3.0;
    if (!areas.empty()) {
      f[1] = mean(areas);
      f[2] = stddev(areas);
      f[3] = *std::min_element(areas.begin(), areas.end());
      f[4] = *std::max_element(areas.begin(), areas.end());
      f[5] = mean(aspects);
      f[6] = stddev(aspects);
      f[7] = mean(angles);
      f[8] = stddev(angles);
      f[9] = covered / extent_area;
    }
    f[10] = s.width / s.height;
    f[11] = s.height / s.width;
    return f;
  }

 private:
  static double mean(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  }
  static double stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
  }
};

inline std::unique_ptr<FeatureExtractor> make_extractor(const std::string& id) {
  if (id == SceneStatsExtractor::kId) return std::make_unique<SceneStatsExtractor>();
  throw InputError("unknown feature extractor '" + id + "'");
}

}  // namespace pel

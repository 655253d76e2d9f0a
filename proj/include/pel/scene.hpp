#pragma once

// Per-image data shared by every stage: annotated regions, detector outputs
// and the scene descriptor consumed by feature extraction.

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "pel/geometry.hpp"

namespace pel {

/// One ground-truth or detected region. `confidence` is meaningful for
/// detections, `dont_care` for ground truth.
struct Region {
  Polygon polygon;
  double confidence = 1.0;
  bool dont_care = false;

  friend bool operator==(const Region&, const Region&) = default;
};

/// image_id -> regions, ordered by id so iteration is deterministic.
using RegionMap = std::map<std::string, std::vector<Region>>;

enum class AreaClass { kSmall, kMedium, kLarge };
enum class AspectClass { kCompact, kElongated, kLong };

/// Geometric descriptors of one region, derived from its polygon.
struct RegionAttributes {
  double area = 0.0;
  double aspect = 1.0;       // longest edge over implied short side, >= 1 for rectangles
  double orientation = 0.0;  // angle of the longest edge, radians in (-pi/2, pi/2]
  AreaClass area_class = AreaClass::kMedium;
  AspectClass aspect_class = AspectClass::kCompact;

  friend bool operator==(const RegionAttributes&, const RegionAttributes&) = default;
};

inline constexpr double kSmallAreaLimit = 600.0;
inline constexpr double kLargeAreaLimit = 6000.0;
inline constexpr double kElongatedAspect = 2.5;
inline constexpr double kLongAspect = 5.0;

inline RegionAttributes describe(const Polygon& poly) {
  RegionAttributes attr;
  attr.area = area(poly);
  std::size_t longest = 0;
  double longest_len = 0.0;
  const auto v = poly.vertices();
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const double len = norm(v[(i + 1) % n] - v[i]);
    if (len > longest_len + 1e-9) {
      longest_len = len;
      longest = i;
    }
  }
  attr.aspect = longest_len * longest_len / attr.area;
  const Point e = v[(longest + 1) % v.size()] - v[longest];
  double angle = std::atan2(e.y, e.x);
  if (angle > std::numbers::pi / 2) angle -= std::numbers::pi;
  if (angle <= -std::numbers::pi / 2) angle += std::numbers::pi;
  attr.orientation = angle;
  attr.area_class = attr.area < kSmallAreaLimit   ? AreaClass::kSmall
                    : attr.area < kLargeAreaLimit ? AreaClass::kMedium
                                                  : AreaClass::kLarge;
  attr.aspect_class = attr.aspect < kElongatedAspect ? AspectClass::kCompact
                      : attr.aspect < kLongAspect    ? AspectClass::kElongated
                                                     : AspectClass::kLong;
  return attr;
}

inline constexpr double kDefaultExtent = 512.0;

/// One "image": its extent and annotated regions.
struct SceneSample {
  std::string image_id;
  double width = kDefaultExtent;
  double height = kDefaultExtent;
  std::vector<Region> regions;

  Aabb extent() const { return {0.0, 0.0, width, height}; }
  friend bool operator==(const SceneSample&, const SceneSample&) = default;
};

inline std::vector<RegionAttributes> attributes_of(const SceneSample& s) {
  std::vector<RegionAttributes> out;
  out.reserve(s.regions.size());
  for (const Region& r : s.regions) out.push_back(describe(r.polygon));
  return out;
}

}  // namespace pel

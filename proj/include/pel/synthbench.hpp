#pragma once

// Synthetic scenes and simulated detectors with complementary skills.
//
// Scenes come from three regimes (small dense words, long horizontal lines,
// rotated words). Each simulated detector has per-region-kind recall and
// localisation noise, so different detectors win on different scenes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pel/ensemble.hpp"
#include "pel/scene.hpp"

namespace pel {

enum class Regime { kSmallDense = 0, kLongHorizontal = 1, kRotated = 2 };
inline constexpr std::size_t kNumRegimes = 3;

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::kSmallDense: return "small_dense";
    case Regime::kLongHorizontal: return "long_horizontal";
    case Regime::kRotated: return "rotated";
  }
  return "?";
}

inline Regime parse_regime(const std::string& s) {
  for (std::size_t i = 0; i < kNumRegimes; ++i) {
    if (s == to_string(static_cast<Regime>(i))) return static_cast<Regime>(i);
  }
  throw InputError("unknown regime '" + s + "'");
}

/// Region shape distribution for one regime.
struct RegimeShape {
  int count_min = 1;
  int count_max = 1;
  double height_min = 10.0;
  double height_max = 20.0;
  double aspect_min = 1.0;
  double aspect_max = 2.0;
  double angle_min_deg = 0.0;  // |angle| range; sign drawn uniformly
  double angle_max_deg = 0.0;
};

struct GeneratorConfig {
  double width = kDefaultExtent;
  double height = kDefaultExtent;
  std::array<double, kNumRegimes> regime_weights{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<RegimeShape, kNumRegimes> shapes{{
      {5, 9, 9.0, 16.0, 1.0, 2.2, 0.0, 3.0},      // small dense
      {4, 8, 14.0, 26.0, 7.0, 13.0, 0.0, 2.0},    // long horizontal
      {5, 9, 18.0, 30.0, 2.2, 4.0, 25.0, 65.0},   // rotated
  }};
  double margin = 3.0;
  int placement_attempts = 200;
};

struct SyntheticScene {
  SceneSample sample;
  Regime regime = Regime::kSmallDense;
};

/// Which skill of a detector a ground-truth region exercises.
enum class RegionKind { kSmall = 0, kLong = 1, kRotated = 2, kGeneric = 3 };
inline constexpr std::size_t kNumKinds = 4;
inline constexpr double kRotatedAngleDeg = 10.0;

inline RegionKind kind_of(const RegionAttributes& a) {
  if (std::abs(a.orientation) * 180.0 / std::numbers::pi >= kRotatedAngleDeg) return RegionKind::kRotated;
  if (a.aspect_class == AspectClass::kLong) return RegionKind::kLong;
  if (a.area_class == AreaClass::kSmall) return RegionKind::kSmall;
  return RegionKind::kGeneric;
}

namespace detail {

inline std::string scene_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%05zu", i);
  return buf;
}

inline bool clear_of(const Aabb& box, const std::vector<Aabb>& taken, double margin) {
  for (const Aabb& t : taken) {
    if (box.x_min < t.x_max + margin && t.x_min < box.x_max + margin && box.y_min < t.y_max + margin &&
        t.y_min < box.y_max + margin) {
      return false;
    }
  }
  return true;
}

}  // namespace detail

/// Deterministic per seed; region counts may fall short of the drawn count
/// when no free placement is found, but every scene gets at least one region.
inline std::vector<SyntheticScene> generate_scenes(std::size_t n, std::uint64_t seed, const GeneratorConfig& cfg = {}) {
  if (n == 0) throw InputError("generate_scenes: n must be at least 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> regime_dist(cfg.regime_weights.begin(), cfg.regime_weights.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SyntheticScene> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SyntheticScene sc;
    sc.regime = static_cast<Regime>(regime_dist(rng));
    sc.sample.image_id = detail::scene_id(i);
    sc.sample.width = cfg.width;
    sc.sample.height = cfg.height;
    const RegimeShape& shape = cfg.shapes[static_cast<std::size_t>(sc.regime)];
    const int count = std::uniform_int_distribution<int>(shape.count_min, shape.count_max)(rng);
    std::vector<Aabb> taken;
    for (int r = 0; r < count; ++r) {
      const double h = shape.height_min + (shape.height_max - shape.height_min) * unit(rng);
      const double aspect = shape.aspect_min + (shape.aspect_max - shape.aspect_min) * unit(rng);
      const double mag = shape.angle_min_deg + (shape.angle_max_deg - shape.angle_min_deg) * unit(rng);
      const double angle = (unit(rng) < 0.5 ? -mag : mag) * std::numbers::pi / 180.0;
      const double w = h * aspect;
      for (int attempt = 0; attempt < cfg.placement_attempts; ++attempt) {
        const Point c{cfg.width * unit(rng), cfg.height * unit(rng)};
        Polygon poly = oriented_rect(c, w, h, angle);
        const Aabb b = poly.bounds();
        if (b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > cfg.width || b.y_max > cfg.height) continue;
        if (!detail::clear_of(b, taken, cfg.margin)) continue;
        taken.push_back(b);
        sc.sample.regions.push_back({std::move(poly), 1.0, false});
        break;
      }
    }
    if (sc.sample.regions.empty()) {
      // Fall back to a centred region so no scene is empty.
      const double h = shape.height_min;
      sc.sample.regions.push_back(
          {oriented_rect({0.5 * cfg.width, 0.5 * cfg.height}, h * shape.aspect_min, h,
                         shape.angle_min_deg * std::numbers::pi / 180.0),
           1.0, false});
    }
    out.push_back(std::move(sc));
  }
  return out;
}

struct KindSkill {
  double recall = 1.0;      // probability of a well-placed detection for the region
  double jitter = 0.0;      // per-vertex Gaussian sigma, scene units
  double mislocate = 0.0;   // probability of a badly shaped detection when the region is missed
};

struct DetectorProfile {
  std::string name;
  std::array<KindSkill, kNumKinds> skills{};
  double fp_rate = 0.0;  // Poisson mean of false positives per image
  double fp_size_min = 10.0;
  double fp_size_max = 60.0;
  double conf_true_mean = 0.85;
  double conf_true_spread = 0.08;
  double conf_false_mean = 0.45;
  double conf_false_spread = 0.15;
};

inline void validate(const DetectorProfile& p) {
  for (const KindSkill& s : p.skills) {
    if (!(s.recall >= 0.0 && s.recall <= 1.0)) throw InputError("detector recall must lie in [0, 1]");
    if (!(s.jitter >= 0.0)) throw InputError("detector jitter must be non-negative");
    if (!(s.mislocate >= 0.0 && s.mislocate <= 1.0)) throw InputError("mislocation rate must lie in [0, 1]");
  }
  if (!(p.fp_rate >= 0.0)) throw InputError("false-positive rate must be non-negative");
}

namespace detail {

inline double truncated_normal(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, 1.0);
  double z = n(rng);
  while (std::abs(z) > 3.0) z = n(rng);
  return sigma * z;
}

inline Polygon jitter(const Polygon& p, double sigma, std::mt19937_64& rng) {
  if (sigma <= 0.0) return p;
  for (int attempt = 0; attempt < 20; ++attempt) {
    std::vector<Point> v(p.vertices().begin(), p.vertices().end());
    for (Point& q : v) {
      q.x += truncated_normal(rng, sigma);
      q.y += truncated_normal(rng, sigma);
    }
    try {
      return Polygon(std::move(v));
    } catch (const InputError&) {
      // Not convex any more; draw again.
    }
  }
  return p;
}

/// Typical failure shapes: a long line split into word fragments, an
/// axis-aligned box around rotated text, an oversized box around small text.
inline std::vector<Polygon> mislocated(const Polygon& g, RegionKind kind) {
  switch (kind) {
    case RegionKind::kLong: {
      const RegionAttributes a = describe(g);
      const double length = std::sqrt(a.area * a.aspect);
      const double thickness = a.area / length;
      const Point c = centroid(g);
      const Point axis{std::cos(a.orientation), std::sin(a.orientation)};
      std::vector<Polygon> parts;
      for (int i = -1; i <= 1; ++i) {
        const Point center = c + (static_cast<double>(i) * length / 3.0) * axis;
        parts.push_back(oriented_rect(center, 0.8 * length / 3.0, thickness, a.orientation));
      }
      return parts;
    }
    case RegionKind::kRotated:
      return {Polygon::from_aabb(g.bounds())};
    case RegionKind::kSmall:
    case RegionKind::kGeneric: {
      const Point c = centroid(g);
      std::vector<Point> v;
      for (const Point& p : g.vertices()) v.push_back(c + 1.7 * (p - c));
      return {Polygon(std::move(v))};
    }
  }
  return {};
}

inline double confidence(std::mt19937_64& rng, double mean, double spread) {
  std::normal_distribution<double> n(mean, spread);
  return std::clamp(n(rng), 0.0, 1.0);
}

}  // namespace detail

/// Deterministic per seed; scenes are visited in the given order.
inline RegionMap simulate_detector(const DetectorProfile& profile, const std::vector<SyntheticScene>& scenes,
                                   std::uint64_t seed) {
  validate(profile);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::poisson_distribution<int> fp_count(profile.fp_rate > 0.0 ? profile.fp_rate : 1.0);
  RegionMap out;
  for (const SyntheticScene& sc : scenes) {
    std::vector<Region>& dets = out[sc.sample.image_id];
    for (const Region& g : sc.sample.regions) {
      const RegionKind kind = kind_of(describe(g.polygon));
      const KindSkill& skill = profile.skills[static_cast<std::size_t>(kind)];
      if (unit(rng) < skill.recall) {
        Polygon p = detail::jitter(g.polygon, skill.jitter, rng);
        dets.push_back({std::move(p), detail::confidence(rng, profile.conf_true_mean, profile.conf_true_spread), false});
      } else if (unit(rng) < skill.mislocate) {
        for (const Polygon& part : detail::mislocated(g.polygon, kind)) {
          dets.push_back({detail::jitter(part, skill.jitter, rng),
                          detail::confidence(rng, profile.conf_true_mean, profile.conf_true_spread), false});
        }
      }
    }
    const int fps = profile.fp_rate > 0.0 ? fp_count(rng) : 0;
    for (int f = 0; f < fps; ++f) {
      const double w = profile.fp_size_min + (profile.fp_size_max - profile.fp_size_min) * unit(rng);
      const double h = profile.fp_size_min + (profile.fp_size_max - profile.fp_size_min) * unit(rng);
      const double x = (sc.sample.width - w) * unit(rng);
      const double y = (sc.sample.height - h) * unit(rng);
      dets.push_back({Polygon::from_aabb({x, y, x + w, y + h}),
                      detail::confidence(rng, profile.conf_false_mean, profile.conf_false_spread), false});
    }
  }
  return out;
}

/// Three detectors, each strong on one region kind and weaker on the others.
/// Weak-skill recalls differ per kind so the three dataset F-scores land
/// close together on the standard benchmark.
inline std::vector<DetectorProfile> standard_profiles() {
  const std::array<KindSkill, 3> strong{{{0.97, 0.8, 1.0}, {0.97, 0.8, 1.0}, {0.97, 0.8, 1.0}}};
  const std::array<KindSkill, 3> weak{{{0.60, 1.5, 1.0}, {0.75, 1.5, 1.0}, {0.62, 1.5, 1.0}}};
  const KindSkill generic{0.785, 1.0, 1.0};
  const char* names[] = {"small_expert", "line_expert", "rotation_expert"};
  std::vector<DetectorProfile> out(3);
  for (std::size_t k = 0; k < 3; ++k) {
    out[k].name = names[k];
    for (std::size_t kind = 0; kind < 3; ++kind) out[k].skills[kind] = kind == k ? strong[kind] : weak[kind];
    out[k].skills[3] = generic;
    out[k].fp_rate = 0.5;
  }
  return out;
}

struct Benchmark {
  std::uint64_t seed = 0;
  std::vector<SyntheticScene> scenes;  // all scenes, id order
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted
  std::vector<DetectorProfile> profiles;
  std::vector<RegionMap> outputs;  // one per profile, covering every scene
};

inline constexpr std::size_t kStandardTrain = 1000;
inline constexpr std::size_t kStandardTest = 300;
inline constexpr std::uint64_t kStandardSeed = 20190101;

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

inline Benchmark standard_benchmark(std::uint64_t seed = kStandardSeed) {
  Benchmark b;
  b.seed = seed;
  b.scenes = generate_scenes(kStandardTrain + kStandardTest, derive_seed(seed, 0));
  std::vector<std::string> ids;
  for (const SyntheticScene& s : b.scenes) ids.push_back(s.sample.image_id);
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::shuffle(ids.begin(), ids.end(), rng);
  b.train_ids.assign(ids.begin(), ids.begin() + kStandardTrain);
  b.test_ids.assign(ids.begin() + kStandardTrain, ids.end());
  std::sort(b.train_ids.begin(), b.train_ids.end());
  std::sort(b.test_ids.begin(), b.test_ids.end());
  b.profiles = standard_profiles();
  for (std::size_t k = 0; k < b.profiles.size(); ++k) {
    b.outputs.push_back(simulate_detector(b.profiles[k], b.scenes, derive_seed(seed, 10 + k)));
  }
  return b;
}

inline SceneSet scene_set(const std::vector<SyntheticScene>& scenes) {
  SceneSet out;
  for (const SyntheticScene& s : scenes) out[s.sample.image_id] = s.sample;
  return out;
}

template <typename Map>
Map subset(const Map& m, const std::vector<std::string>& ids) {
  Map out;
  for (const std::string& id : ids) {
    const auto it = m.find(id);
    if (it != m.end()) out.insert(*it);
  }
  return out;
}

inline std::vector<RegionMap> subset(const std::vector<RegionMap>& maps, const std::vector<std::string>& ids) {
  std::vector<RegionMap> out;
  for (const RegionMap& m : maps) out.push_back(subset(m, ids));
  return out;
}

}  // namespace pel

#pragma once

// Test-only oracles and generators. Nothing here calls into the code paths
// it is used to check.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pel/geometry.hpp"
#include "pel/features.hpp"
#include "pel/labeling.hpp"
#include "pel/selector.hpp"
#include "pel/synthbench.hpp"

namespace pel::oracle {

/// Convex hull (monotone chain) of random points in a disc; retries until
/// the hull has at least three well-separated vertices.
inline Polygon random_convex(std::mt19937_64& rng, Point center, double radius, int points = 8) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    std::vector<Point> pts;
    for (int i = 0; i < points; ++i) {
      const double r = radius * std::sqrt(unit(rng));
      const double t = 2.0 * std::numbers::pi * unit(rng);
      pts.push_back({center.x + r * std::cos(t), center.y + r * std::sin(t)});
    }
    std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    auto turn = [](Point o, Point a, Point b) { return cross(a - o, b - o); };
    for (std::size_t i = 0; i < pts.size(); ++i) {
      while (k >= 2 && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
      hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
      while (k >= t && turn(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
      hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) continue;
    try {
      Polygon p(hull);
      if (area(p) > 1e-3 * radius * radius) return p;
    } catch (const InputError&) {
    }
  }
}

/// Inside test independent of pel::contains: p lies in a convex ring iff the
/// unsigned areas of the triangles (p, v_i, v_i+1) sum to the ring's area.
inline bool inside_by_area(std::span<const Point> ring, Point p, double ring_area) {
  double sum = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    const Point a = ring[i];
    const Point b = ring[(i + 1) % n];
    sum += std::abs((a.x - p.x) * (b.y - p.y) - (b.x - p.x) * (a.y - p.y)) * 0.5;
  }
  return sum <= ring_area * (1.0 + 1e-12);
}

/// Half-plane inside test for a counter-clockwise convex ring, written out
/// with raw coordinates; exits on the first edge the point lies right of.
inline bool inside_halfplanes(std::span<const Point> ring, Point p) {
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    const Point a = ring[i];
    const Point b = ring[i + 1 == n ? 0 : i + 1];
    if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0.0) return false;
  }
  return true;
}

/// Monte-Carlo IoU estimate from uniform samples over the joint bounding box.
inline double monte_carlo_iou(const Polygon& a, const Polygon& b, std::size_t samples, std::mt19937_64& rng) {
  const Aabb ba = a.bounds();
  const Aabb bb = b.bounds();
  const Aabb box{std::min(ba.x_min, bb.x_min), std::min(ba.y_min, bb.y_min), std::max(ba.x_max, bb.x_max),
                 std::max(ba.y_max, bb.y_max)};
  std::uniform_real_distribution<double> ux(box.x_min, box.x_max);
  std::uniform_real_distribution<double> uy(box.y_min, box.y_max);
  std::size_t in_a = 0, in_b = 0, in_both = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Point p{ux(rng), uy(rng)};
    const bool ia = ba.contains(p) && inside_halfplanes(a.vertices(), p);
    const bool ib = bb.contains(p) && inside_halfplanes(b.vertices(), p);
    in_a += ia;
    in_b += ib;
    in_both += ia && ib;
  }
  const std::size_t uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

/// Raster IoU estimate: an n x n grid of cell centres over the joint bounding
/// box, each classified by the half-plane test.
inline double raster_iou(const Polygon& a, const Polygon& b, std::size_t n) {
  const Aabb ba = a.bounds();
  const Aabb bb = b.bounds();
  const double x0 = std::min(ba.x_min, bb.x_min), y0 = std::min(ba.y_min, bb.y_min);
  const double dx = (std::max(ba.x_max, bb.x_max) - x0) / static_cast<double>(n);
  const double dy = (std::max(ba.y_max, bb.y_max) - y0) / static_cast<double>(n);
  std::size_t in_a = 0, in_b = 0, in_both = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double y = y0 + (static_cast<double>(j) + 0.5) * dy;
    for (std::size_t i = 0; i < n; ++i) {
      const Point p{x0 + (static_cast<double>(i) + 0.5) * dx, y};
      const bool ia = ba.contains(p) && inside_halfplanes(a.vertices(), p);
      const bool ib = bb.contains(p) && inside_halfplanes(b.vertices(), p);
      in_a += ia;
      in_b += ib;
      in_both += ia && ib;
    }
  }
  const std::size_t uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(uni);
}

/// Second forward-pass implementation: column-oriented accumulation and
/// logistic written as 1 / (1 + exp(-z)).
inline std::vector<double> reference_forward(const SelectorNet& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    std::vector<double> z(layer.biases);
    for (std::size_t i = 0; i < layer.in; ++i) {
      for (std::size_t o = 0; o < layer.out; ++o) z[o] += layer.weights[o * layer.in + i] * a[i];
    }
    if (l + 1 < net.layers.size()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    } else {
      for (double& v : z) v = 1.0 / (1.0 + std::exp(-v));
    }
    a = std::move(z);
  }
  return a;
}

inline SelectorNet random_net(const std::vector<std::size_t>& dims, std::mt19937_64& rng, double scale = 1.0) {
  SelectorNet net = SelectorNet::zeros(dims);
  std::normal_distribution<double> n(0.0, scale);
  for (DenseLayer& l : net.layers) {
    for (double& w : l.weights) w = n(rng) / std::sqrt(static_cast<double>(l.in));
    for (double& b : l.biases) b = 0.1 * n(rng);
  }
  return net;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

/// Flat views over every parameter, in a fixed order.
inline std::vector<double*> parameters(SelectorNet& net) {
  std::vector<double*> out;
  for (DenseLayer& l : net.layers) {
    for (double& w : l.weights) out.push_back(&w);
    for (double& b : l.biases) out.push_back(&b);
  }
  return out;
}

inline std::vector<double> flatten(const Gradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.insert(out.end(), g.weights[l].begin(), g.weights[l].end());
    out.insert(out.end(), g.biases[l].begin(), g.biases[l].end());
  }
  return out;
}

/// ReLU on/off pattern of every hidden unit for a batch; finite differences
/// are only meaningful when the perturbation leaves it unchanged.
inline std::vector<bool> relu_pattern(const SelectorNet& net, std::span<const LabelRecord> batch) {
  std::vector<bool> out;
  for (const LabelRecord& r : batch) {
    std::vector<double> a = r.features;
    for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
      const DenseLayer& layer = net.layers[l];
      std::vector<double> z(layer.biases);
      for (std::size_t o = 0; o < layer.out; ++o) {
        for (std::size_t i = 0; i < layer.in; ++i) z[o] += layer.weights[o * layer.in + i] * a[i];
        out.push_back(z[o] > 0.0);
        z[o] = std::max(z[o], 0.0);
      }
      a = std::move(z);
    }
  }
  return out;
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // parameters whose perturbation crosses a ReLU kink
  double worst_rel = 0.0;
};

/// Central differences of the batch objective (betas and OHEM selection held
/// fixed) against backprop. Relative error uses max(|a|, |b|, floor).
inline GradCheck check_gradients(SelectorNet net, std::span<const LabelRecord> batch, std::span<const double> betas,
                                 double h = 1e-6, double floor = 1e-4) {
  Gradients g(net);
  const BatchObjective base = batch_objective(net, batch, betas, 1.0, &g);
  (void)base;
  const std::vector<double> analytic = flatten(g);
  const std::vector<bool> pattern = relu_pattern(net, batch);
  std::vector<double*> params = parameters(net);
  GradCheck out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + h;
    const bool same_plus = relu_pattern(net, batch) == pattern;
    const double lp = batch_objective(net, batch, betas, 1.0, nullptr).loss;
    *params[i] = saved - h;
    const bool same_minus = relu_pattern(net, batch) == pattern;
    const double lm = batch_objective(net, batch, betas, 1.0, nullptr).loss;
    *params[i] = saved;
    if (!same_plus || !same_minus) {
      ++out.skipped;
      continue;
    }
    const double numeric = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
    out.worst_rel = std::max(out.worst_rel, std::abs(numeric - analytic[i]) / denom);
    ++out.checked;
  }
  return out;
}

/// A small synthetic benchmark: scenes, the standard detectors, features and
/// labels over every scene.
struct MiniBench {
  std::vector<SyntheticScene> scenes;
  RegionMap gt;
  std::vector<RegionMap> outputs;
  FeatureMap features;
  std::vector<LabelRecord> records;
};

inline MiniBench mini_bench(std::size_t n, std::uint64_t seed) {
  MiniBench b;
  b.scenes = generate_scenes(n, seed);
  const SceneStatsExtractor fx;
  for (const SyntheticScene& s : b.scenes) {
    b.gt[s.sample.image_id] = s.sample.regions;
    b.features[s.sample.image_id] = fx.extract(s.sample);
  }
  const auto profiles = standard_profiles();
  for (std::size_t k = 0; k < profiles.size(); ++k) b.outputs.push_back(simulate_detector(profiles[k], b.scenes, seed + 1 + k));
  b.records = build_dataset(b.gt, b.outputs, b.features);
  return b;
}

}  // namespace pel::oracle

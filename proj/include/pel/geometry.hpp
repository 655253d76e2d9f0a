#pragma once

// Convex polygons, exact clipping and intersection-over-union.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pel/error.hpp"

namespace pel {

inline constexpr double kDegenerateTol = 1e-9;
inline constexpr double kEmptyAreaTol = 1e-12;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

struct Aabb {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  bool overlaps(const Aabb& o) const {
    return x_min < o.x_max && o.x_min < x_max && y_min < o.y_max && o.y_min < y_max;
  }
  bool contains(Point p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  friend bool operator==(const Aabb&, const Aabb&) = default;
};

namespace detail {

inline double signed_area(std::span<const Point> ring) {
  double twice = 0.0;
  for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
    twice += cross(ring[i], ring[(i + 1) % n]);
  }
  return 0.5 * twice;
}

}  // namespace detail

/// Convex polygon with a counter-clockwise vertex ring.
///
/// Construction validates the ring: at least three vertices, no coincident
/// consecutive vertices, strictly positive area, convex and simple. A
/// clockwise ring is reversed in place.
class Polygon {
 public:
  Polygon() = default;

  explicit Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
    validate_and_orient();
  }

  Polygon(std::initializer_list<Point> vertices) : Polygon(std::vector<Point>(vertices)) {}

  static Polygon from_aabb(const Aabb& box) {
    if (!box.valid()) throw InputError("AABB requires x_min < x_max and y_min < y_max");
    return Polygon({{box.x_min, box.y_min},
                    {box.x_max, box.y_min},
                    {box.x_max, box.y_max},
                    {box.x_min, box.y_max}});
  }

  // Rings produced by clipping two valid convex polygons. Drops near-duplicate
  // vertices and skips the convexity check, which can fail by rounding alone.
  static std::optional<Polygon> from_clip(const std::vector<Point>& ring) {
    std::vector<Point> cleaned;
    cleaned.reserve(ring.size());
    for (const Point& p : ring) {
      if (cleaned.empty() || norm(p - cleaned.back()) > kDegenerateTol) cleaned.push_back(p);
    }
    while (cleaned.size() > 1 && norm(cleaned.front() - cleaned.back()) <= kDegenerateTol) {
      cleaned.pop_back();
    }
    if (cleaned.size() < 3) return std::nullopt;
    const double a = detail::signed_area(cleaned);
    if (a < kEmptyAreaTol) return std::nullopt;
    Polygon out;
    out.vertices_ = std::move(cleaned);
    return out;
  }

  std::span<const Point> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Point& operator[](std::size_t i) const { return vertices_[i]; }

  Aabb bounds() const {
    Aabb b{vertices_[0].x, vertices_[0].y, vertices_[0].x, vertices_[0].y};
    for (const Point& p : vertices_) {
      b.x_min = std::min(b.x_min, p.x);
      b.y_min = std::min(b.y_min, p.y);
      b.x_max = std::max(b.x_max, p.x);
      b.y_max = std::max(b.y_max, p.y);
    }
    return b;
  }

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  void validate_and_orient() {
    const std::size_t n = vertices_.size();
    if (n < 3) throw InputError("polygon needs at least 3 vertices, got " + std::to_string(n));
    for (const Point& p : vertices_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InputError("polygon has non-finite vertex");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (norm(vertices_[(i + 1) % n] - vertices_[i]) <= kDegenerateTol) {
        throw InputError("polygon has coincident consecutive vertices at index " + std::to_string(i));
      }
    }
    const double a = detail::signed_area(vertices_);
    if (std::abs(a) <= kDegenerateTol) throw InputError("polygon is degenerate (zero area)");
    if (a < 0.0) std::reverse(vertices_.begin(), vertices_.end());

    // Convex and simple: every turn is left (or straight) and the turns sum to one revolution.
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Point e1 = vertices_[(i + 1) % n] - vertices_[i];
      const Point e2 = vertices_[(i + 2) % n] - vertices_[(i + 1) % n];
      const double c = cross(e1, e2);
      if (c < -kDegenerateTol * norm(e1) * norm(e2)) throw InputError("polygon is not convex");
      turning += std::atan2(c, dot(e1, e2));
    }
    if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) throw InputError("polygon is not simple");
  }

  std::vector<Point> vertices_;
};

/// Shoelace area; strictly positive for a valid polygon.
inline double area(const Polygon& p) { return detail::signed_area(p.vertices()); }

inline Point centroid(const Polygon& p) {
  double cx = 0.0, cy = 0.0, twice = 0.0;
  const auto v = p.vertices();
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    const Point a = v[i];
    const Point b = v[(i + 1) % n];
    const double c = cross(a, b);
    twice += c;
    cx += (a.x + b.x) * c;
    cy += (a.y + b.y) * c;
  }
  return {cx / (3.0 * twice), cy / (3.0 * twice)};
}

/// Sutherland-Hodgman clip of `subject` against every edge of the convex `clip`.
/// Absent when the intersection area is below 1e-12.
inline std::optional<Polygon> intersect(const Polygon& subject, const Polygon& clip) {
  if (!subject.bounds().overlaps(clip.bounds())) return std::nullopt;

  std::vector<Point> out(subject.vertices().begin(), subject.vertices().end());
  std::vector<Point> in;
  const auto edges = clip.vertices();
  for (std::size_t e = 0, m = edges.size(); e < m && !out.empty(); ++e) {
    const Point a = edges[e];
    const Point dir = edges[(e + 1) % m] - a;
    in.swap(out);
    out.clear();
    for (std::size_t i = 0, n = in.size(); i < n; ++i) {
      const Point p = in[i];
      const Point q = in[(i + 1) % n];
      const double dp = cross(dir, p - a);
      const double dq = cross(dir, q - a);
      if (dp >= 0.0) out.push_back(p);
      if ((dp >= 0.0) != (dq >= 0.0)) {
        const double t = dp / (dp - dq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return Polygon::from_clip(out);
}

/// Intersection over union in [0, 1].
inline double iou(const Polygon& d, const Polygon& g) {
  const auto inter = intersect(d, g);
  if (!inter) return 0.0;
  const double i = area(*inter);
  const double u = area(d) + area(g) - i;
  if (u <= 0.0) return 0.0;
  return std::clamp(i / u, 0.0, 1.0);
}

// Rigid transforms used by augmentation and property tests.

inline Point rotate(Point p, double radians, Point center) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  const Point d = p - center;
  return {center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y};
}

inline Polygon rotate(const Polygon& poly, double radians, Point center) {
  std::vector<Point> out;
  out.reserve(poly.size());
  for (const Point& p : poly.vertices()) out.push_back(rotate(p, radians, center));
  return Polygon(std::move(out));
}

inline Polygon translate(const Polygon& poly, Point offset) {
  std::vector<Point> out;
  out.reserve(poly.size());
  for (const Point& p : poly.vertices()) out.push_back(p + offset);
  return Polygon(std::move(out));
}

/// Rectangle of the given size centred at `center`, rotated by `radians`.
inline Polygon oriented_rect(Point center, double width, double height, double radians) {
  const double hw = 0.5 * width;
  const double hh = 0.5 * height;
  std::vector<Point> corners{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
  for (Point& p : corners) p = rotate(p, radians, {0.0, 0.0}) + center;
  return Polygon(std::move(corners));
}

/// Point-in-convex-polygon test (boundary counts as inside).
inline bool contains(const Polygon& poly, Point p) {
  const auto v = poly.vertices();
  for (std::size_t i = 0, n = v.size(); i < n; ++i) {
    if (cross(v[(i + 1) % n] - v[i], p - v[i]) < 0.0) return false;
  }
  return true;
}

}  // namespace pel

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pel/geometry.hpp"
#include "support.hpp"

using namespace pel;

namespace {

Polygon unit_square(double dx = 0.0, double dy = 0.0) {
  return Polygon({{dx, dy}, {dx + 1, dy}, {dx + 1, dy + 1}, {dx, dy + 1}});
}

Polygon hexagon(double r) {
  std::vector<Point> v;
  for (int i = 0; i < 6; ++i) {
    const double t = i * std::numbers::pi / 3.0;
    v.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return Polygon(v);
}

}  // namespace

TEST(Area, UnitSquareAndTriangle) {
  EXPECT_DOUBLE_EQ(area(unit_square()), 1.0);
  EXPECT_DOUBLE_EQ(area(Polygon({{0, 0}, {2, 0}, {0, 2}})), 2.0);
}

TEST(Area, RegularHexagonMatchesAnalyticAndRaster) {
  const Polygon h = hexagon(1.0);
  EXPECT_NEAR(area(h), 3.0 * std::sqrt(3.0) / 2.0, 1e-12);

  // Raster oracle: fraction of a fine grid over [-1,1]^2 inside the hexagon.
  const int n = 2000;
  std::size_t inside = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Point p{-1.0 + (i + 0.5) * 2.0 / n, -1.0 + (j + 0.5) * 2.0 / n};
      inside += oracle::inside_by_area(h.vertices(), p, 3.0 * std::sqrt(3.0) / 2.0);
    }
  }
  EXPECT_NEAR(4.0 * static_cast<double>(inside) / (n * n), area(h), 1e-3);
}

TEST(Polygon, ClockwiseInputIsReversed) {
  const Polygon cw({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  EXPECT_GT(area(cw), 0.0);
  EXPECT_EQ(cw[0], (Point{1, 0}));
}

TEST(Polygon, RejectsDegenerateRings) {
  EXPECT_THROW(Polygon({{0, 0}, {1, 0}}), InputError);
  EXPECT_THROW(Polygon({{0, 0}, {1, 0}, {2, 0}}), InputError);           // collinear
  EXPECT_THROW(Polygon({{0, 0}, {0, 0}, {1, 0}, {0, 1}}), InputError);   // duplicate
  EXPECT_THROW(Polygon({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}), InputError);  // concave
  // Pentagram: every turn is left but the ring winds twice.
  std::vector<Point> star;
  for (int i = 0; i < 5; ++i) {
    const double t = i * 4.0 * std::numbers::pi / 5.0;
    star.push_back({std::cos(t), std::sin(t)});
  }
  EXPECT_THROW(Polygon{star}, InputError);
  EXPECT_THROW(Polygon::from_aabb({1, 0, 0, 1}), InputError);
}

TEST(Polygon, AabbRoundTrip) {
  const Aabb box{1.5, -2.0, 4.0, 3.0};
  const Polygon p = Polygon::from_aabb(box);
  EXPECT_EQ(p.bounds(), box);
  EXPECT_DOUBLE_EQ(area(p), box.width() * box.height());
}

TEST(Intersect, SelfDisjointAndHalfOverlap) {
  const Polygon a = unit_square();
  const auto self = intersect(a, a);
  ASSERT_TRUE(self);
  EXPECT_NEAR(area(*self), 1.0, 1e-12);
  EXPECT_FALSE(intersect(a, unit_square(3, 3)));
  EXPECT_FALSE(intersect(a, unit_square(1, 0)));  // shared edge only
  const auto half = intersect(a, unit_square(0.5, 0));
  ASSERT_TRUE(half);
  EXPECT_NEAR(area(*half), 0.5, 1e-12);
}

TEST(Iou, ExactCases) {
  EXPECT_DOUBLE_EQ(iou(unit_square(), unit_square()), 1.0);
  EXPECT_DOUBLE_EQ(iou(unit_square(), unit_square(5, 0)), 0.0);
  EXPECT_NEAR(iou(unit_square(), unit_square(0.5, 0)), 1.0 / 3.0, 1e-12);
}

TEST(Iou, Properties) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Polygon a = oracle::random_convex(rng, {u(rng), u(rng)}, 2.0);
    const Polygon b = oracle::random_convex(rng, {u(rng), u(rng)}, 2.0);
    const double ab = iou(a, b);
    EXPECT_NEAR(ab, iou(b, a), 1e-12);
    EXPECT_NEAR(iou(a, a), 1.0, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    if (const auto inter = intersect(a, b)) {
      EXPECT_LE(area(*inter), std::min(area(a), area(b)) + 1e-12);
    }
    const double t = ang(rng);
    const Point c{u(rng), u(rng)};
    const Point shift{u(rng) * 10, u(rng) * 10};
    const Polygon ra = translate(rotate(a, t, c), shift);
    const Polygon rb = translate(rotate(b, t, c), shift);
    EXPECT_NEAR(iou(ra, rb), ab, 1e-9);
  }
}

TEST(Iou, AgreesWithMonteCarloOracle) {
  std::mt19937_64 rng(3);
  std::mt19937_64 mc(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const Polygon a = oracle::random_convex(rng, {u(rng), u(rng)}, 1.5);
    const Polygon b = oracle::random_convex(rng, {u(rng), u(rng)}, 1.5);
    EXPECT_NEAR(iou(a, b), oracle::monte_carlo_iou(a, b, 200000, mc), 1e-2);
  }
}

TEST(Transforms, OrientedRectAndCentroid) {
  const Polygon r = oriented_rect({3, 4}, 10, 2, 0.7);
  EXPECT_NEAR(area(r), 20.0, 1e-9);
  const Point c = centroid(r);
  EXPECT_NEAR(c.x, 3.0, 1e-12);
  EXPECT_NEAR(c.y, 4.0, 1e-12);
  EXPECT_TRUE(contains(r, {3, 4}));
  EXPECT_FALSE(contains(r, {30, 4}));
}

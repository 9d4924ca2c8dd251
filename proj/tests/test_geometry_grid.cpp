// Unit tests for the geometry primitives and the occupancy grid,
// including the transform rasterization artifacts.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mapmerge/grid.hpp"

using namespace mapmerge;

TEST_CASE("angle normalization", "[geometry]") {
  CHECK(normalize_deg(0.0) == 0.0);
  CHECK(normalize_deg(190.0) == Catch::Approx(-170.0));
  CHECK(normalize_deg(-190.0) == Catch::Approx(170.0));
  CHECK(normalize_deg(180.0) == Catch::Approx(180.0));
  CHECK(normalize_deg(-180.0) == Catch::Approx(180.0));
  CHECK(normalize_deg(720.0 + 13.0) == Catch::Approx(13.0));

  CHECK(normalize_rad(3.0 * std::numbers::pi) == Catch::Approx(std::numbers::pi));
  CHECK(normalize_rad(-0.5) == Catch::Approx(-0.5));
}

TEST_CASE("floor rounding to cells, negatives included", "[geometry]") {
  CHECK(to_cell({0.0, 0.0}) == CellIndex{0, 0});
  CHECK(to_cell({0.99, 0.99}) == CellIndex{0, 0});
  CHECK(to_cell({-0.01, -1.5}) == CellIndex{-1, -2});
  CHECK(to_cell({5.0, 7.0}) == CellIndex{5, 7});
}

TEST_CASE("apply_transform_point matches the hand-evaluated cases", "[geometry]") {
  // 30-degree rotation about (200,200) re-anchored at (300,300).
  const RigidTransform2D T = RigidTransform2D::from_degrees(30.0);

  const Vec2 a = apply_transform_point({200, 200}, T, {200, 200}, {300, 300});
  CHECK(a.x == Catch::Approx(300.0).margin(1e-12));
  CHECK(a.y == Catch::Approx(300.0).margin(1e-12));

  const Vec2 b = apply_transform_point({202, 200}, T, {200, 200}, {300, 300});
  CHECK(b.x == Catch::Approx(300.0 + 2.0 * std::cos(deg_to_rad(30.0))).epsilon(1e-12));
  CHECK(b.y == Catch::Approx(301.0).epsilon(1e-9));
  CHECK(b.x == Catch::Approx(301.7321).margin(1e-4));
}

TEST_CASE("identity transform is a bitwise no-op", "[geometry]") {
  const RigidTransform2D id = RigidTransform2D::identity();
  const Vec2 p{5.0, 7.0};
  const Vec2 q = apply_transform_point(p, id);
  CHECK(q.x == 5.0);
  CHECK(q.y == 7.0);

  // With equal anchors the early return still applies bitwise.
  const Vec2 r = apply_transform_point({0.1 + 0.2, 0.3}, id, {3, 3}, {3, 3});
  CHECK(r.x == 0.1 + 0.2);
  CHECK(r.y == 0.3);
}

TEST_CASE("rotation additivity within 1e-9", "[geometry]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  std::uniform_real_distribution<double> coord(-100.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    const double a = ang(rng);
    const double b = ang(rng);
    const Vec2 p{coord(rng), coord(rng)};
    const Vec2 two_step = rotate(rotate(p, a), b);
    const Vec2 one_step = rotate(p, a + b);
    CHECK(distance(two_step, one_step) < 1e-9);
  }
}

TEST_CASE("fuse_values follows the max-confidence rule", "[grid]") {
  CHECK(fuse_values(0.9f, 0.5f) == 0.9f);
  CHECK(fuse_values(0.5f, 0.9f) == 0.9f);
  CHECK(fuse_values(0.1f, 0.6f) == 0.1f);  // |0.1-0.5| > |0.6-0.5|
  CHECK(fuse_values(0.2f, 0.8f) == Catch::Approx(0.5f));  // tie, averaged
  CHECK(fuse_values(0.3f, 0.3f) == Catch::Approx(0.3f));
}

TEST_CASE("grid invariants and conversions", "[grid]") {
  CHECK_THROWS_AS(OccupancyGrid(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(OccupancyGrid(5, 5, -1.0), std::invalid_argument);

  OccupancyGrid g(10, 8, 0.02);
  CHECK_FALSE(g.is_explored(3, 3));
  g.set(3, 3, 0.25f);
  CHECK(g.is_explored(3, 3));
  CHECK_FALSE(g.is_occupied(3, 3));
  g.set(4, 4, 0.9f);
  CHECK(g.is_occupied(4, 4));

  CHECK(g.world_to_cell({0.059, 0.021}) == CellIndex{2, 1});
  const Vec2 w = g.cell_to_world({2, 1});
  CHECK(w.x == Catch::Approx(0.04));
  CHECK(w.y == Catch::Approx(0.02));
}

TEST_CASE("identity grid transform is bitwise identical", "[grid]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> val(0.0f, 1.0f);
  OccupancyGrid g(20, 20);
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 20; ++c) {
      if ((r + c) % 3 == 0) g.set(c, r, val(rng));
    }
  }
  const TransformedGrid out = apply_transform_grid(g, RigidTransform2D::identity());
  CHECK(out.origin == CellIndex{0, 0});
  CHECK(out.grid == g);
}

namespace {

int explored_count(const OccupancyGrid& g) {
  int n = 0;
  for (int r = 0; r < g.height(); ++r) {
    for (int c = 0; c < g.width(); ++c) {
      if (g.is_explored(c, r)) ++n;
    }
  }
  return n;
}

// Interior gap: unexplored cell with at least 6 explored neighbors in
// its 3x3 neighborhood (the pattern the conditional blur repairs).
int interior_gap_count(const OccupancyGrid& g) {
  int gaps = 0;
  for (int r = 0; r < g.height(); ++r) {
    for (int c = 0; c < g.width(); ++c) {
      if (g.is_explored(c, r)) continue;
      int explored = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nc = c + dc, nr = r + dr;
          if (nc < 0 || nc >= g.width() || nr < 0 || nr >= g.height()) continue;
          if (g.is_explored(nc, nr)) ++explored;
        }
      }
      if (explored >= 6) ++gaps;
    }
  }
  return gaps;
}

}  // namespace

TEST_CASE("quarter-turn transforms leave zero gaps", "[grid]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<float> val(0.0f, 1.0f);
  std::uniform_int_distribution<int> shift(-7, 7);

  for (double theta : {0.0, 90.0, 180.0, 270.0}) {
    for (int rep = 0; rep < 5; ++rep) {
      // Fully explored grid with random values: a quarter turn plus an
      // integer shift is a bijection on cells, so the explored count is
      // preserved exactly and no interior gaps form.
      OccupancyGrid g(20, 20);
      for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 20; ++c) g.set(c, r, val(rng));
      }
      const RigidTransform2D T = RigidTransform2D::from_degrees(
          theta, {static_cast<double>(shift(rng)), static_cast<double>(shift(rng))});
      const TransformedGrid out = apply_transform_grid(g, T);
      CHECK(explored_count(out.grid) == 400);
      CHECK(interior_gap_count(out.grid) == 0);

      // Same bijection on a sparse grid: no explored cell is lost.
      OccupancyGrid sparse(20, 20);
      int src_explored = 0;
      for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 20; ++c) {
          if (rng() % 2 == 0) {
            sparse.set(c, r, val(rng));
            ++src_explored;
          }
        }
      }
      const TransformedGrid out2 = apply_transform_grid(sparse, T);
      CHECK(explored_count(out2.grid) == src_explored);
    }
  }
}

TEST_CASE("30-degree rotation reproduces the rounding gaps", "[grid]") {
  // The 25-point fixture: a 5x5 explored block rotated 30 degrees about
  // (200,200), re-anchored at (300,300).
  OccupancyGrid g(400, 400);
  for (int r = 98; r <= 102; ++r) {
    for (int c = 98; c <= 102; ++c) g.set(c, r, 0.0f);
  }
  const RigidTransform2D T = RigidTransform2D::from_degrees(30.0);
  const TransformedGrid out = apply_transform_grid(g, T, {200, 200}, {300, 300});
  CHECK(explored_count(out.grid) < 25);  // collisions under floor rounding
  CHECK(interior_gap_count(out.grid) >= 1);
}

TEST_CASE("transformed_bounds covers the rotated cell lattice", "[grid]") {
  OccupancyGrid g(10, 10);
  const auto [lo, hi] =
      transformed_bounds(g, RigidTransform2D::from_degrees(90.0), {0, 0}, {0, 0});
  // Cell points {0..9}^2 rotated by 90 degrees land in [-9,0] x [0,9];
  // hi is exclusive.
  CHECK(lo == CellIndex{-9, 0});
  CHECK(hi == CellIndex{1, 10});
}

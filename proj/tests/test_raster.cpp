// Unit tests for fusion, the conditional blur, the chamfer metric and
// the end-to-end merge.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mapmerge/metrics.hpp"
#include "mapmerge/raster.hpp"

using namespace mapmerge;

namespace {

OccupancyGrid rectangle_world(int w = 260, int h = 210) {
  OccupancyGrid g(w, h, 0.02, kUnexplored);
  for (int r = 20; r < h - 20; ++r) {
    for (int c = 20; c < w - 20; ++c) g.set(c, r, 0.0f);
  }
  for (int c = 20; c < w - 20; ++c) {
    g.set(c, 20, 1.0f);
    g.set(c, h - 21, 1.0f);
  }
  for (int r = 20; r < h - 20; ++r) {
    g.set(20, r, 1.0f);
    g.set(w - 21, r, 1.0f);
  }
  // An interior wall so the OGM vector has both groups.
  for (int r = 20; r < 120; ++r) g.set(140, r, 1.0f);
  return g;
}

int occupied_count(const OccupancyGrid& g) {
  return static_cast<int>(g.occupied_cells().size());
}

std::vector<TagEstimate> three_tags() {
  return {{1, {60, 60}, 0.95, 300},
          {2, {200, 70}, 0.92, 300},
          {3, {120, 150}, 0.91, 300}};
}

}  // namespace

TEST_CASE("fuse follows the confidence rule per cell", "[raster]") {
  OccupancyGrid dst(3, 1, 0.02), src(3, 1, 0.02);
  dst.set(0, 0, 0.9f);
  src.set(0, 0, 0.5f);
  src.set(1, 0, 0.7f);          // dst unexplored there
  dst.set(2, 0, 0.2f);
  src.set(2, 0, 0.8f);          // tied confidence

  const OccupancyGrid out = fuse(dst, src);
  CHECK(out.at(0, 0) == 0.9f);
  CHECK(out.at(1, 0) == 0.7f);
  CHECK(out.at(2, 0) == Catch::Approx(0.5f));

  // No explored cell becomes unexplored.
  for (int c = 0; c < 3; ++c) {
    CHECK((out.is_explored(c, 0) ==
           (dst.is_explored(c, 0) || src.is_explored(c, 0))));
  }

  OccupancyGrid mismatched(4, 1, 0.02);
  CHECK_THROWS_AS(fuse(dst, mismatched), std::invalid_argument);
}

TEST_CASE("fuse with an all-unexplored destination returns the source", "[raster]") {
  OccupancyGrid dst(5, 5, 0.02);
  OccupancyGrid src(5, 5, 0.02);
  src.set(2, 2, 0.8f);
  src.set(3, 1, 0.1f);
  CHECK(fuse(dst, src) == src);
}

TEST_CASE("conditional blur repairs gaps without touching walls", "[raster]") {
  SECTION("single unexplored gap amid free cells becomes free") {
    OccupancyGrid g(5, 5, 0.02, 0.0f);
    g.set(2, 2, kUnexplored);
    const OccupancyGrid out = conditional_blur(g);
    CHECK(out.is_explored(2, 2));
    CHECK(out.at(2, 2) == Catch::Approx(0.0f));
  }

  SECTION("occupied cells never change") {
    OccupancyGrid g(5, 5, 0.02, 0.0f);
    g.set(2, 2, 1.0f);
    g.set(3, 2, 0.75f);
    const OccupancyGrid out = conditional_blur(g);
    CHECK(out.at(2, 2) == 1.0f);
    CHECK(out.at(3, 2) == 0.75f);
  }

  SECTION("uniform free region is unchanged") {
    OccupancyGrid g(6, 6, 0.02, 0.25f);
    CHECK(conditional_blur(g) == g);
  }

  SECTION("unexplored cell with too few free neighbors stays unexplored") {
    OccupancyGrid g(5, 5, 0.02, kUnexplored);
    // Exactly 5 explored free neighbors around (2,2).
    g.set(1, 1, 0.0f);
    g.set(2, 1, 0.0f);
    g.set(3, 1, 0.0f);
    g.set(1, 2, 0.0f);
    g.set(3, 2, 0.0f);
    const OccupancyGrid out = conditional_blur(g);
    CHECK_FALSE(out.is_explored(2, 2));
  }

  SECTION("free values never exceed the occupied threshold after blur") {
    OccupancyGrid g(5, 5, 0.02, 0.1f);
    g.set(2, 2, 1.0f);
    const OccupancyGrid out = conditional_blur(g);
    // The free neighbor of a wall keeps a free value: occupancy does
    // not diffuse out of the wall.
    CHECK(out.at(1, 2) == Catch::Approx(0.1f));
    CHECK(out.at(2, 2) == 1.0f);
  }

  SECTION("third application equals the second exactly") {
    OccupancyGrid g = rectangle_world(80, 70);
    // Punch a few gaps.
    g.set(40, 40, kUnexplored);
    g.set(41, 40, kUnexplored);
    g.set(55, 30, kUnexplored);
    const OccupancyGrid once = conditional_blur(g);
    const OccupancyGrid twice = conditional_blur(once);
    const OccupancyGrid thrice = conditional_blur(twice);
    CHECK(thrice == twice);
  }
}

TEST_CASE("unconditional blur diffuses walls, conditional does not", "[raster]") {
  OccupancyGrid g = rectangle_world(80, 70);
  const int before = occupied_count(g);

  OccupancyGrid cond = g, uncond = g;
  for (int i = 0; i < 5; ++i) {
    cond = conditional_blur(cond);
    uncond = unconditional_blur(uncond);
  }
  CHECK(occupied_count(cond) == before);  // walls untouched
  const double drift =
      std::abs(occupied_count(uncond) - before) / static_cast<double>(before);
  CHECK(drift > 0.05);
}

TEST_CASE("squared distance transform matches brute force", "[raster]") {
  std::mt19937_64 rng(53);
  OccupancyGrid g(30, 30, 0.02, 0.0f);
  for (int i = 0; i < 40; ++i) {
    g.set(static_cast<int>(rng() % 30), static_cast<int>(rng() % 30), 1.0f);
  }
  const auto field = squared_distance_to_occupied(g);
  const auto occupied = g.occupied_cells();
  for (int r = 0; r < 30; ++r) {
    for (int c = 0; c < 30; ++c) {
      double best = 1e18;
      for (CellIndex o : occupied) {
        const double dx = o.col - c, dy = o.row - r;
        best = std::min(best, dx * dx + dy * dy);
      }
      CHECK(field[static_cast<size_t>(r) * 30 + c] == Catch::Approx(best));
    }
  }
}

TEST_CASE("chamfer MSE on known configurations", "[raster]") {
  OccupancyGrid a(40, 40, 0.02, 0.0f);
  for (int c = 5; c < 35; ++c) a.set(c, 10, 1.0f);

  SECTION("identical maps score zero") {
    CHECK(chamfer_mse(a, a) == 0.0);
  }

  SECTION("2-cell shift perpendicular to a straight wall scores 4") {
    OccupancyGrid b(40, 40, 0.02, 0.0f);
    for (int c = 5; c < 35; ++c) b.set(c, 12, 1.0f);
    CHECK(chamfer_mse(a, b) == Catch::Approx(4.0));
  }

  SECTION("errors") {
    OccupancyGrid empty(40, 40, 0.02, 0.0f);
    CHECK_THROWS_AS(chamfer_mse(empty, a), std::invalid_argument);
    CHECK_THROWS_AS(chamfer_mse(a, empty), std::invalid_argument);
    OccupancyGrid small(10, 10, 0.02, 0.0f);
    CHECK_THROWS_AS(chamfer_mse(a, small), std::invalid_argument);
  }
}

TEST_CASE("merge gate failure raises MergeNotReadyError", "[raster]") {
  MapBundle m1, m2;
  m1.occupancy = rectangle_world();
  m2.occupancy = rectangle_world();
  m1.tags = {{1, {60, 60}, 0.95, 300}, {2, {200, 70}, 0.92, 300}};
  m2.tags = m1.tags;  // only two common tags
  CHECK_THROWS_AS(merge_maps_end_to_end(m1, m2, 2), MergeNotReadyError);
}

TEST_CASE("merging a map with itself is near-lossless", "[raster]") {
  MapBundle m1, m2;
  m1.occupancy = rectangle_world();
  m2.occupancy = m1.occupancy;
  m1.tags = three_tags();
  m2.tags = three_tags();

  // Method 1 is exact here: equal quadrant angles and equal centroids.
  {
    const MergeReport report = merge_maps_end_to_end(m1, m2, 1);
    CHECK(report.mse_px2 <= 1e-9);
    const Vec2 p{123.0, 45.0};
    CHECK(distance(report.solution.apply(p), p) <= 1e-9);
    CHECK(occupied_count(report.merged.occupancy) == occupied_count(m1.occupancy));
  }
  // Methods 2 and 3 re-estimate the rotation from two independent
  // RANSAC passes, so the recovered transform is near-identity.
  for (int method : {2, 3}) {
    MergeOptions opts;
    opts.ransac.rng_seed = 77;
    const MergeReport report = merge_maps_end_to_end(m1, m2, method, opts);
    INFO("method " << method);
    CHECK(report.mse_px2 <= 0.5);
    const Vec2 p{123.0, 45.0};
    CHECK(distance(report.solution.apply(p), p) <= 1.0);
  }
}

TEST_CASE("no-blur option preserves transform gaps", "[raster]") {
  MapBundle m1, m2;
  m1.occupancy = rectangle_world();
  m2.occupancy = m1.occupancy;
  m1.tags = three_tags();
  m2.tags = three_tags();

  MergeOptions with_blur;
  with_blur.ransac.rng_seed = 7;
  MergeOptions no_blur = with_blur;
  no_blur.apply_blur = false;

  const MergeReport a = merge_maps_end_to_end(m1, m2, 1, with_blur);
  const MergeReport b = merge_maps_end_to_end(m1, m2, 1, no_blur);
  // Identity merge has no gaps to fill; both paths agree here, and the
  // blurred grid never loses explored cells relative to the raw fuse.
  int explored_a = 0, explored_b = 0;
  for (int r = 0; r < a.merged.occupancy.height(); ++r) {
    for (int c = 0; c < a.merged.occupancy.width(); ++c) {
      explored_a += a.merged.occupancy.is_explored(c, r);
      explored_b += b.merged.occupancy.is_explored(c, r);
    }
  }
  CHECK(explored_a >= explored_b);
}

TEST_CASE("coverage fields are merged alongside occupancy", "[raster]") {
  MapBundle m1, m2;
  m1.occupancy = rectangle_world();
  m2.occupancy = m1.occupancy;
  m1.coverage = CoverageGrid(m1.occupancy.width(), m1.occupancy.height(), 0.02, 0.6f);
  m2.coverage = m1.coverage;
  m1.tags = three_tags();
  m2.tags = three_tags();

  const MergeReport report = merge_maps_end_to_end(m1, m2, 1);
  REQUIRE(report.merged.coverage.has_value());
  CHECK(report.merged.coverage->width() == report.merged.occupancy.width());
  CHECK(report.merged.coverage->height() == report.merged.occupancy.height());
  // Interior coverage survives the round trip.
  const CellIndex mid{100 - report.canvas_origin.col, 100 - report.canvas_origin.row};
  CHECK(report.merged.coverage->at(mid) == Catch::Approx(0.6f));
}

TEST_CASE("merged tags are reported in the merged frame", "[raster]") {
  MapBundle m1, m2;
  m1.occupancy = rectangle_world();
  m2.occupancy = m1.occupancy;
  m1.tags = three_tags();
  m2.tags = three_tags();

  const MergeReport report = merge_maps_end_to_end(m1, m2, 1);
  REQUIRE(report.merged.tags.size() == 6);
  // Map-1 tags are shifted by the canvas origin only.
  CHECK(report.merged.tags[0].map_pose.col == 60 - report.canvas_origin.col);
  CHECK(report.merged.tags[0].map_pose.row == 60 - report.canvas_origin.row);
}

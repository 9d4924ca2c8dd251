// Unit tests for the nearest-neighbor index, overlap selection and ICP
// refinement.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mapmerge/icp.hpp"

using namespace mapmerge;

namespace {

// Well-constrained corner shape: two perpendicular dense edges.
std::vector<Vec2> corner_cloud() {
  std::vector<Vec2> pts;
  for (int i = 0; i <= 80; ++i) pts.push_back({static_cast<double>(i), 0.0});
  for (int i = 1; i <= 60; ++i) pts.push_back({0.0, static_cast<double>(i)});
  return pts;
}

// Same corner, sampled at random (incommensurate) positions. Exact
// unit-lattice sampling locks nearest-neighbor correspondences into a
// shifted fixed point about half a cell off; irregular sampling removes
// that artifact and lets ICP recover the perturbation to high accuracy.
std::vector<Vec2> sampled_corner_cloud() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> sx(0.0, 80.0), sy(0.0, 60.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({sx(rng), 0.0});
  for (int i = 0; i < 150; ++i) pts.push_back({0.0, sy(rng)});
  return pts;
}

std::vector<Vec2> transformed(const std::vector<Vec2>& pts, double theta_deg, Vec2 t) {
  std::vector<Vec2> out;
  for (Vec2 p : pts) out.push_back(rotate(p, deg_to_rad(theta_deg)) + t);
  return out;
}

Vec2 icp_map(const IcpResult& r, Vec2 p) {
  return rotate({p.x + r.dx, p.y + r.dy}, deg_to_rad(r.dtheta_deg));
}

}  // namespace

TEST_CASE("spatial hash nearest matches brute force", "[icp]") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> coord(-50.0, 50.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({coord(rng), coord(rng)});
  const SpatialHash index(pts, 8.0);

  for (int q = 0; q < 100; ++q) {
    const Vec2 query{coord(rng), coord(rng)};
    const double cap = 10.0;
    double best = cap * cap;
    std::optional<size_t> expected;
    for (size_t i = 0; i < pts.size(); ++i) {
      const Vec2 d = pts[i] - query;
      if (dot(d, d) <= best) {
        best = dot(d, d);
        expected = i;
      }
    }
    const auto got = index.nearest(query, cap);
    REQUIRE(got.has_value() == expected.has_value());
    if (got) {
      CHECK(distance(index.point(*got), query) ==
            Catch::Approx(distance(pts[*expected], query)).margin(1e-12));
    }
  }
}

TEST_CASE("select_overlap keeps only the shared bounding region", "[icp]") {
  SECTION("identical sets pass through") {
    const auto pts = corner_cloud();
    const auto [a, b] = select_overlap(pts, pts, 5.0);
    CHECK(a.size() == pts.size());
    CHECK(b.size() == pts.size());
  }

  SECTION("disjoint boxes throw") {
    std::vector<Vec2> a = {{0, 0}, {10, 10}};
    std::vector<Vec2> b = {{100, 100}, {110, 110}};
    CHECK_THROWS_AS(select_overlap(a, b, 5.0), OverlapError);
  }

  SECTION("partial overlap restricts both sets") {
    std::vector<Vec2> a, b;
    for (int i = 0; i <= 100; ++i) a.push_back({static_cast<double>(i), 0.0});
    for (int i = 50; i <= 150; ++i) b.push_back({static_cast<double>(i), 0.0});
    const auto [sa, sb] = select_overlap(a, b, 5.0);
    // Common box is x in [50, 100] expanded by 5.
    for (Vec2 p : sa) CHECK((p.x >= 45.0 && p.x <= 105.0));
    for (Vec2 p : sb) CHECK((p.x >= 45.0 && p.x <= 105.0));
    CHECK(sa.size() == 56);
    CHECK(sb.size() == 56);
  }
}

TEST_CASE("icp on identical sets converges in one iteration", "[icp]") {
  const auto pts = corner_cloud();
  std::vector<double> trace;
  const IcpResult r = icp(pts, pts, IcpParams{}, &trace);
  CHECK(r.iterations_used == 1);
  CHECK(r.final_mse == Catch::Approx(0.0).margin(1e-15));
  CHECK(r.dx == Catch::Approx(0.0).margin(1e-12));
  CHECK(r.dy == Catch::Approx(0.0).margin(1e-12));
  CHECK(r.dtheta_deg == Catch::Approx(0.0).margin(1e-12));
  CHECK(trace.size() == 1);
}

TEST_CASE("icp recovers a small rigid perturbation", "[icp]") {
  const auto source = sampled_corner_cloud();
  const auto target = transformed(source, 1.5, {2.0, 1.0});

  std::vector<double> trace;
  const IcpResult r = icp(source, target, IcpParams{}, &trace);

  // The recovered mapping must carry source points onto their images.
  for (size_t i = 0; i < source.size(); i += 7) {
    CHECK(distance(icp_map(r, source[i]), target[i]) <= 0.25);
  }
  CHECK(std::abs(r.dtheta_deg - 1.5) <= 0.1);

  // Mean-square correspondence error is non-increasing across
  // iterations on this clean fixture.
  for (size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] <= trace[i - 1] + 1e-9);
  }
  CHECK(trace.back() < trace.front());
}

TEST_CASE("distance cap suppresses outliers", "[icp]") {
  auto source = sampled_corner_cloud();
  const auto target = transformed(sampled_corner_cloud(), 1.0, {1.5, -0.5});
  source.push_back({500.0, 500.0});  // far outlier, outside any cap

  const IcpResult r = icp(source, target, IcpParams{});
  for (size_t i = 0; i < source.size() - 1; i += 9) {
    CHECK(distance(icp_map(r, source[i]), target[i]) <= 0.25);
  }
}

TEST_CASE("icp error paths", "[icp]") {
  CHECK_THROWS_AS(icp({}, corner_cloud()), std::invalid_argument);
  CHECK_THROWS_AS(icp(corner_cloud(), {}), std::invalid_argument);

  // Correspondence starvation: all points beyond the cap.
  std::vector<Vec2> far = {{1000, 1000}, {1001, 1000}};
  CHECK_THROWS_AS(icp(far, corner_cloud(), IcpParams{}), CorrespondenceError);
}

TEST_CASE("mean_square_nn_error on known configurations", "[icp]") {
  std::vector<Vec2> target = {{0, 0}, {10, 0}, {20, 0}};
  const SpatialHash index(target, 5.0);
  std::vector<Vec2> from = {{0, 2}, {10, 2}, {20, 2}};
  CHECK(mean_square_nn_error(from, index, 5.0) == Catch::Approx(4.0));
  std::vector<Vec2> nothing_close = {{500, 500}};
  CHECK(mean_square_nn_error(nothing_close, index, 5.0) ==
        std::numeric_limits<double>::infinity());
}

/*
 * Copyright 2026 The mapmerge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MAPMERGE_LINES_HPP_
#define MAPMERGE_LINES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "mapmerge/grid.hpp"

namespace mapmerge {

struct RansacParams {
  double d_line = 2.0;              ///< inlier distance to the line, cells
  double t_perc = 0.15;             ///< acceptance fraction of N_init
  double t_final = 0.50;            ///< termination fraction of N_init
  int max_iterations_per_line = 500;
  int subsample_stride = 2;         ///< stride over the occupied-cell set
  double d_s = 30.0;                ///< breakdown gap threshold, cells
  double t_theta = 5.0;             ///< merge angle threshold, degrees
  double t_j = 5.0;                 ///< merge proximity threshold, cells
  double t_len = 30.0;              ///< minimum segment length, cells
  double l_rel_min = 0.6;           ///< minimum mean member occupancy
  float occupied_threshold = 0.5f;
  uint64_t rng_seed = 0;
};

/// An extracted obstacle line: endpoints, supporting occupied cells,
/// gradient in degrees (-180, 180], Euclidean length and reliability
/// (mean occupancy of the member cells).
struct LineSegment {
  Vec2 p1, p2;
  std::vector<CellIndex> members;
  double theta_deg = 0.0;
  double length = 0.0;
  double reliability = 0.0;
};

/// Perpendicular distance of point A from the infinite line through B
/// and C.
inline double point_line_distance(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 bc = c - b;
  const double len = norm(bc);
  if (len == 0.0) throw std::invalid_argument("point_line_distance: B == C");
  return std::abs((c.x - b.x) * (b.y - a.y) - (b.x - a.x) * (c.y - b.y)) / len;
}

/// Distance of point P from segment [a, b].
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double u = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + u * ab);
}

namespace detail {

inline Vec2 cell_point(CellIndex c) {
  return {static_cast<double>(c.col), static_cast<double>(c.row)};
}

// Principal axis (total-least-squares direction) of the member cells,
// canonicalized so theta lies in (-90, 90].
inline Vec2 principal_axis(const std::vector<CellIndex>& members, Vec2 mean) {
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (CellIndex m : members) {
    const double dx = m.col - mean.x;
    const double dy = m.row - mean.y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  Vec2 u{1.0, 0.0};
  if (std::abs(sxy) > 1e-12) {
    const double tr = sxx + syy;
    const double det = sxx * syy - sxy * sxy;
    const double lambda = 0.5 * tr + std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
    u = {lambda - syy, sxy};
    const double n = norm(u);
    if (n > 0.0) u = (1.0 / n) * u;
  } else if (syy > sxx) {
    u = {0.0, 1.0};
  }
  if (u.x < 0.0 || (u.x == 0.0 && u.y < 0.0)) u = -1.0 * u;
  return u;
}

// Builds a segment from its member cells: the line is the members'
// total-least-squares fit and the endpoints are the extremal members
// projected onto it. A raw extremal member pair would tilt the line by
// up to one cell over its length (quantization), which is enough to
// leak corner cells of a perpendicular wall into the membership.
inline LineSegment make_segment(std::vector<CellIndex> members) {
  LineSegment seg;
  seg.members = std::move(members);
  Vec2 mean;
  for (CellIndex m : seg.members) mean = mean + cell_point(m);
  mean = (1.0 / static_cast<double>(seg.members.size())) * mean;
  const Vec2 u = principal_axis(seg.members, mean);

  double s_min = std::numeric_limits<double>::infinity();
  double s_max = -std::numeric_limits<double>::infinity();
  for (CellIndex m : seg.members) {
    const double s = dot(cell_point(m) - mean, u);
    s_min = std::min(s_min, s);
    s_max = std::max(s_max, s);
  }
  seg.p1 = mean + s_min * u;
  seg.p2 = mean + s_max * u;
  seg.length = s_max - s_min;
  seg.theta_deg = rad_to_deg(std::atan2(u.y, u.x));
  return seg;
}

// Angle difference modulo 180 degrees, in [0, 90].
inline double angle_diff_mod180(double a_deg, double b_deg) {
  double d = std::abs(std::fmod(a_deg - b_deg, 180.0));
  if (d > 90.0) d = 180.0 - d;
  return d;
}

}  // namespace detail

/// Mean occupancy probability of the segment's member cells (unexplored
/// members count as zero occupancy).
inline double line_reliability(const OccupancyGrid& grid, const LineSegment& seg) {
  if (seg.members.empty()) return 0.0;
  double s = 0.0;
  for (CellIndex m : seg.members) {
    if (grid.in_bounds(m) && grid.is_explored(m)) s += grid.at(m);
  }
  return s / static_cast<double>(seg.members.size());
}

/// Repeated RANSAC over the sub-sampled occupied-cell set. A candidate
/// line is accepted when its inlier fraction exceeds t_perc; its
/// endpoints are then recomputed as the farthest member pair, the
/// membership is recomputed against the updated line and the members
/// are removed from the point set. When the per-line iteration cap is
/// hit the best candidate so far is kept. Terminates when the remaining
/// point fraction drops below t_final. Deterministic given rng_seed.
inline std::vector<LineSegment> ransac_extract(const OccupancyGrid& grid,
                                               const RansacParams& params) {
  std::mt19937_64 rng(params.rng_seed);
  std::vector<CellIndex> pool;
  {
    // Shuffle before taking the stride: a phase-locked stride over the
    // row-major occupied list systematically skips vertical walls
    // (middle rows contribute exactly one left and one right cell, so
    // every other column keeps the same parity).
    auto occupied = grid.occupied_cells(params.occupied_threshold);
    std::shuffle(occupied.begin(), occupied.end(), rng);
    const int stride = std::max(params.subsample_stride, 1);
    for (size_t i = 0; i < occupied.size(); i += stride) pool.push_back(occupied[i]);
  }
  const double n_init = static_cast<double>(pool.size());
  std::vector<LineSegment> lines;
  if (pool.size() < 2) return lines;
  const int max_lines = 512;  // hard cap against pathological inputs

  while (static_cast<double>(pool.size()) / n_init >= params.t_final &&
         pool.size() >= 2 && static_cast<int>(lines.size()) < max_lines) {
    std::vector<uint8_t> best_mask;
    size_t best_count = 0;
    bool accepted = false;

    for (int iter = 0; iter < params.max_iterations_per_line; ++iter) {
      std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
      const size_t i = pick(rng);
      size_t j = pick(rng);
      if (i == j) continue;
      const Vec2 a = detail::cell_point(pool[i]);
      const Vec2 b = detail::cell_point(pool[j]);
      if (a == b) continue;

      std::vector<uint8_t> mask(pool.size(), 0);
      size_t count = 0;
      for (size_t k = 0; k < pool.size(); ++k) {
        if (point_line_distance(detail::cell_point(pool[k]), a, b) < params.d_line) {
          mask[k] = 1;
          ++count;
        }
      }
      if (count > best_count) {
        best_count = count;
        best_mask = std::move(mask);
      }
      if (static_cast<double>(count) / n_init > params.t_perc) {
        accepted = true;
        break;
      }
    }
    if (best_count < 2) break;  // nothing line-like left
    (void)accepted;             // cap hit keeps the best candidate so far

    std::vector<CellIndex> members;
    for (size_t k = 0; k < pool.size(); ++k) {
      if (best_mask[k]) members.push_back(pool[k]);
    }
    // The line is refit to the accepted members and membership is
    // recomputed once against that line. The segment keeps the line used
    // for the membership test, so every member provably lies within
    // d_line of the segment's own line.
    LineSegment seg = detail::make_segment(std::move(members));
    if (seg.p1 == seg.p2) break;  // degenerate: all members coincide
    std::vector<CellIndex> refined;
    std::vector<CellIndex> remaining;
    for (CellIndex p : pool) {
      if (point_line_distance(detail::cell_point(p), seg.p1, seg.p2) < params.d_line) {
        refined.push_back(p);
      } else {
        remaining.push_back(p);
      }
    }
    pool = std::move(remaining);
    seg.members = std::move(refined);
    seg.reliability = line_reliability(grid, seg);
    lines.push_back(std::move(seg));
  }
  return lines;
}

/// Splits lines whose members span multiple obstacle surfaces: members
/// are sorted by distance to the first endpoint and the line is cut at
/// every gap larger than d_s.
inline std::vector<LineSegment> breakdown_lines(const std::vector<LineSegment>& lines,
                                                const RansacParams& params) {
  std::vector<LineSegment> out;
  for (const LineSegment& line : lines) {
    if (line.members.size() < 2) {
      out.push_back(line);
      continue;
    }
    std::vector<std::pair<double, CellIndex>> by_dist;
    by_dist.reserve(line.members.size());
    for (CellIndex m : line.members) {
      by_dist.emplace_back(distance(detail::cell_point(m), line.p1), m);
    }
    std::sort(by_dist.begin(), by_dist.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<CellIndex> fragment{by_dist.front().second};
    for (size_t k = 1; k < by_dist.size(); ++k) {
      if (by_dist[k].first - by_dist[k - 1].first > params.d_s) {
        out.push_back(detail::make_segment(std::move(fragment)));
        out.back().reliability = line.reliability;
        fragment.clear();
      }
      fragment.push_back(by_dist[k].second);
    }
    out.push_back(detail::make_segment(std::move(fragment)));
    out.back().reliability = line.reliability;
  }
  return out;
}

/// Merges near-duplicate collinear segments to fixpoint: a pair merges
/// when the gradients agree within t_theta (modulo 180) and the second
/// segment's nearest endpoint lies within t_j of the first segment.
inline std::vector<LineSegment> merge_lines(std::vector<LineSegment> lines,
                                            const RansacParams& params) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < lines.size() && !changed; ++i) {
      for (size_t j = i + 1; j < lines.size() && !changed; ++j) {
        if (detail::angle_diff_mod180(lines[i].theta_deg, lines[j].theta_deg) >=
            params.t_theta) {
          continue;
        }
        const double gap =
            std::min(point_segment_distance(lines[j].p1, lines[i].p1, lines[i].p2),
                     point_segment_distance(lines[j].p2, lines[i].p1, lines[i].p2));
        if (gap >= params.t_j) continue;

        std::vector<CellIndex> members = lines[i].members;
        members.insert(members.end(), lines[j].members.begin(),
                       lines[j].members.end());
        const double rel =
            (lines[i].reliability * lines[i].members.size() +
             lines[j].reliability * lines[j].members.size()) /
            std::max<size_t>(members.size(), 1);
        lines[i] = detail::make_segment(std::move(members));
        lines[i].reliability = rel;
        lines.erase(lines.begin() + j);
        changed = true;
      }
    }
  }
  return lines;
}

/// Keeps segments longer than t_len whose reliability (recomputed
/// against the grid) reaches l_rel_min.
inline std::vector<LineSegment> filter_lines(const OccupancyGrid& grid,
                                             const std::vector<LineSegment>& lines,
                                             const RansacParams& params) {
  std::vector<LineSegment> out;
  for (LineSegment line : lines) {
    line.reliability = line_reliability(grid, line);
    if (line.length > params.t_len && line.reliability >= params.l_rel_min) {
      out.push_back(std::move(line));
    }
  }
  return out;
}

/// Full extraction pipeline: RANSAC, breakdown, merge, filter.
inline std::vector<LineSegment> extract_obstacle_lines(const OccupancyGrid& grid,
                                                       const RansacParams& params) {
  auto lines = ransac_extract(grid, params);
  lines = breakdown_lines(lines, params);
  lines = merge_lines(std::move(lines), params);
  return filter_lines(grid, lines, params);
}

}  // namespace mapmerge

#endif  // MAPMERGE_LINES_HPP_

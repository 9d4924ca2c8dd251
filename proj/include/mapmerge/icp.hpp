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

#ifndef MAPMERGE_ICP_HPP_
#define MAPMERGE_ICP_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mapmerge/geometry.hpp"
#include "mapmerge/pipeline.hpp"

namespace mapmerge {

struct IcpParams {
  int max_iterations = 100;
  double convergence_eps = 1e-3;            ///< change in mean correspondence distance, cells
  double max_correspondence_distance = 20;  ///< cells
  double overlap_margin = 10;               ///< cells, AABB expansion
};

struct IcpResult {
  double dx = 0.0;          ///< cells, intermediate frame
  double dy = 0.0;
  double dtheta_deg = 0.0;
  int iterations_used = 0;
  double final_mse = 0.0;   ///< mean-square correspondence distance, cells^2
};

struct OverlapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorrespondenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform-bucket spatial hash for nearest-neighbor queries with a
/// distance cap. Read-only after construction.
class SpatialHash {
 public:
  SpatialHash(const std::vector<Vec2>& points, double cell_size)
      : points_(points), cell_size_(std::max(cell_size, 1e-6)) {
    buckets_.reserve(points.size());
    for (size_t i = 0; i < points_.size(); ++i) {
      buckets_[key(points_[i])].push_back(i);
    }
  }

  /// Index of the nearest point within max_dist, or nullopt.
  std::optional<size_t> nearest(Vec2 q, double max_dist) const {
    const int reach = static_cast<int>(std::ceil(max_dist / cell_size_));
    const int qc = coord(q.x);
    const int qr = coord(q.y);
    double best = max_dist * max_dist;
    std::optional<size_t> best_idx;
    for (int dr = -reach; dr <= reach; ++dr) {
      for (int dc = -reach; dc <= reach; ++dc) {
        auto it = buckets_.find(pack(qc + dc, qr + dr));
        if (it == buckets_.end()) continue;
        for (size_t i : it->second) {
          const Vec2 d = points_[i] - q;
          const double d2 = dot(d, d);
          if (d2 <= best) {
            best = d2;
            best_idx = i;
          }
        }
      }
    }
    return best_idx;
  }

  const Vec2& point(size_t i) const { return points_[i]; }

 private:
  int coord(double v) const { return static_cast<int>(std::floor(v / cell_size_)); }
  static int64_t pack(int c, int r) {
    return (static_cast<int64_t>(c) << 32) ^ static_cast<uint32_t>(r);
  }
  int64_t key(Vec2 p) const { return pack(coord(p.x), coord(p.y)); }

  std::vector<Vec2> points_;
  double cell_size_;
  std::unordered_map<int64_t, std::vector<size_t>> buckets_;
};

namespace detail {

struct Aabb {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void expand(Vec2 p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  bool contains(Vec2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

inline Aabb bounding_box(const std::vector<Vec2>& pts) {
  Aabb box;
  for (Vec2 p : pts) box.expand(p);
  return box;
}

}  // namespace detail

/// Restricts both pre-aligned point sets to the intersection of their
/// axis-aligned bounding boxes, expanded by `margin` cells. Throws
/// OverlapError when the boxes are disjoint.
inline std::pair<std::vector<Vec2>, std::vector<Vec2>> select_overlap(
    const std::vector<Vec2>& set_a, const std::vector<Vec2>& set_b, double margin) {
  const auto box_a = detail::bounding_box(set_a);
  const auto box_b = detail::bounding_box(set_b);
  detail::Aabb common;
  common.min_x = std::max(box_a.min_x, box_b.min_x) - margin;
  common.min_y = std::max(box_a.min_y, box_b.min_y) - margin;
  common.max_x = std::min(box_a.max_x, box_b.max_x) + margin;
  common.max_y = std::min(box_a.max_y, box_b.max_y) + margin;
  if (common.min_x > common.max_x || common.min_y > common.max_y) {
    throw OverlapError("select_overlap: bounding boxes are disjoint");
  }
  std::pair<std::vector<Vec2>, std::vector<Vec2>> out;
  for (Vec2 p : set_a) {
    if (common.contains(p)) out.first.push_back(p);
  }
  for (Vec2 p : set_b) {
    if (common.contains(p)) out.second.push_back(p);
  }
  if (out.first.empty() || out.second.empty()) {
    throw OverlapError("select_overlap: empty overlap subset");
  }
  return out;
}

/// Mean-square nearest-neighbor distance from `from` onto `onto`,
/// counting only pairs within `cap` (uncapped when cap <= 0).
inline double mean_square_nn_error(const std::vector<Vec2>& from,
                                   const SpatialHash& onto, double cap) {
  double sum = 0.0;
  size_t n = 0;
  for (Vec2 p : from) {
    const double limit = cap > 0 ? cap : 1e9;
    if (auto idx = onto.nearest(p, limit)) {
      const Vec2 d = onto.point(*idx) - p;
      sum += dot(d, d);
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::infinity() : sum / n;
}

/// Point-to-point ICP between two pre-aligned sets: 1-NN correspondence
/// with a distance cap, closed-form least-squares rigid estimate on
/// centered correspondences per iteration. The result follows the
/// intermediate-frame convention: the aligned source point is
/// R(dtheta) * (p + [dx, dy]).
inline IcpResult icp(const std::vector<Vec2>& source, const std::vector<Vec2>& target,
                     const IcpParams& params = {},
                     std::vector<double>* mse_per_iteration = nullptr) {
  if (source.empty() || target.empty()) {
    throw std::invalid_argument("icp: empty point set");
  }
  const SpatialHash index(target, params.max_correspondence_distance);

  std::vector<Vec2> current = source;
  double total_theta = 0.0;  // radians
  Vec2 total_t;              // such that current = R(total_theta) * p + total_t
  double prev_mean = std::numeric_limits<double>::infinity();
  IcpResult result;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    std::vector<std::pair<Vec2, Vec2>> pairs;
    pairs.reserve(current.size());
    for (Vec2 p : current) {
      if (auto idx = index.nearest(p, params.max_correspondence_distance)) {
        pairs.emplace_back(p, index.point(*idx));
      }
    }
    if (pairs.empty()) {
      throw CorrespondenceError("icp: no correspondences within the distance cap");
    }

    double err = 0.0;
    Vec2 ca, cb;
    for (const auto& [a, b] : pairs) {
      const Vec2 d = b - a;
      err += dot(d, d);
      ca = ca + a;
      cb = cb + b;
    }
    const double inv_n = 1.0 / static_cast<double>(pairs.size());
    err *= inv_n;
    ca = inv_n * ca;
    cb = inv_n * cb;
    if (mse_per_iteration) mse_per_iteration->push_back(err);
    result.iterations_used = iter + 1;
    result.final_mse = err;

    const double mean_dist = std::sqrt(err);
    if (mean_dist < params.convergence_eps) break;
    if (std::abs(prev_mean - mean_dist) < params.convergence_eps) break;
    prev_mean = mean_dist;

    // Closed-form 2-D rigid alignment on centered correspondences.
    double s_cross = 0.0, s_dot = 0.0;
    for (const auto& [a, b] : pairs) {
      const Vec2 ap = a - ca;
      const Vec2 bp = b - cb;
      s_cross += cross(ap, bp);
      s_dot += dot(ap, bp);
    }
    const double dtheta = std::atan2(s_cross, s_dot);
    const Vec2 dt = cb - rotate(ca, dtheta);

    for (Vec2& p : current) p = rotate(p, dtheta) + dt;
    total_theta += dtheta;
    total_t = rotate(total_t, dtheta) + dt;
  }

  result.dtheta_deg = rad_to_deg(normalize_rad(total_theta));
  // Convert b = R p + t into the b = R (p + t') convention.
  const Vec2 t_pre = rotate(total_t, -total_theta);
  result.dx = t_pre.x;
  result.dy = t_pre.y;
  return result;
}

/// Composes the stage-2 solution with the ICP correction. With a zero
/// correction this reduces exactly to the stage-2 transform.
inline MergeSolution compose_final(const MergeSolution& stage2, const IcpResult& icp) {
  MergeSolution s = stage2;
  s.stage = MergeStage::icp_refined;
  s.icp = IcpCorrection{icp.dx, icp.dy, icp.dtheta_deg};
  return s;
}

}  // namespace mapmerge

#endif  // MAPMERGE_ICP_HPP_

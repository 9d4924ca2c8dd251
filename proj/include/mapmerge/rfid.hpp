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

#ifndef MAPMERGE_RFID_HPP_
#define MAPMERGE_RFID_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mapmerge/geometry.hpp"

namespace mapmerge {

/// One noisy range-only reading of a tag from a known robot pose.
struct TagReading {
  int tag_id = 0;
  Vec2 robot_pose;      ///< meters, map frame
  double distance = 0;  ///< meters, noisy
  int iteration = 0;
};

struct RfidParams {
  double antenna_range = 3.0;  ///< meters; readings beyond are rejected
  double sigma_r = 0.05;       ///< ring thickness (meters), matches range noise
  int field_size = 300;        ///< N = M cells of the likelihood window
  double resolution = 0.02;    ///< meters per cell
};

/// MAP pose of a tag plus the sub-sampled localization probability.
struct TagEstimate {
  int tag_id = 0;
  CellIndex map_pose;      ///< argmax cell of the fine field, map frame
  double probability = 0;  ///< in [0, 1], from the coarse field
  int update_count = 0;
};

/// Per-tag 2-D likelihood field over a square window of the map,
/// anchored at the robot pose of the first detection. Values are kept
/// normalized to sum 1 after every update.
class ProbabilityField {
 public:
  ProbabilityField(int tag_id, Vec2 window_center_m, const RfidParams& params)
      : tag_id_(tag_id), params_(params),
        values_(static_cast<size_t>(params.field_size) * params.field_size, 0.0) {
    // Window origin in meters: the field covers a square centered at the
    // first robot pose.
    const double half = 0.5 * params.field_size * params.resolution;
    origin_ = {window_center_m.x - half, window_center_m.y - half};
    const double uniform = 1.0 / static_cast<double>(values_.size());
    for (double& v : values_) v = uniform;
  }

  int tag_id() const { return tag_id_; }
  int size() const { return params_.field_size; }
  int update_count() const { return update_count_; }
  Vec2 origin_m() const { return origin_; }
  const RfidParams& params() const { return params_; }

  double at(int col, int row) const {
    return values_[static_cast<size_t>(row) * params_.field_size + col];
  }

  /// Center of a field cell, in meters (map frame).
  Vec2 cell_center_m(int col, int row) const {
    return {origin_.x + (col + 0.5) * params_.resolution,
            origin_.y + (row + 0.5) * params_.resolution};
  }

  /// Field cell index of a map-frame point.
  CellIndex to_field_cell(Vec2 p_m) const {
    return to_cell({(p_m.x - origin_.x) / params_.resolution,
                    (p_m.y - origin_.y) / params_.resolution});
  }

  double sum() const {
    double s = 0;
    for (double v : values_) s += v;
    return s;
  }

  friend ProbabilityField ring_likelihood(const ProbabilityField& like,
                                          Vec2 robot_pose_m, double distance_m);
  friend ProbabilityField bayes_update(const ProbabilityField& field,
                                       const TagReading& reading);

 private:
  void normalize() {
    const double s = sum();
    if (s <= 0.0) throw std::runtime_error("ProbabilityField: zero mass");
    for (double& v : values_) v /= s;
  }

  int tag_id_;
  RfidParams params_;
  Vec2 origin_;  ///< meters, map frame, lower-left corner of the window
  std::vector<double> values_;
  int update_count_ = 0;
};

/// Gaussian annulus: maximum on the circle of radius `distance_m`
/// around the robot, decreasing smoothly away from it. Normalized to
/// sum 1. Shares frame and shape with the given field.
inline ProbabilityField ring_likelihood(const ProbabilityField& like,
                                        Vec2 robot_pose_m, double distance_m) {
  if (distance_m <= 0.0) {
    throw std::invalid_argument("ring_likelihood: non-positive distance");
  }
  if (distance_m > like.params_.antenna_range) {
    throw std::invalid_argument("ring_likelihood: reading beyond antenna range");
  }
  ProbabilityField out = like;
  out.update_count_ = 0;
  const double inv_two_sigma2 =
      1.0 / (2.0 * like.params_.sigma_r * like.params_.sigma_r);
  const int n = like.params_.field_size;
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const double r = distance(out.cell_center_m(col, row), robot_pose_m);
      const double d = r - distance_m;
      out.values_[static_cast<size_t>(row) * n + col] =
          std::exp(-d * d * inv_two_sigma2);
    }
  }
  out.normalize();
  return out;
}

/// One Bayes-filter step: pointwise product of the prior field with the
/// reading's ring likelihood, renormalized. A disjoint product (all
/// zeros, e.g. from an outlier reading) resets the field to the new
/// ring instead of failing.
inline ProbabilityField bayes_update(const ProbabilityField& field,
                                     const TagReading& reading) {
  const ProbabilityField ring =
      ring_likelihood(field, reading.robot_pose, reading.distance);
  ProbabilityField out = field;
  double s = 0;
  for (size_t i = 0; i < out.values_.size(); ++i) {
    out.values_[i] *= ring.values_[i];
    s += out.values_[i];
  }
  if (s <= 0.0 || !std::isfinite(s)) {
    // Disjoint rings: recover with the latest evidence only.
    out.values_ = ring.values_;
  } else {
    for (double& v : out.values_) v /= s;
  }
  out.update_count_ = field.update_count() + 1;
  return out;
}

/// Extracts the MAP cell and the sub-sampled localization probability.
/// The coarse field averages 3x3 blocks; the reported probability is
/// the coarse maximum over the coarse sum. The MAP pose is the argmax
/// of the fine field (ties broken by lowest row, then lowest column),
/// reported in map-frame cells.
inline TagEstimate extract_estimate(const ProbabilityField& field) {
  const int n = field.size();
  const int k = 3;
  const int coarse_n = n / k;

  // Fine argmax, lexicographic tie-break.
  int best_col = 0, best_row = 0;
  double best = -1.0;
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const double v = field.at(col, row);
      if (v > best) {
        best = v;
        best_row = row;
        best_col = col;
      }
    }
  }

  double coarse_max = 0.0, coarse_sum = 0.0;
  for (int cr = 0; cr < coarse_n; ++cr) {
    for (int cc = 0; cc < coarse_n; ++cc) {
      double block = 0.0;
      for (int dr = 0; dr < k; ++dr) {
        for (int dc = 0; dc < k; ++dc) {
          block += field.at(cc * k + dc, cr * k + dr);
        }
      }
      const double mean = block / (k * k);
      coarse_sum += mean;
      coarse_max = std::max(coarse_max, mean);
    }
  }

  TagEstimate est;
  est.tag_id = field.tag_id();
  est.probability = coarse_sum > 0.0 ? coarse_max / coarse_sum : 0.0;
  est.update_count = field.update_count();
  const Vec2 map_pt = field.cell_center_m(best_col, best_row);
  est.map_pose = to_cell({map_pt.x / field.params().resolution,
                          map_pt.y / field.params().resolution});
  return est;
}

}  // namespace mapmerge

#endif  // MAPMERGE_RFID_HPP_

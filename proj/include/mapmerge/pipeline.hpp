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

#ifndef MAPMERGE_PIPELINE_HPP_
#define MAPMERGE_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mapmerge/geometry.hpp"
#include "mapmerge/ogm_vector.hpp"
#include "mapmerge/rfid.hpp"

namespace mapmerge {

inline constexpr double kTagMinProbability = 0.75;
inline constexpr double kAnchorMinProbability = 0.90;

struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One common tag seen by both robots.
struct TagPair {
  TagEstimate in_map1;
  TagEstimate in_map2;
  double min_probability() const {
    return std::min(in_map1.probability, in_map2.probability);
  }
};

/// The three best common tags, sorted descending by pairwise minimum
/// localization probability; pairs[0] is the anchor pair (j = 1).
struct CommonTagSet {
  std::array<TagPair, 3> pairs;

  Vec2 pose1(int j) const {  // map-1 pose of sorting index j in {1,2,3}
    const CellIndex c = pairs[j - 1].in_map1.map_pose;
    return {static_cast<double>(c.col), static_cast<double>(c.row)};
  }
  Vec2 pose2(int j) const {
    const CellIndex c = pairs[j - 1].in_map2.map_pose;
    return {static_cast<double>(c.col), static_cast<double>(c.row)};
  }
};

/// Intersects the two tag lists, applies the 75% / 90% gates and sorts
/// by pairwise minimum probability (ties by ascending tag id). Returns
/// nullopt while the maps are not ready to merge.
inline std::optional<CommonTagSet> gate_and_sort(
    const std::vector<TagEstimate>& tags_robot1,
    const std::vector<TagEstimate>& tags_robot2) {
  std::map<int, TagEstimate> by_id;
  for (const TagEstimate& t : tags_robot1) by_id[t.tag_id] = t;

  std::vector<TagPair> candidates;
  for (const TagEstimate& t2 : tags_robot2) {
    auto it = by_id.find(t2.tag_id);
    if (it == by_id.end()) continue;
    TagPair pair{it->second, t2};
    if (pair.in_map1.probability >= kTagMinProbability &&
        pair.in_map2.probability >= kTagMinProbability) {
      candidates.push_back(pair);
    }
  }
  if (candidates.size() < 3) return std::nullopt;

  std::sort(candidates.begin(), candidates.end(),
            [](const TagPair& a, const TagPair& b) {
              if (a.min_probability() != b.min_probability()) {
                return a.min_probability() > b.min_probability();
              }
              return a.in_map1.tag_id < b.in_map1.tag_id;
            });
  if (candidates[0].min_probability() < kAnchorMinProbability) return std::nullopt;
  return CommonTagSet{{candidates[0], candidates[1], candidates[2]}};
}

/// Angle of the least reliable tag relative to the midpoint of the two
/// most reliable ones, in map i's frame. Degrees in (-180, 180].
inline double quadrant_angle(const CommonTagSet& tags, int map_index) {
  const Vec2 p1 = map_index == 1 ? tags.pose1(1) : tags.pose2(1);
  const Vec2 p2 = map_index == 1 ? tags.pose1(2) : tags.pose2(2);
  const Vec2 p3 = map_index == 1 ? tags.pose1(3) : tags.pose2(3);
  const Vec2 pc = 0.5 * (p1 + p2);
  if (distance(p3, pc) < 1e-9) {
    throw DegenerateGeometryError("quadrant_angle: third tag coincides with midpoint");
  }
  return rad_to_deg(std::atan2(p3.y - pc.y, p3.x - pc.x));
}

/// Picks the rotation quadrant from the difference of the two maps'
/// quadrant angles. The difference is normalized into [-45, 315); band
/// edges go to the lower band.
inline int select_kappa(double theta3_map1_deg, double theta3_map2_deg) {
  double t = theta3_map1_deg - theta3_map2_deg;
  t = std::fmod(t, 360.0);
  if (t < -45.0) t += 360.0;
  if (t >= 315.0) t -= 360.0;
  if (t <= 45.0) return 0;
  if (t <= 135.0) return 1;
  if (t <= 225.0) return 2;
  return 3;
}

enum class MergeStage { rfid_only, ogm_vector, icp_refined };

struct IcpCorrection {
  double dx = 0.0;  ///< cells, intermediate frame
  double dy = 0.0;
  double dtheta_deg = 0.0;
};

/// A composed map-merging solution. Maps a point from the M2 frame into
/// the M1 frame; with an ICP correction present the two-step form is
/// used (rotate about the source anchor, add the ICP translation,
/// rotate by the ICP angle, add the destination anchor).
struct MergeSolution {
  MergeStage stage = MergeStage::ogm_vector;
  double delta_theta_deg = 0.0;  ///< rotation before the ICP correction
  int kappa = 0;
  Vec2 anchor_src;  ///< p_2^1 (or the M2 tag centroid for the baseline)
  Vec2 anchor_dst;  ///< p_1^1 (or the M1 tag centroid)
  std::optional<IcpCorrection> icp;

  Vec2 apply(Vec2 p) const {
    const Vec2 q = rotate(p - anchor_src, deg_to_rad(delta_theta_deg));
    if (!icp) return q + anchor_dst;
    const Vec2 shifted{q.x + icp->dx, q.y + icp->dy};
    return rotate(shifted, deg_to_rad(icp->dtheta_deg)) + anchor_dst;
  }

  /// Closed form: a single rotation by (dtheta_icp + delta_theta) plus
  /// a constant translation. Algebraically identical to apply().
  RigidTransform2D closed_form() const {
    const double icp_theta = icp ? icp->dtheta_deg : 0.0;
    const double total_rad = deg_to_rad(icp_theta + delta_theta_deg);
    const Vec2 icp_t = icp ? Vec2{icp->dx, icp->dy} : Vec2{};
    const Vec2 constant = -1.0 * rotate(anchor_src, total_rad) +
                          rotate(icp_t, deg_to_rad(icp_theta)) + anchor_dst;
    RigidTransform2D T;
    T.theta = normalize_rad(total_rad);
    T.t = constant;
    return T;
  }

  double total_rotation_deg() const {
    return delta_theta_deg + (icp ? icp->dtheta_deg : 0.0);
  }
};

/// Stage-2 solution: rotation from the OGM vectors resolved by kappa,
/// translation pinned by the best-localized common tag pair.
inline MergeSolution pre_icp_transform(double delta_theta_ogm_deg, int kappa,
                                       const CommonTagSet& tags) {
  MergeSolution s;
  s.stage = MergeStage::ogm_vector;
  s.kappa = kappa;
  // The OGM-vector difference is only defined modulo 90; reduce it to
  // the canonical branch before applying the quadrant correction.
  s.delta_theta_deg = normalize_mod90(delta_theta_ogm_deg) + kappa * 90.0;
  s.anchor_src = tags.pose2(1);
  s.anchor_dst = tags.pose1(1);
  return s;
}

/// Method #1 baseline: rotation from the quadrant angles alone,
/// translation aligning the two tag-triplet centroids.
inline MergeSolution baseline_rfid_only(const CommonTagSet& tags) {
  const double theta3 = quadrant_angle(tags, 1) - quadrant_angle(tags, 2);
  MergeSolution s;
  s.stage = MergeStage::rfid_only;
  s.delta_theta_deg = normalize_deg(theta3);
  s.kappa = 0;
  s.anchor_src = (1.0 / 3.0) * (tags.pose2(1) + tags.pose2(2) + tags.pose2(3));
  s.anchor_dst = (1.0 / 3.0) * (tags.pose1(1) + tags.pose1(2) + tags.pose1(3));
  return s;
}

}  // namespace mapmerge

#endif  // MAPMERGE_PIPELINE_HPP_

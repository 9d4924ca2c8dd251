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

#ifndef MAPMERGE_OGM_VECTOR_HPP_
#define MAPMERGE_OGM_VECTOR_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mapmerge/lines.hpp"

namespace mapmerge {

/// Segments split into two perpendicular groups, gradients rewritten
/// (+-180 where needed) so each group shares one quadrant. The quadrant
/// frame is seeded by the first segment's gradient.
struct LineGroups {
  std::vector<LineSegment> g1, g2;
  double theta_ref_deg = 0.0;  ///< gradient of the first segment
};

/// Direction summary of a rectilinear map: theta_ogm is defined modulo
/// 90 degrees and canonicalized into [-45, 45) (hence within the
/// documented [-90, 90) range).
struct OgmVector {
  double theta_ogm_deg = 0.0;
  double group1_mean_deg = 0.0;
  double group2_mean_deg = 0.0;
  double group1_weight = 0.0;
  double group2_weight = 0.0;
  size_t group1_count = 0;
  size_t group2_count = 0;
};

/// Which weight enters the group means. The complement form mirrors the
/// literal formula the length-times-reliability form is derived from;
/// both are kept selectable for comparison.
enum class OgmWeightForm {
  length_times_reliability,            // default: long, wall-backed lines dominate
  length_times_reliability_complement  // literal (1 - L_Rel) coefficient
};

/// Canonicalizes an angle modulo 90 degrees into [-45, 45).
inline double normalize_mod90(double deg) {
  deg = std::fmod(deg, 90.0);
  if (deg < -45.0) deg += 90.0;
  if (deg >= 45.0) deg -= 90.0;
  return deg;
}

/// Assigns each segment to one of two perpendicular groups relative to
/// the first segment's gradient, rewriting gradients by +-180 so that
/// group 1 lies within +-45 of the reference and group 2 within
/// [ref+45, ref+135].
inline LineGroups classify_groups(const std::vector<LineSegment>& lines) {
  if (lines.empty()) throw std::invalid_argument("classify_groups: empty input");
  LineGroups groups;
  groups.theta_ref_deg = lines.front().theta_deg;
  groups.g1.push_back(lines.front());

  // Rewritten gradients are expressed relative to the reference so each
  // group occupies one contiguous interval ([ref-45, ref+45] for G1,
  // [ref+45, ref+135] for G2). No renormalization into (-180, 180] here:
  // folding across the +-180 wrap would corrupt the groups' linear means.
  const double ref = groups.theta_ref_deg;
  for (size_t i = 1; i < lines.size(); ++i) {
    LineSegment seg = lines[i];
    const double d = normalize_deg(seg.theta_deg - ref);
    if (d >= -45.0 && d <= 45.0) {
      seg.theta_deg = ref + d;
      groups.g1.push_back(std::move(seg));
    } else if (d >= 135.0 || d <= -135.0) {
      seg.theta_deg = ref + d + (d >= 135.0 ? -180.0 : 180.0);
      groups.g1.push_back(std::move(seg));
    } else {
      // Perpendicular group, rewritten into the [ref+45, ref+135] quadrant.
      double d2 = normalize_deg(seg.theta_deg - (ref + 90.0));
      if (d2 > 90.0) d2 -= 180.0;
      if (d2 < -90.0) d2 += 180.0;
      seg.theta_deg = ref + 90.0 + d2;
      groups.g2.push_back(std::move(seg));
    }
  }
  return groups;
}

/// Weighted mean gradient per group, combined into the OGM direction
/// vector. If one group is empty (all walls parallel) the vector is
/// derived from the other group's mean alone.
inline OgmVector ogm_vector(const LineGroups& groups,
                            OgmWeightForm form = OgmWeightForm::length_times_reliability) {
  if (groups.g1.empty() && groups.g2.empty()) {
    throw std::invalid_argument("ogm_vector: both groups empty");
  }
  auto weighted_mean = [form](const std::vector<LineSegment>& group,
                              double& total_weight) {
    double num = 0.0, den = 0.0;
    for (const LineSegment& seg : group) {
      const double rel_term = form == OgmWeightForm::length_times_reliability
                                  ? seg.reliability
                                  : 1.0 - seg.reliability;
      const double w = seg.length * rel_term;
      num += seg.theta_deg * w;
      den += w;
    }
    total_weight = den;
    if (!group.empty() && den <= 0.0) {
      throw std::runtime_error("ogm_vector: zero total weight");
    }
    return group.empty() ? 0.0 : num / den;
  };

  OgmVector v;
  v.group1_count = groups.g1.size();
  v.group2_count = groups.g2.size();
  v.group1_mean_deg = weighted_mean(groups.g1, v.group1_weight);
  v.group2_mean_deg = weighted_mean(groups.g2, v.group2_weight);

  // The two group means sit ~90 degrees apart; their midpoint lies 45
  // degrees off the dominant wall direction. Subtracting that offset
  // (equivalently, folding group 2 back by 90 before averaging) makes
  // theta_ogm the map's wall direction itself: an axis-aligned map
  // reports ~0 and a 45-degree-rotated one reports ~45 (mod 90), which
  // is the convention the reference statistics are quoted in.
  if (groups.g2.empty()) {
    v.theta_ogm_deg = normalize_mod90(v.group1_mean_deg);
  } else if (groups.g1.empty()) {
    v.theta_ogm_deg = normalize_mod90(v.group2_mean_deg);
  } else {
    v.theta_ogm_deg =
        normalize_mod90(0.5 * (v.group1_mean_deg + v.group2_mean_deg) - 45.0);
  }
  return v;
}

/// Alignment angle between two maps' direction vectors; the true map
/// rotation is this value plus kappa * 90 (resolved by the merge
/// pipeline's quadrant determination).
inline double relative_rotation(const OgmVector& v1, const OgmVector& v2) {
  return v1.theta_ogm_deg - v2.theta_ogm_deg;
}

/// Convenience: OGM vector straight from a map.
inline OgmVector compute_ogm_vector(const OccupancyGrid& grid,
                                    const RansacParams& params,
                                    OgmWeightForm form = OgmWeightForm::length_times_reliability) {
  const auto lines = extract_obstacle_lines(grid, params);
  return ogm_vector(classify_groups(lines), form);
}

}  // namespace mapmerge

#endif  // MAPMERGE_OGM_VECTOR_HPP_

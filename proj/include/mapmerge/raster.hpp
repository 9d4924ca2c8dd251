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

#ifndef MAPMERGE_RASTER_HPP_
#define MAPMERGE_RASTER_HPP_

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapmerge/grid.hpp"
#include "mapmerge/icp.hpp"
#include "mapmerge/map_io.hpp"
#include "mapmerge/metrics.hpp"
#include "mapmerge/pipeline.hpp"

namespace mapmerge {

struct MergeNotReadyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-cell fusion of two same-frame grids: a cell explored in only one
/// input keeps that value; a cell explored in both keeps the value with
/// the larger confidence |v - 0.5| (ties averaged).
inline OccupancyGrid fuse(const OccupancyGrid& dst, const OccupancyGrid& src_transformed) {
  if (dst.width() != src_transformed.width() ||
      dst.height() != src_transformed.height()) {
    throw std::invalid_argument("fuse: dimension mismatch");
  }
  OccupancyGrid out = dst;
  for (int r = 0; r < dst.height(); ++r) {
    for (int c = 0; c < dst.width(); ++c) {
      const bool e1 = dst.is_explored(c, r);
      const bool e2 = src_transformed.is_explored(c, r);
      if (e1 && e2) {
        out.set(c, r, fuse_values(dst.at(c, r), src_transformed.at(c, r)));
      } else if (e2) {
        out.set(c, r, src_transformed.at(c, r));
      }
    }
  }
  return out;
}

/// 3x3 mean blur applied only where it cannot corrupt information:
///  - explored free cells (value < occupied_threshold) are replaced by
///    the mean of their explored free neighbors (self included), so
///    occupied values never diffuse into free space;
///  - unexplored cells whose 3x3 neighborhood holds at least 6 explored
///    free cells become explored with the neighborhood's mean free
///    value (repairs the single/pair rounding gaps);
///  - occupied cells and all other unexplored cells are untouched.
/// Pass occupied_threshold > 1 to blur a coverage field, where no cell
/// is protected.
inline OccupancyGrid conditional_blur(const OccupancyGrid& grid,
                                      float occupied_threshold = 0.5f) {
  OccupancyGrid out = grid;
  const int w = grid.width();
  const int h = grid.height();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const bool explored = grid.is_explored(c, r);
      if (explored && grid.at(c, r) >= occupied_threshold) continue;  // occupied: untouched

      double sum = 0.0;
      int free_count = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nc = c + dc;
          const int nr = r + dr;
          if (nc < 0 || nc >= w || nr < 0 || nr >= h) continue;
          if (!grid.is_explored(nc, nr)) continue;
          const float v = grid.at(nc, nr);
          if (v >= occupied_threshold) continue;
          sum += v;
          ++free_count;
        }
      }
      if (explored) {
        // free_count >= 1 (the cell itself)
        out.set(c, r, static_cast<float>(sum / free_count));
      } else if (free_count >= 6) {
        out.set(c, r, static_cast<float>(sum / free_count));  // gap fill
      }
    }
  }
  return out;
}

/// Unrestricted 3x3 mean blur (every cell with at least one explored
/// neighbor is averaged over its explored neighbors). Kept to
/// demonstrate the diffusion failure mode the conditional rule
/// prevents.
inline OccupancyGrid unconditional_blur(const OccupancyGrid& grid) {
  OccupancyGrid out = grid;
  const int w = grid.width();
  const int h = grid.height();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int nc = c + dc;
          const int nr = r + dr;
          if (nc < 0 || nc >= w || nr < 0 || nr >= h) continue;
          if (!grid.is_explored(nc, nr)) continue;
          sum += grid.at(nc, nr);
          ++count;
        }
      }
      if (count > 0) out.set(c, r, static_cast<float>(sum / count));
    }
  }
  return out;
}

struct MergeOptions {
  RansacParams ransac;
  IcpParams icp;
  OgmWeightForm weight_form = OgmWeightForm::length_times_reliability;
  bool apply_blur = true;
  int canvas_margin = 2;  ///< cells around the union of the two hulls
};

struct MergeReport {
  MapBundle merged;
  MergeSolution solution;
  double mse_px2 = 0.0;  ///< chamfer MSE of the aligned occupied cells
  double elapsed_ms = 0.0;
  CellIndex canvas_origin;  ///< M1-frame cell of the merged grid's (0,0)
  std::optional<IcpResult> icp_result;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<Vec2> occupied_points(const OccupancyGrid& grid,
                                         float threshold = 0.5f) {
  std::vector<Vec2> out;
  for (CellIndex c : grid.occupied_cells(threshold)) out.push_back(cell_point(c));
  return out;
}

// Rasterizes src through the solution's closed-form transform onto an
// explicit canvas whose (0,0) sits at M1-frame cell `lo`.
inline OccupancyGrid rasterize_onto(const OccupancyGrid& src, const RigidTransform2D& T,
                                    CellIndex lo, int w, int h) {
  OccupancyGrid out(w, h, src.resolution());
  for (int r = 0; r < src.height(); ++r) {
    for (int c = 0; c < src.width(); ++c) {
      if (!src.is_explored(c, r)) continue;
      const Vec2 q = apply_transform_point(
          {static_cast<double>(c), static_cast<double>(r)}, T);
      const CellIndex cell = to_cell_snapped(q);
      const int oc = cell.col - lo.col;
      const int orow = cell.row - lo.row;
      if (oc < 0 || oc >= w || orow < 0 || orow >= h) continue;
      const float v = src.at(c, r);
      out.set(oc, orow,
              out.is_explored(oc, orow) ? fuse_values(out.at(oc, orow), v) : v);
    }
  }
  return out;
}

inline OccupancyGrid blit_onto(const OccupancyGrid& src, CellIndex lo, int w, int h) {
  OccupancyGrid out(w, h, src.resolution());
  for (int r = 0; r < src.height(); ++r) {
    for (int c = 0; c < src.width(); ++c) {
      if (!src.is_explored(c, r)) continue;
      const int oc = c - lo.col;
      const int orow = r - lo.row;
      if (oc >= 0 && oc < w && orow >= 0 && orow < h) out.set(oc, orow, src.at(c, r));
    }
  }
  return out;
}

}  // namespace detail

/// Computes the merge solution for the selected method (1 = tags only,
/// 2 = tags + OGM vectors, 3 = tags + OGM vectors + ICP). Throws
/// MergeNotReadyError when the three-common-tag gate fails.
inline MergeSolution compute_merge_solution(const MapBundle& map1, const MapBundle& map2,
                                            int method, const MergeOptions& opts,
                                            std::optional<IcpResult>* icp_out = nullptr,
                                            std::vector<std::string>* warnings = nullptr) {
  const auto tags = gate_and_sort(map1.tags, map2.tags);
  if (!tags) {
    throw MergeNotReadyError("merge gate: fewer than three sufficiently "
                             "localized common tags");
  }
  if (method == 1) return baseline_rfid_only(*tags);
  if (method != 2 && method != 3) {
    throw std::invalid_argument("merge: method must be 1, 2 or 3");
  }

  RansacParams ransac2 = opts.ransac;
  ransac2.rng_seed = opts.ransac.rng_seed + 1;  // independent draws per map
  const OgmVector v1 = compute_ogm_vector(map1.occupancy, opts.ransac, opts.weight_form);
  const OgmVector v2 = compute_ogm_vector(map2.occupancy, ransac2, opts.weight_form);
  const double delta_theta = relative_rotation(v1, v2);
  const int kappa = select_kappa(quadrant_angle(*tags, 1), quadrant_angle(*tags, 2));
  MergeSolution solution = pre_icp_transform(delta_theta, kappa, *tags);
  if (method == 2) return solution;

  // Stage 3: ICP over the overlap of the pre-aligned occupied sets, in
  // the intermediate frame (rotated about the source anchor / shifted
  // by the destination anchor).
  try {
    std::vector<Vec2> source;
    for (Vec2 p : detail::occupied_points(map2.occupancy)) {
      source.push_back(rotate(p - solution.anchor_src,
                              deg_to_rad(solution.delta_theta_deg)));
    }
    std::vector<Vec2> target;
    for (Vec2 p : detail::occupied_points(map1.occupancy)) {
      target.push_back(p - solution.anchor_dst);
    }
    auto [sub_src, sub_tgt] = select_overlap(source, target, opts.icp.overlap_margin);

    const SpatialHash tgt_index(sub_tgt, opts.icp.max_correspondence_distance);
    const double pre_mse = mean_square_nn_error(sub_src, tgt_index,
                                                opts.icp.max_correspondence_distance);
    const IcpResult result = icp(sub_src, sub_tgt, opts.icp);

    std::vector<Vec2> corrected;
    corrected.reserve(sub_src.size());
    const double dtheta_rad = deg_to_rad(result.dtheta_deg);
    for (Vec2 p : sub_src) {
      corrected.push_back(rotate({p.x + result.dx, p.y + result.dy}, dtheta_rad));
    }
    const double post_mse = mean_square_nn_error(corrected, tgt_index,
                                                 opts.icp.max_correspondence_distance);
    if (post_mse <= pre_mse) {
      solution = compose_final(solution, result);
      if (icp_out) *icp_out = result;
    } else if (warnings) {
      warnings->push_back("icp correction discarded: overlap error increased");
    }
  } catch (const OverlapError& e) {
    if (warnings) warnings->push_back(std::string("icp skipped: ") + e.what());
  } catch (const CorrespondenceError& e) {
    if (warnings) warnings->push_back(std::string("icp skipped: ") + e.what());
  }
  return solution;
}

/// Full merge: solution, raster transform of the second map into the
/// first map's frame (canvas grown to the union of both hulls plus a
/// margin), occupancy and coverage fusion, one conditional blur, and
/// the chamfer MSE report.
inline MergeReport merge_maps_end_to_end(const MapBundle& map1, const MapBundle& map2,
                                         int method, const MergeOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  MergeReport report;
  report.solution = compute_merge_solution(map1, map2, method, opts,
                                           &report.icp_result, &report.warnings);

  const RigidTransform2D T = report.solution.closed_form();
  const auto [lo2, hi2] = transformed_bounds(map2.occupancy, T);
  CellIndex lo{std::min(lo2.col, 0) - opts.canvas_margin,
               std::min(lo2.row, 0) - opts.canvas_margin};
  CellIndex hi{std::max(hi2.col, map1.occupancy.width()) + opts.canvas_margin,
               std::max(hi2.row, map1.occupancy.height()) + opts.canvas_margin};
  const int w = hi.col - lo.col;
  const int h = hi.row - lo.row;

  const OccupancyGrid m1_canvas = detail::blit_onto(map1.occupancy, lo, w, h);
  const OccupancyGrid m2_canvas = detail::rasterize_onto(map2.occupancy, T, lo, w, h);
  report.mse_px2 = chamfer_mse(m1_canvas, m2_canvas);

  OccupancyGrid merged = fuse(m1_canvas, m2_canvas);
  if (opts.apply_blur) merged = conditional_blur(merged);
  report.merged.occupancy = std::move(merged);
  report.canvas_origin = lo;

  if (map1.coverage || map2.coverage) {
    CoverageGrid cov1 = map1.coverage
                            ? detail::blit_onto(*map1.coverage, lo, w, h)
                            : CoverageGrid(w, h, map1.occupancy.resolution());
    CoverageGrid cov2 = map2.coverage
                            ? detail::rasterize_onto(*map2.coverage, T, lo, w, h)
                            : CoverageGrid(w, h, map1.occupancy.resolution());
    CoverageGrid cov = fuse(cov1, cov2);
    if (opts.apply_blur) cov = conditional_blur(cov, 2.0f);
    report.merged.coverage = std::move(cov);
  }

  // Tags carried over in the merged (M1-shifted) frame.
  for (TagEstimate t : map1.tags) {
    t.map_pose = {t.map_pose.col - lo.col, t.map_pose.row - lo.row};
    report.merged.tags.push_back(t);
  }
  for (TagEstimate t : map2.tags) {
    const Vec2 q = report.solution.apply(detail::cell_point(t.map_pose));
    const CellIndex cell = detail::to_cell_snapped(q);
    t.map_pose = {cell.col - lo.col, cell.row - lo.row};
    report.merged.tags.push_back(t);
  }
  report.merged.origin = {map1.origin.x + lo.col * map1.occupancy.resolution(),
                          map1.origin.y + lo.row * map1.occupancy.resolution()};

  report.elapsed_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  return report;
}

}  // namespace mapmerge

#endif  // MAPMERGE_RASTER_HPP_

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

#ifndef MAPMERGE_GRID_HPP_
#define MAPMERGE_GRID_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mapmerge/geometry.hpp"

namespace mapmerge {

/// Sentinel for cells never observed. Unexplored is a distinct state,
/// never conflated with any occupancy probability.
inline constexpr float kUnexplored = -1.0f;

/// 2-D grid of per-cell occupancy probabilities. Explored cells hold a
/// value in [0, 1] (0 = certainly free, 1 = certainly occupied);
/// unexplored cells hold the sentinel. Values are immutable in normal
/// use: operations return fresh grids.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution = 0.02,
                float fill = kUnexplored)
      : width_(width), height_(height), resolution_(resolution),
        cells_(static_cast<size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0 || resolution <= 0.0) {
      throw std::invalid_argument("OccupancyGrid: non-positive dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }

  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width_ && row >= 0 && row < height_;
  }
  bool in_bounds(CellIndex c) const { return in_bounds(c.col, c.row); }

  float at(int col, int row) const {
    return cells_[static_cast<size_t>(row) * width_ + col];
  }
  float at(CellIndex c) const { return at(c.col, c.row); }

  bool is_explored(int col, int row) const { return at(col, row) >= 0.0f; }
  bool is_explored(CellIndex c) const { return is_explored(c.col, c.row); }
  bool is_occupied(int col, int row, float threshold = 0.5f) const {
    const float v = at(col, row);
    return v >= threshold;
  }

  void set(int col, int row, float value) {
    cells_[static_cast<size_t>(row) * width_ + col] = value;
  }
  void set(CellIndex c, float value) { set(c.col, c.row, value); }

  /// Cell -> world conversion (cell corner, meters).
  Vec2 cell_to_world(CellIndex c, Vec2 origin = {}) const {
    return {origin.x + c.col * resolution_, origin.y + c.row * resolution_};
  }
  /// World -> cell conversion, floor rounding.
  CellIndex world_to_cell(Vec2 w, Vec2 origin = {}) const {
    return to_cell({(w.x - origin.x) / resolution_, (w.y - origin.y) / resolution_});
  }

  std::vector<CellIndex> occupied_cells(float threshold = 0.5f) const {
    std::vector<CellIndex> out;
    for (int r = 0; r < height_; ++r) {
      for (int c = 0; c < width_; ++c) {
        if (is_explored(c, r) && at(c, r) >= threshold) out.push_back({c, r});
      }
    }
    return out;
  }

  friend bool operator==(const OccupancyGrid& a, const OccupancyGrid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.resolution_ == b.resolution_ && a.cells_ == b.cells_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 0.02;
  std::vector<float> cells_;
};

/// Coverage field paired with an OccupancyGrid; same dimensions, cells
/// hold a coverage value in [0, 1] or the uncovered sentinel. The
/// representation is identical to OccupancyGrid, only the semantics of
/// the values differ.
using CoverageGrid = OccupancyGrid;

/// Combines two explored occupancy values: the value whose confidence
/// |v - 0.5| is larger wins; ties are averaged.
inline float fuse_values(float a, float b) {
  const float ca = std::abs(a - 0.5f);
  const float cb = std::abs(b - 0.5f);
  if (ca > cb) return a;
  if (cb > ca) return b;
  return 0.5f * (a + b);
}

/// Result of rasterizing a grid through a rigid transform. `origin` is
/// the destination-frame coordinate of the output grid's (0, 0) cell.
struct TransformedGrid {
  OccupancyGrid grid;
  CellIndex origin;
};

namespace detail {

// Floor with a snap-to-integer guard so that exact quarter-turn
// rotations (whose trig terms carry ~1e-16 noise) rasterize without
// spurious gaps.
inline int snapped_floor(double v) {
  const double r = std::round(v);
  if (std::abs(v - r) < 1e-9) v = r;
  return static_cast<int>(std::floor(v));
}

inline CellIndex to_cell_snapped(Vec2 p) {
  return {snapped_floor(p.x), snapped_floor(p.y)};
}

}  // namespace detail

/// Computes the destination-frame cell range holding every rasterized
/// source cell: the transformed corner cells of the lattice
/// [0, w-1] x [0, h-1], floor-rounded. Returned as {min_cell,
/// max_cell + 1} (inclusive of min, exclusive of max, in cells), so an
/// exact quarter turn maps the grid onto the returned canvas
/// bijectively.
inline std::pair<CellIndex, CellIndex> transformed_bounds(
    const OccupancyGrid& src, const RigidTransform2D& T,
    Vec2 source_anchor = {}, Vec2 dest_anchor = {}) {
  const double w = src.width() - 1;
  const double h = src.height() - 1;
  const Vec2 corners[4] = {{0, 0}, {w, 0}, {0, h}, {w, h}};
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  for (Vec2 c : corners) {
    const Vec2 q = apply_transform_point(c, T, source_anchor, dest_anchor);
    min_x = std::min(min_x, q.x);
    min_y = std::min(min_y, q.y);
    max_x = std::max(max_x, q.x);
    max_y = std::max(max_y, q.y);
  }
  const CellIndex lo = detail::to_cell_snapped({min_x, min_y});
  const CellIndex hi_cell = detail::to_cell_snapped({max_x, max_y});
  return {lo, CellIndex{hi_cell.col + 1, hi_cell.row + 1}};
}

/// Rasterizes every explored source cell through the transform with
/// floor rounding (the rounding artifacts of an arbitrary-angle
/// rotation are reproduced, not hidden: unmapped destination cells stay
/// unexplored). Collisions follow the fuse rule. The output canvas is
/// the bounding box of the transformed source canvas.
inline TransformedGrid apply_transform_grid(const OccupancyGrid& src,
                                            const RigidTransform2D& T,
                                            Vec2 source_anchor = {},
                                            Vec2 dest_anchor = {}) {
  const auto [lo, hi] = transformed_bounds(src, T, source_anchor, dest_anchor);
  const int out_w = hi.col - lo.col;
  const int out_h = hi.row - lo.row;
  OccupancyGrid out(std::max(out_w, 1), std::max(out_h, 1), src.resolution());
  for (int r = 0; r < src.height(); ++r) {
    for (int c = 0; c < src.width(); ++c) {
      if (!src.is_explored(c, r)) continue;
      const Vec2 q = apply_transform_point(
          {static_cast<double>(c), static_cast<double>(r)}, T, source_anchor,
          dest_anchor);
      const CellIndex cell = detail::to_cell_snapped(q);
      const int oc = cell.col - lo.col;
      const int orow = cell.row - lo.row;
      if (oc < 0 || oc >= out.width() || orow < 0 || orow >= out.height()) continue;
      const float v = src.at(c, r);
      if (out.is_explored(oc, orow)) {
        out.set(oc, orow, fuse_values(out.at(oc, orow), v));
      } else {
        out.set(oc, orow, v);
      }
    }
  }
  return {std::move(out), lo};
}

}  // namespace mapmerge

#endif  // MAPMERGE_GRID_HPP_

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

#ifndef MAPMERGE_METRICS_HPP_
#define MAPMERGE_METRICS_HPP_

#include <limits>
#include <stdexcept>
#include <vector>

#include "mapmerge/grid.hpp"

namespace mapmerge {

namespace detail {

// 1-D squared Euclidean distance transform (lower envelope of
// parabolas), exact.
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  d.assign(n, 0.0);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = (q - v[k]) * (q - v[k]) + f[v[k]];
  }
}

}  // namespace detail

/// Exact squared Euclidean distance (in cells^2) from every cell to the
/// nearest occupied cell of the grid. Row-major, width * height.
inline std::vector<double> squared_distance_to_occupied(const OccupancyGrid& grid,
                                                        float threshold = 0.5f) {
  const int w = grid.width();
  const int h = grid.height();
  constexpr double kInf = 1e18;
  std::vector<double> field(static_cast<size_t>(w) * h, kInf);
  bool any = false;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (grid.is_explored(c, r) && grid.at(c, r) >= threshold) {
        field[static_cast<size_t>(r) * w + c] = 0.0;
        any = true;
      }
    }
  }
  if (!any) throw std::invalid_argument("distance transform: no occupied cells");

  std::vector<double> col_in(h), col_out(h);
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) col_in[r] = field[static_cast<size_t>(r) * w + c];
    detail::edt_1d(col_in, col_out);
    for (int r = 0; r < h; ++r) field[static_cast<size_t>(r) * w + c] = col_out[r];
  }
  std::vector<double> row_in(w), row_out(w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) row_in[c] = field[static_cast<size_t>(r) * w + c];
    detail::edt_1d(row_in, row_out);
    for (int c = 0; c < w; ++c) field[static_cast<size_t>(r) * w + c] = row_out[c];
  }
  return field;
}

/// One-sided chamfer mean-square error in cells^2: mean over the
/// occupied cells of `transformed` of the squared distance to the
/// nearest occupied cell of `reference`. Both grids must share a frame
/// and dimensions. Identical maps score 0.
inline double chamfer_mse(const OccupancyGrid& reference,
                          const OccupancyGrid& transformed,
                          float threshold = 0.5f) {
  if (reference.width() != transformed.width() ||
      reference.height() != transformed.height()) {
    throw std::invalid_argument("chamfer_mse: dimension mismatch");
  }
  const auto dist2 = squared_distance_to_occupied(reference, threshold);
  double sum = 0.0;
  size_t n = 0;
  const int w = transformed.width();
  for (int r = 0; r < transformed.height(); ++r) {
    for (int c = 0; c < w; ++c) {
      if (transformed.is_explored(c, r) && transformed.at(c, r) >= threshold) {
        sum += dist2[static_cast<size_t>(r) * w + c];
        ++n;
      }
    }
  }
  if (n == 0) throw std::invalid_argument("chamfer_mse: no occupied cells in input");
  return sum / static_cast<double>(n);
}

}  // namespace mapmerge

#endif  // MAPMERGE_METRICS_HPP_

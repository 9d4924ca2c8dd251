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

#ifndef MAPMERGE_GEOMETRY_HPP_
#define MAPMERGE_GEOMETRY_HPP_

#include <cmath>
#include <numbers>
#include <optional>

namespace mapmerge {

/// 2-D point / vector in continuous coordinates (cells or meters,
/// depending on context).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

/// Integer grid cell index, (col, row).
struct CellIndex {
  int col = 0;
  int row = 0;
  friend bool operator==(CellIndex a, CellIndex b) {
    return a.col == b.col && a.row == b.row;
  }
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Normalizes an angle in degrees into (-180, 180].
inline double normalize_deg(double deg) {
  deg = std::fmod(deg, 360.0);
  if (deg <= -180.0) deg += 360.0;
  if (deg > 180.0) deg -= 360.0;
  return deg;
}

/// Normalizes an angle in radians into (-pi, pi].
inline double normalize_rad(double rad) {
  rad = std::fmod(rad, 2.0 * std::numbers::pi);
  if (rad <= -std::numbers::pi) rad += 2.0 * std::numbers::pi;
  if (rad > std::numbers::pi) rad -= 2.0 * std::numbers::pi;
  return rad;
}

/// Uniform floor-rounding from continuous coordinates to a cell. Every
/// module that rasterizes a point must go through this function.
inline CellIndex to_cell(Vec2 p) {
  return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))};
}

inline Vec2 rotate(Vec2 p, double theta_rad) {
  const double c = std::cos(theta_rad);
  const double s = std::sin(theta_rad);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Rigid 2-D transform: rotation by theta plus a translation, applied
/// about an optional pivot. Angles are stored in radians, normalized to
/// (-pi, pi].
struct RigidTransform2D {
  double theta = 0.0;                ///< radians, normalized to (-pi, pi]
  Vec2 t;                            ///< translation, in cells
  std::optional<Vec2> pivot;         ///< rotation center, in cells

  static RigidTransform2D identity() { return {}; }

  static RigidTransform2D from_degrees(double theta_deg, Vec2 translation = {},
                                       std::optional<Vec2> pivot = std::nullopt) {
    return {normalize_rad(deg_to_rad(theta_deg)), translation, pivot};
  }

  bool is_identity() const {
    return theta == 0.0 && t.x == 0.0 && t.y == 0.0;
  }
};

/// Maps a point from the source frame into the destination frame:
///   R(theta) * (p - source_anchor) + dest_anchor + t
/// No rounding is performed; rasterization is the caller's concern.
inline Vec2 apply_transform_point(Vec2 p, const RigidTransform2D& T,
                                  Vec2 source_anchor = {}, Vec2 dest_anchor = {}) {
  Vec2 anchor_src = T.pivot.value_or(source_anchor);
  Vec2 anchor_dst = T.pivot.value_or(dest_anchor);
  if (T.is_identity() && anchor_src == anchor_dst) {
    return p;  // bitwise no-op on exact inputs
  }
  return rotate(p - anchor_src, T.theta) + anchor_dst + T.t;
}

}  // namespace mapmerge

#endif  // MAPMERGE_GEOMETRY_HPP_

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

#ifndef MAPMERGE_MAP_IO_HPP_
#define MAPMERGE_MAP_IO_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapmerge/grid.hpp"
#include "mapmerge/rfid.hpp"

namespace mapmerge {

struct MapIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A map on disk: 8-bit binary PGM raster (0 = occupied, 255 = free,
/// 127 = unexplored) plus a JSON sidecar carrying resolution, origin and
/// the tag list. Coverage, when present, is a second PGM.
struct MapBundle {
  OccupancyGrid occupancy;
  std::optional<CoverageGrid> coverage;
  Vec2 origin;  ///< meters, world position of cell (0, 0)
  std::vector<TagEstimate> tags;
};

namespace detail {

inline uint8_t encode_cell(float v) {
  if (v < 0.0f) return 127;  // unexplored
  int g = static_cast<int>(std::lround((1.0 - static_cast<double>(v)) * 255.0));
  g = std::clamp(g, 0, 255);
  if (g == 127) g = 126;  // 127 is reserved for the unexplored sentinel
  return static_cast<uint8_t>(g);
}

inline float decode_cell(uint8_t g) {
  if (g == 127) return kUnexplored;
  return 1.0f - static_cast<float>(g) / 255.0f;
}

inline void write_pgm(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MapIoError("cannot open for writing: " + path);
  out << "P5\n" << grid.width() << " " << grid.height() << "\n255\n";
  std::vector<uint8_t> row(grid.width());
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) row[c] = encode_cell(grid.at(c, r));
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!out) throw MapIoError("write failed: " + path);
}

inline int next_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comments between header tokens.
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string dummy;
      std::getline(in, dummy);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  if (!in) throw MapIoError("malformed PGM header");
  return value;
}

inline OccupancyGrid read_pgm(const std::string& path, double resolution) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MapIoError("missing file: " + path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5") throw MapIoError("malformed header (not P5): " + path);
  const int w = next_pgm_token(in);
  const int h = next_pgm_token(in);
  const int maxval = next_pgm_token(in);
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw MapIoError("malformed header (bad dimensions or maxval): " + path);
  }
  in.get();  // single whitespace after maxval
  OccupancyGrid grid(w, h, resolution);
  std::vector<uint8_t> row(w);
  for (int r = 0; r < h; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!in) throw MapIoError("truncated raster data: " + path);
    for (int c = 0; c < w; ++c) grid.set(c, r, decode_cell(row[c]));
  }
  return grid;
}

}  // namespace detail

inline void save_map(const MapBundle& bundle, const std::string& base_path) {
  detail::write_pgm(bundle.occupancy, base_path + ".pgm");
  if (bundle.coverage) detail::write_pgm(*bundle.coverage, base_path + ".cov.pgm");

  nlohmann::json meta;
  meta["resolution"] = bundle.occupancy.resolution();
  meta["width"] = bundle.occupancy.width();
  meta["height"] = bundle.occupancy.height();
  meta["origin"] = {bundle.origin.x, bundle.origin.y};
  meta["has_coverage"] = bundle.coverage.has_value();
  auto& tags = meta["tags"] = nlohmann::json::array();
  for (const TagEstimate& t : bundle.tags) {
    tags.push_back({{"id", t.tag_id},
                    {"col", t.map_pose.col},
                    {"row", t.map_pose.row},
                    {"probability", t.probability},
                    {"update_count", t.update_count}});
  }
  std::ofstream out(base_path + ".json");
  if (!out) throw MapIoError("cannot open for writing: " + base_path + ".json");
  out << meta.dump(2) << "\n";
}

inline MapBundle load_map(const std::string& base_path) {
  std::ifstream in(base_path + ".json");
  if (!in) throw MapIoError("missing metadata file: " + base_path + ".json");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw MapIoError(std::string("malformed metadata: ") + e.what());
  }

  MapBundle bundle;
  const double resolution = meta.at("resolution").get<double>();
  bundle.occupancy = detail::read_pgm(base_path + ".pgm", resolution);
  if (bundle.occupancy.width() != meta.at("width").get<int>() ||
      bundle.occupancy.height() != meta.at("height").get<int>()) {
    throw MapIoError("dimension mismatch between grid and metadata: " + base_path);
  }
  if (meta.value("has_coverage", false)) {
    bundle.coverage = detail::read_pgm(base_path + ".cov.pgm", resolution);
    if (bundle.coverage->width() != bundle.occupancy.width() ||
        bundle.coverage->height() != bundle.occupancy.height()) {
      throw MapIoError("coverage/occupancy dimension mismatch: " + base_path);
    }
  }
  const auto& origin = meta.at("origin");
  bundle.origin = {origin.at(0).get<double>(), origin.at(1).get<double>()};
  for (const auto& t : meta.at("tags")) {
    TagEstimate est;
    est.tag_id = t.at("id").get<int>();
    est.map_pose = {t.at("col").get<int>(), t.at("row").get<int>()};
    est.probability = t.at("probability").get<double>();
    est.update_count = t.value("update_count", 0);
    bundle.tags.push_back(est);
  }
  return bundle;
}

}  // namespace mapmerge

#endif  // MAPMERGE_MAP_IO_HPP_

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

#ifndef MAPMERGE_SIM_HPP_
#define MAPMERGE_SIM_HPP_

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "mapmerge/raster.hpp"
#include "mapmerge/rfid.hpp"

namespace mapmerge {

/// Axis-aligned wall rectangle (outline), in cells, before the world's
/// global rotation.
struct WallRect {
  double x = 0, y = 0;  ///< lower-left corner
  double w = 0, h = 0;
};

struct TagPlacement {
  int id = 0;
  Vec2 position_m;  ///< meters, pre-rotation layout frame
};

struct WorldSpec {
  int width = 700;
  int height = 600;
  double resolution = 0.02;     ///< meters per cell
  double wall_thickness = 2.0;  ///< cells
  double global_rotation_deg = 0.0;  ///< about the world center
  std::vector<WallRect> walls;
  std::vector<TagPlacement> tags;
};

struct World {
  OccupancyGrid grid;  ///< ground truth: free 0, walls 1, fully explored
  std::vector<TagPlacement> tags;  ///< world frame (rotation applied), meters
  WorldSpec spec;
};

/// Rasterizes the wall layout (optionally globally rotated) into a
/// fully explored ground-truth grid; tag positions are rotated along
/// with the walls. Deterministic.
inline World generate_world(const WorldSpec& spec) {
  World world{OccupancyGrid(spec.width, spec.height, spec.resolution, 0.0f), {}, spec};
  const Vec2 center{0.5 * spec.width, 0.5 * spec.height};
  const double rot = deg_to_rad(spec.global_rotation_deg);

  std::vector<std::pair<Vec2, Vec2>> edges;
  for (const WallRect& wall : spec.walls) {
    if (wall.w <= 0 && wall.h <= 0) {
      throw std::invalid_argument("generate_world: degenerate wall");
    }
    const Vec2 corners[4] = {{wall.x, wall.y},
                             {wall.x + wall.w, wall.y},
                             {wall.x + wall.w, wall.y + wall.h},
                             {wall.x, wall.y + wall.h}};
    for (int i = 0; i < 4; ++i) {
      Vec2 a = rotate(corners[i] - center, rot) + center;
      Vec2 b = rotate(corners[(i + 1) % 4] - center, rot) + center;
      edges.emplace_back(a, b);
    }
  }

  const double half_t = 0.5 * spec.wall_thickness;
  for (const auto& [a, b] : edges) {
    // Only cells near the edge's bounding box need testing.
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half_t - 1)));
    const int c1 = std::min(spec.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half_t + 1)));
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half_t - 1)));
    const int r1 = std::min(spec.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half_t + 1)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const Vec2 p{static_cast<double>(c), static_cast<double>(r)};
        if (point_segment_distance(p, a, b) <= half_t) world.grid.set(c, r, 1.0f);
      }
    }
  }

  for (TagPlacement tag : spec.tags) {
    const Vec2 cell_pos{tag.position_m.x / spec.resolution,
                        tag.position_m.y / spec.resolution};
    const Vec2 rotated = rotate(cell_pos - center, rot) + center;
    tag.position_m = {rotated.x * spec.resolution, rotated.y * spec.resolution};
    world.tags.push_back(tag);
  }
  return world;
}

/// One robot's exploration pass: a waypoint trajectory in the world
/// frame plus the (unknown, under test) rigid offset of its private map
/// frame. Noise and range follow the sensor assumptions.
struct RobotRun {
  std::vector<Vec2> waypoints;      ///< cells, world frame
  Vec2 frame_offset;                ///< cells: world anchor of the robot frame
  double frame_rotation_deg = 0.0;  ///< world -> robot rotation
  double sensing_radius_m = 6.0;    ///< mapping visibility disc
  double antenna_range_m = 3.0;
  double noise_sigma_m = 0.05;
  int iterations = 300;
  uint64_t seed = 0;
};

struct RobotRunResult {
  OccupancyGrid local_map;          ///< robot frame, origin-shifted to (0,0)
  CellIndex frame_shift;            ///< shift applied after the frame transform
  std::vector<TagReading> readings; ///< robot-frame poses (meters)
  std::vector<Vec2> true_tag_cells; ///< robot-frame tag truth, per world tag
  std::vector<bool> tag_in_range;   ///< ever within antenna range
  RobotRun run;
};

namespace detail {

inline double polyline_distance(Vec2 p, const std::vector<Vec2>& waypoints) {
  if (waypoints.size() == 1) return distance(p, waypoints.front());
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < waypoints.size(); ++i) {
    best = std::min(best, point_segment_distance(p, waypoints[i], waypoints[i + 1]));
  }
  return best;
}

inline std::vector<Vec2> sample_polyline(const std::vector<Vec2>& waypoints, int n) {
  std::vector<Vec2> out;
  if (waypoints.size() == 1) {
    out.assign(n, waypoints.front());
    return out;
  }
  double total = 0;
  for (size_t i = 0; i + 1 < waypoints.size(); ++i) {
    total += distance(waypoints[i], waypoints[i + 1]);
  }
  for (int k = 0; k < n; ++k) {
    double target = total * k / std::max(n - 1, 1);
    Vec2 p = waypoints.back();
    for (size_t i = 0; i + 1 < waypoints.size(); ++i) {
      const double seg = distance(waypoints[i], waypoints[i + 1]);
      if (target <= seg || i + 2 == waypoints.size()) {
        const double u = seg > 0 ? std::clamp(target / seg, 0.0, 1.0) : 0.0;
        p = waypoints[i] + u * (waypoints[i + 1] - waypoints[i]);
        break;
      }
      target -= seg;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace detail

/// Transform from the world frame into the robot's shifted map frame,
/// in cells.
inline Vec2 world_to_robot_cells(Vec2 p_world_cells, const RobotRun& run,
                                 CellIndex shift) {
  const Vec2 q = rotate(p_world_cells - run.frame_offset,
                        deg_to_rad(run.frame_rotation_deg));
  return {q.x - shift.col, q.y - shift.row};
}

/// Ground-truth transform mapping robot-2 map cells onto robot-1 map
/// cells; evaluation only.
inline RigidTransform2D ground_truth_transform(const RobotRun& run1, CellIndex shift1,
                                               const RobotRun& run2, CellIndex shift2) {
  const double theta = deg_to_rad(run1.frame_rotation_deg - run2.frame_rotation_deg);
  // p1 = R(rot1)(R(-rot2)(p2 + shift2) + off2 - off1) - shift1
  const Vec2 shift2v{static_cast<double>(shift2.col), static_cast<double>(shift2.row)};
  const Vec2 shift1v{static_cast<double>(shift1.col), static_cast<double>(shift1.row)};
  const Vec2 constant =
      rotate(shift2v, theta) +
      rotate(run2.frame_offset - run1.frame_offset,
             deg_to_rad(run1.frame_rotation_deg)) -
      shift1v;
  RigidTransform2D T;
  T.theta = normalize_rad(theta);
  T.t = constant;
  return T;
}

/// Simulates one exploration pass: the local map is the ground truth
/// restricted to the sensing disc around the trajectory, expressed in
/// the robot's offset/rotated frame; tag readings carry Gaussian range
/// noise, resampled each iteration, and are never emitted beyond the
/// antenna range.
inline RobotRunResult simulate_run(const World& world, const RobotRun& run) {
  if (run.waypoints.empty()) {
    throw std::invalid_argument("simulate_run: empty trajectory");
  }
  const double sense_cells = run.sensing_radius_m / world.spec.resolution;
  OccupancyGrid restricted(world.grid.width(), world.grid.height(),
                           world.grid.resolution());
  for (int r = 0; r < world.grid.height(); ++r) {
    for (int c = 0; c < world.grid.width(); ++c) {
      const Vec2 p{static_cast<double>(c), static_cast<double>(r)};
      if (detail::polyline_distance(p, run.waypoints) <= sense_cells) {
        restricted.set(c, r, world.grid.at(c, r));
      }
    }
  }

  RigidTransform2D frame;
  frame.theta = normalize_rad(deg_to_rad(run.frame_rotation_deg));
  TransformedGrid local = apply_transform_grid(restricted, frame, run.frame_offset, {});

  RobotRunResult result;
  result.local_map = std::move(local.grid);
  result.frame_shift = local.origin;
  result.run = run;

  std::mt19937_64 rng(run.seed);
  std::normal_distribution<double> noise(0.0, run.noise_sigma_m);
  const auto poses = detail::sample_polyline(run.waypoints, run.iterations);
  const double res = world.spec.resolution;

  result.true_tag_cells.reserve(world.tags.size());
  result.tag_in_range.assign(world.tags.size(), false);
  for (const TagPlacement& tag : world.tags) {
    const Vec2 tag_cells{tag.position_m.x / res, tag.position_m.y / res};
    result.true_tag_cells.push_back(world_to_robot_cells(tag_cells, run, result.frame_shift));
  }

  for (int it = 0; it < static_cast<int>(poses.size()); ++it) {
    const Vec2 pose_world_m{poses[it].x * res, poses[it].y * res};
    for (size_t ti = 0; ti < world.tags.size(); ++ti) {
      const double true_d = distance(pose_world_m, world.tags[ti].position_m);
      if (true_d > run.antenna_range_m) continue;
      result.tag_in_range[ti] = true;
      double d = true_d + (run.noise_sigma_m > 0 ? noise(rng) : 0.0);
      d = std::clamp(d, 1e-6, run.antenna_range_m);
      const Vec2 pose_robot_cells = world_to_robot_cells(poses[it], run, result.frame_shift);
      result.readings.push_back(TagReading{world.tags[ti].id,
                                           {pose_robot_cells.x * res, pose_robot_cells.y * res},
                                           d, it});
    }
  }
  return result;
}

/// Full Bayes-filter localization of every tag seen during a run.
/// Fields are anchored at the robot pose of the tag's first reading.
inline std::vector<TagEstimate> localize_tags(const RobotRunResult& run_result,
                                              const RfidParams& params = {}) {
  std::map<int, ProbabilityField> fields;
  for (const TagReading& reading : run_result.readings) {
    auto it = fields.find(reading.tag_id);
    if (it == fields.end()) {
      it = fields.emplace(reading.tag_id,
                          ProbabilityField(reading.tag_id, reading.robot_pose, params))
               .first;
    }
    it->second = bayes_update(it->second, reading);
  }
  std::vector<TagEstimate> out;
  for (const auto& [id, field] : fields) out.push_back(extract_estimate(field));
  return out;
}

/// Synthetic tag estimates for benchmark runs: ground-truth robot-frame
/// pose plus Gaussian localization noise, with the localization
/// probability drawn from the given range. The pose noise scales with
/// (1 - probability) -- a probability of 0.95 uses pose_sigma_m as-is --
/// so the best-localized tag is also the most accurately placed, which
/// is the premise behind anchoring the translation on it. Only tags
/// that ever came within antenna range are reported.
inline std::vector<TagEstimate> synthetic_tag_estimates(
    const World& world, const RobotRunResult& run_result, double pose_sigma_m,
    double prob_lo, double prob_hi, std::mt19937_64& rng) {
  std::normal_distribution<double> pose_noise(0.0,
      pose_sigma_m > 0 ? pose_sigma_m / world.spec.resolution : 1.0);
  std::uniform_real_distribution<double> prob(prob_lo, prob_hi);
  std::vector<TagEstimate> out;
  for (size_t ti = 0; ti < world.tags.size(); ++ti) {
    if (!run_result.tag_in_range[ti]) continue;
    const Vec2 truth = run_result.true_tag_cells[ti];
    const double p = prob(rng);
    const double scale = (1.0 - p) / 0.05;
    const double nx = pose_sigma_m > 0 ? pose_noise(rng) * scale : 0.0;
    const double ny = pose_sigma_m > 0 ? pose_noise(rng) * scale : 0.0;
    TagEstimate est;
    est.tag_id = world.tags[ti].id;
    est.map_pose = to_cell({truth.x + nx, truth.y + ny});
    est.probability = p;
    est.update_count = run_result.run.iterations;
    out.push_back(est);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment suite
// ---------------------------------------------------------------------------

/// Circular mean with period 90 degrees (angle quadrupling), reported
/// in the branch nearest to `reference_deg`.
inline double circular_mean_90(const std::vector<double>& samples_deg,
                               double reference_deg) {
  double sx = 0, sy = 0;
  for (double s : samples_deg) {
    const double a = deg_to_rad(s) * 4.0;
    sx += std::cos(a);
    sy += std::sin(a);
  }
  double mean = rad_to_deg(std::atan2(sy, sx)) / 4.0;  // in [-45, 45]
  while (mean - reference_deg > 45.0) mean -= 90.0;
  while (mean - reference_deg < -45.0) mean += 90.0;
  return mean;
}

/// Circular standard deviation with period 90, via deviations from the
/// circular mean.
inline double circular_std_90(const std::vector<double>& samples_deg,
                              double reference_deg) {
  const double mean = circular_mean_90(samples_deg, reference_deg);
  double acc = 0;
  for (double s : samples_deg) {
    const double d = normalize_mod90(s - mean);
    acc += d * d;
  }
  return samples_deg.empty() ? 0.0 : std::sqrt(acc / samples_deg.size());
}

/// The stock rectilinear benchmark world: a bordered environment with
/// interior walls and rooms, optionally globally rotated.
inline WorldSpec benchmark_world_spec(double rotation_deg = 0.0) {
  WorldSpec spec;
  spec.width = 700;
  spec.height = 600;
  spec.resolution = 0.02;
  spec.wall_thickness = 2.0;
  spec.global_rotation_deg = rotation_deg;
  // Outer shell plus rooms and a corridor; sized to stay inside the
  // canvas under a 45-degree rotation.
  spec.walls = {
      {190, 160, 320, 280},   // outer shell
      {190, 300, 110, 140},   // left room
      {400, 160, 110, 130},   // right room
      {260, 160, 60, 80},     // entry room
      {340, 360, 170, 80},    // upper-right room
  };
  spec.tags = {
      {5, {4.2, 3.4}},
      {7, {7.6, 3.6}},
      {9, {5.4, 8.2}},
      {11, {9.8, 6.6}},
  };
  return spec;
}

struct MethodStats {
  double mse_px2 = 0.0;
  double time_ms = 0.0;
};

struct MergeTrialResult {
  uint64_t seed = 0;
  double true_rotation_deg = 0.0;
  std::array<MethodStats, 3> methods;  ///< index 0 = method #1
  double method2_rotation_error_deg = 0.0;
  double method3_rotation_error_deg = 0.0;
};

struct ExperimentConfig {
  int merge_trials = 5;
  int ogm_vector_runs = 200;
  uint64_t seed = 1;
  double ogm_world_rotation_deg = -45.0;
  double tag_pose_sigma_m = 0.05;
  RansacParams ransac;
  IcpParams icp;
  MergeOptions merge_options;
};

struct ExperimentReport {
  std::vector<double> ogm_angle_samples_deg;
  double ogm_mean_deg = 0.0;
  double ogm_std_deg = 0.0;
  double ogm_mean_time_ms = 0.0;
  std::vector<MergeTrialResult> trials;
};

/// Runs the OGM-vector statistics experiment: the same rotated world,
/// one RANSAC seed per run.
inline std::vector<double> ogm_vector_experiment(const OccupancyGrid& grid, int runs,
                                                 uint64_t base_seed,
                                                 const RansacParams& params,
                                                 double* mean_time_ms = nullptr) {
  std::vector<double> samples;
  double total_ms = 0;
  for (int i = 0; i < runs; ++i) {
    RansacParams p = params;
    p.rng_seed = base_seed + static_cast<uint64_t>(i);
    const auto t0 = std::chrono::steady_clock::now();
    samples.push_back(compute_ogm_vector(grid, p).theta_ogm_deg);
    total_ms += std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  }
  if (mean_time_ms) *mean_time_ms = runs > 0 ? total_ms / runs : 0.0;
  return samples;
}

/// Builds a seeded two-robot scenario over the benchmark world: random
/// relative transform, overlapping trajectories, noisy synthetic tag
/// estimates, and the ground-truth transform for evaluation.
struct MergeScenario {
  MapBundle map1, map2;
  RigidTransform2D truth;  ///< robot-2 cells -> robot-1 cells
};

inline MergeScenario make_merge_scenario(uint64_t seed, double tag_pose_sigma_m) {
  std::mt19937_64 rng(seed);
  const World world = generate_world(benchmark_world_spec(0.0));

  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  std::uniform_real_distribution<double> offset(-40.0, 40.0);

  RobotRun run1;
  run1.waypoints = {{240, 220}, {460, 220}, {460, 380}, {240, 380}, {240, 220}};
  run1.frame_offset = {0, 0};
  run1.frame_rotation_deg = 0.0;
  run1.sensing_radius_m = 6.0;
  run1.seed = seed * 2 + 1;

  RobotRun run2 = run1;
  run2.frame_offset = {offset(rng), offset(rng)};
  run2.frame_rotation_deg = angle(rng);
  run2.seed = seed * 2 + 2;

  MergeScenario scenario;
  const RobotRunResult res1 = simulate_run(world, run1);
  const RobotRunResult res2 = simulate_run(world, run2);
  scenario.map1.occupancy = res1.local_map;
  scenario.map2.occupancy = res2.local_map;
  scenario.map1.tags = synthetic_tag_estimates(world, res1, tag_pose_sigma_m, 0.91, 0.99, rng);
  scenario.map2.tags = synthetic_tag_estimates(world, res2, tag_pose_sigma_m, 0.91, 0.99, rng);
  scenario.truth = ground_truth_transform(run1, res1.frame_shift, run2, res2.frame_shift);
  return scenario;
}

/// Rotation error of a solution against the scenario ground truth, in
/// degrees, with the quadrant resolved (not modulo 90).
inline double rotation_error_deg(const MergeSolution& solution,
                                 const RigidTransform2D& truth) {
  return std::abs(normalize_deg(solution.total_rotation_deg() - rad_to_deg(truth.theta)));
}

inline MergeTrialResult run_merge_trial(uint64_t seed, const ExperimentConfig& cfg) {
  const MergeScenario scenario = make_merge_scenario(seed, cfg.tag_pose_sigma_m);
  MergeOptions opts = cfg.merge_options;
  opts.ransac = cfg.ransac;
  opts.icp = cfg.icp;
  opts.ransac.rng_seed = seed * 16 + 7;

  MergeTrialResult trial;
  trial.seed = seed;
  trial.true_rotation_deg = rad_to_deg(scenario.truth.theta);
  for (int method = 1; method <= 3; ++method) {
    const MergeReport report =
        merge_maps_end_to_end(scenario.map1, scenario.map2, method, opts);
    trial.methods[method - 1] = {report.mse_px2, report.elapsed_ms};
    if (method == 2) {
      trial.method2_rotation_error_deg = rotation_error_deg(report.solution, scenario.truth);
    }
    if (method == 3) {
      trial.method3_rotation_error_deg = rotation_error_deg(report.solution, scenario.truth);
    }
  }
  return trial;
}

/// Full experiment suite: OGM-vector statistics on the rotated world
/// plus seeded method comparisons. Deterministic given the config.
inline ExperimentReport run_experiment_suite(const ExperimentConfig& cfg) {
  ExperimentReport report;
  const World ogm_world = generate_world(benchmark_world_spec(cfg.ogm_world_rotation_deg));
  report.ogm_angle_samples_deg = ogm_vector_experiment(
      ogm_world.grid, cfg.ogm_vector_runs, cfg.seed, cfg.ransac, &report.ogm_mean_time_ms);
  report.ogm_mean_deg =
      circular_mean_90(report.ogm_angle_samples_deg, cfg.ogm_world_rotation_deg);
  report.ogm_std_deg =
      circular_std_90(report.ogm_angle_samples_deg, cfg.ogm_world_rotation_deg);

  for (int i = 0; i < cfg.merge_trials; ++i) {
    report.trials.push_back(run_merge_trial(cfg.seed + 100 + i, cfg));
  }
  return report;
}

}  // namespace mapmerge

#endif  // MAPMERGE_SIM_HPP_

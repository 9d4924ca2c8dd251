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

// Command-line front end: simulate worlds, extract lines, compute OGM
// vectors, localize tags from recorded readings, merge map pairs and
// run the benchmark suite.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mapmerge/mapmerge.hpp"

using namespace mapmerge;
using nlohmann::json;

namespace {

// Coordinate reporting: cells by default, meters with --meters.
double coord(double cells, double resolution, bool meters) {
  return meters ? cells * resolution : cells;
}

// Map-bundle arguments accept the base path or either component file.
MapBundle load_bundle_arg(std::string path) {
  for (const char* ext : {".pgm", ".json"}) {
    const size_t n = std::string(ext).size();
    if (path.size() > n && path.compare(path.size() - n, n, ext) == 0) {
      path.resize(path.size() - n);
      break;
    }
  }
  return load_map(path);
}

json solution_to_json(const MergeSolution& s, double resolution, bool meters) {
  const RigidTransform2D T = s.closed_form();
  json out;
  out["stage"] = s.stage == MergeStage::rfid_only        ? "rfid_only"
                 : s.stage == MergeStage::ogm_vector     ? "ogm_vector"
                                                         : "icp_refined";
  out["delta_theta_deg"] = s.delta_theta_deg;
  out["kappa"] = s.kappa;
  out["total_rotation_deg"] = s.total_rotation_deg();
  out["anchor_src"] = {coord(s.anchor_src.x, resolution, meters),
                       coord(s.anchor_src.y, resolution, meters)};
  out["anchor_dst"] = {coord(s.anchor_dst.x, resolution, meters),
                       coord(s.anchor_dst.y, resolution, meters)};
  out["closed_form"] = {{"theta_deg", rad_to_deg(T.theta)},
                        {"t", {coord(T.t.x, resolution, meters),
                               coord(T.t.y, resolution, meters)}}};
  if (s.icp) {
    out["icp"] = {{"dx", coord(s.icp->dx, resolution, meters)},
                  {"dy", coord(s.icp->dy, resolution, meters)},
                  {"dtheta_deg", s.icp->dtheta_deg}};
  }
  return out;
}

json ogm_to_json(const OgmVector& v) {
  return {{"theta_ogm_deg", v.theta_ogm_deg},
          {"group1_mean_deg", v.group1_mean_deg},
          {"group2_mean_deg", v.group2_mean_deg},
          {"group1_weight", v.group1_weight},
          {"group2_weight", v.group2_weight},
          {"group1_count", v.group1_count},
          {"group2_count", v.group2_count}};
}

void write_field_heatmap(const ProbabilityField& field, const std::string& path) {
  double max_v = 0.0;
  const int n = field.size();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) max_v = std::max(max_v, field.at(c, r));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MapIoError("cannot open for writing: " + path);
  out << "P5\n" << n << " " << n << "\n255\n";
  std::vector<uint8_t> row(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      row[c] = max_v > 0
                   ? static_cast<uint8_t>(std::lround(255.0 * field.at(c, r) / max_v))
                   : 0;
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

// Overlay: free 255, occupied 0, unexplored 127, line members 64.
void write_line_overlay(const OccupancyGrid& grid,
                        const std::vector<LineSegment>& lines,
                        const std::string& path) {
  std::vector<uint8_t> img(static_cast<size_t>(grid.width()) * grid.height());
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      uint8_t g = 127;
      if (grid.is_explored(c, r)) g = grid.at(c, r) >= 0.5f ? 0 : 255;
      img[static_cast<size_t>(r) * grid.width() + c] = g;
    }
  }
  for (const LineSegment& line : lines) {
    for (CellIndex m : line.members) {
      if (grid.in_bounds(m)) {
        img[static_cast<size_t>(m.row) * grid.width() + m.col] = 64;
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MapIoError("cannot open for writing: " + path);
  out << "P5\n" << grid.width() << " " << grid.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), img.size());
}

int run(int argc, char** argv) {
  CLI::App app{"Occupancy-grid map merging via RFID tags, obstacle lines and ICP"};
  app.require_subcommand(1);

  // --- simulate -----------------------------------------------------
  auto* sim = app.add_subcommand(
      "simulate", "Generate a seeded two-robot scenario over the benchmark world");
  uint64_t sim_seed = 1;
  double sim_tag_sigma = 0.05;
  std::string sim_out = "scenario";
  sim->add_option("--seed", sim_seed, "Scenario seed")->required();
  sim->add_option("--tag-sigma", sim_tag_sigma,
                  "Tag localization noise, meters (default 0.05)");
  sim->add_option("--out", sim_out, "Output prefix (writes <out>_map{1,2}.{pgm,json})");

  // --- merge --------------------------------------------------------
  auto* merge = app.add_subcommand("merge", "Merge two map bundles");
  std::string merge_map1, merge_map2, merge_out;
  int merge_method = 3;
  bool merge_no_blur = false, merge_dump_iters = false, merge_meters = false;
  uint64_t merge_seed = 0;
  merge->add_option("--map1", merge_map1, "Base path of the first map bundle")->required();
  merge->add_option("--map2", merge_map2, "Base path of the second map bundle")->required();
  merge->add_option("--method", merge_method, "1 = tags, 2 = +OGM vectors, 3 = +ICP")
      ->check(CLI::Range(1, 3));
  merge->add_option("--out", merge_out, "Base path for the merged bundle");
  merge->add_option("--seed", merge_seed, "Line-extraction RNG seed (default 0)");
  merge->add_flag("--no-blur", merge_no_blur, "Skip the conditional blur");
  merge->add_flag("--dump-iterations", merge_dump_iters,
                  "Include the per-iteration ICP error trace");
  merge->add_flag("--meters", merge_meters, "Report coordinates in meters");

  // --- bench --------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Run the benchmark experiment suite");
  uint64_t bench_seed = 0;
  int bench_trials = 5, bench_ogm_runs = 200;
  double bench_rotation = -45.0;
  std::string bench_json = "bench.json", bench_csv = "bench.csv";
  bench->add_option("--seed", bench_seed, "Suite seed")->required();
  bench->add_option("--trials", bench_trials, "Merge trials (default 5)");
  bench->add_option("--ogm-runs", bench_ogm_runs, "OGM-vector runs (default 200)");
  bench->add_option("--rotation", bench_rotation,
                    "OGM world rotation, degrees (default -45)");
  bench->add_option("--json", bench_json, "JSON report path");
  bench->add_option("--csv", bench_csv, "CSV report path");

  // --- localize -----------------------------------------------------
  auto* loc = app.add_subcommand(
      "localize", "Bayes-filter tag localization from recorded readings");
  std::string loc_readings, loc_out, loc_heatmap;
  bool loc_meters = false;
  double loc_resolution = 0.02;
  loc->add_option("--readings", loc_readings,
                  "JSON-lines file: {tag_id, x, y, d, iter} per line (meters)")
      ->required();
  loc->add_option("--out", loc_out, "Estimates JSON path (default stdout only)");
  loc->add_option("--heatmap", loc_heatmap,
                  "Prefix for per-tag probability-field PGMs");
  loc->add_option("--resolution", loc_resolution,
                  "Field resolution, meters per cell (default 0.02)");
  loc->add_flag("--meters", loc_meters, "Report estimates in meters");

  // --- extract-lines ------------------------------------------------
  auto* lines_cmd = app.add_subcommand("extract-lines", "RANSAC obstacle-line extraction");
  std::string lines_map, lines_overlay;
  uint64_t lines_seed = 0;
  double lines_t_final = 0.50;
  bool lines_meters = false;
  lines_cmd->add_option("--map", lines_map, "Base path of the map bundle")->required();
  lines_cmd->add_option("--seed", lines_seed, "RNG seed (default 0)");
  lines_cmd->add_option("--t-final", lines_t_final,
                        "Termination fraction (default 0.5)");
  lines_cmd->add_option("--overlay", lines_overlay, "Overlay PGM path");
  lines_cmd->add_flag("--meters", lines_meters, "Report endpoints in meters");

  // --- ogm-vector ---------------------------------------------------
  auto* ogm = app.add_subcommand("ogm-vector", "Direction vector of a rectilinear map");
  std::string ogm_map;
  uint64_t ogm_seed = 0;
  double ogm_t_final = 0.50;
  bool ogm_complement = false;
  ogm->add_option("--map", ogm_map, "Base path of the map bundle")->required();
  ogm->add_option("--seed", ogm_seed, "RNG seed (default 0)");
  ogm->add_option("--t-final", ogm_t_final, "Termination fraction (default 0.5)");
  ogm->add_flag("--complement", ogm_complement,
                "Weight groups by length * (1 - reliability)");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    const MergeScenario scenario = make_merge_scenario(sim_seed, sim_tag_sigma);
    save_map(scenario.map1, sim_out + "_map1");
    save_map(scenario.map2, sim_out + "_map2");
    json truth = {{"theta_deg", rad_to_deg(scenario.truth.theta)},
                  {"t", {scenario.truth.t.x, scenario.truth.t.y}},
                  {"seed", sim_seed}};
    std::ofstream(sim_out + "_truth.json") << truth.dump(2) << "\n";
    std::cout << truth.dump(2) << "\n";
    return 0;
  }

  if (merge->parsed()) {
    const MapBundle map1 = load_bundle_arg(merge_map1);
    const MapBundle map2 = load_bundle_arg(merge_map2);
    MergeOptions opts;
    opts.ransac.rng_seed = merge_seed;
    opts.apply_blur = !merge_no_blur;
    const MergeReport report = merge_maps_end_to_end(map1, map2, merge_method, opts);

    const double res = map1.occupancy.resolution();
    json out;
    out["method"] = merge_method;
    out["solution"] = solution_to_json(report.solution, res, merge_meters);
    out["mse_px2"] = report.mse_px2;
    out["elapsed_ms"] = report.elapsed_ms;
    out["canvas_origin"] = {report.canvas_origin.col, report.canvas_origin.row};
    out["warnings"] = report.warnings;
    if (report.icp_result) {
      out["icp_iterations"] = report.icp_result->iterations_used;
      out["icp_final_mse"] = report.icp_result->final_mse;
    }
    if (merge_dump_iters && merge_method == 3) {
      // Re-run the refinement stage to recover the per-iteration trace.
      const MergeSolution pre = compute_merge_solution(map1, map2, 2, opts);
      std::vector<Vec2> source, target;
      for (Vec2 p : detail::occupied_points(map2.occupancy)) {
        source.push_back(rotate(p - pre.anchor_src, deg_to_rad(pre.delta_theta_deg)));
      }
      for (Vec2 p : detail::occupied_points(map1.occupancy)) {
        target.push_back(p - pre.anchor_dst);
      }
      try {
        auto [sub_src, sub_tgt] = select_overlap(source, target, opts.icp.overlap_margin);
        std::vector<double> trace;
        icp(sub_src, sub_tgt, opts.icp, &trace);
        out["icp_mse_per_iteration"] = trace;
      } catch (const std::exception& e) {
        out["icp_mse_per_iteration"] = json::array();
        out["warnings"].push_back(std::string("iteration dump unavailable: ") + e.what());
      }
    }
    if (!merge_out.empty()) save_map(report.merged, merge_out);
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (bench->parsed()) {
    ExperimentConfig cfg;
    cfg.seed = bench_seed;
    cfg.merge_trials = bench_trials;
    cfg.ogm_vector_runs = bench_ogm_runs;
    cfg.ogm_world_rotation_deg = bench_rotation;
    const ExperimentReport report = run_experiment_suite(cfg);

    json out;
    out["seed"] = bench_seed;
    out["ogm"] = {{"world_rotation_deg", bench_rotation},
                  {"runs", bench_ogm_runs},
                  {"mean_deg", report.ogm_mean_deg},
                  {"std_deg", report.ogm_std_deg},
                  {"mean_time_ms", report.ogm_mean_time_ms},
                  {"samples_deg", report.ogm_angle_samples_deg}};
    auto& trials = out["trials"] = json::array();
    for (const MergeTrialResult& t : report.trials) {
      trials.push_back({{"seed", t.seed},
                        {"true_rotation_deg", t.true_rotation_deg},
                        {"mse_px2", {t.methods[0].mse_px2, t.methods[1].mse_px2,
                                     t.methods[2].mse_px2}},
                        {"time_ms", {t.methods[0].time_ms, t.methods[1].time_ms,
                                     t.methods[2].time_ms}},
                        {"method2_rotation_error_deg", t.method2_rotation_error_deg},
                        {"method3_rotation_error_deg", t.method3_rotation_error_deg}});
    }
    std::ofstream(bench_json) << out.dump(2) << "\n";

    std::ofstream csv(bench_csv);
    csv << "seed,true_rotation_deg,mse1_px2,mse2_px2,mse3_px2,"
           "time1_ms,time2_ms,time3_ms,rot_err2_deg,rot_err3_deg\n";
    for (const MergeTrialResult& t : report.trials) {
      csv << t.seed << "," << t.true_rotation_deg << "," << t.methods[0].mse_px2
          << "," << t.methods[1].mse_px2 << "," << t.methods[2].mse_px2 << ","
          << t.methods[0].time_ms << "," << t.methods[1].time_ms << ","
          << t.methods[2].time_ms << "," << t.method2_rotation_error_deg << ","
          << t.method3_rotation_error_deg << "\n";
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (loc->parsed()) {
    std::ifstream in(loc_readings);
    if (!in) {
      std::cerr << "cannot open readings file: " << loc_readings << "\n";
      return 1;
    }
    RfidParams params;
    params.resolution = loc_resolution;
    std::map<int, ProbabilityField> fields;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception& e) {
        std::cerr << "line " << line_no << ": malformed JSON: " << e.what() << "\n";
        return 1;
      }
      TagReading reading;
      reading.tag_id = rec.at("tag_id").get<int>();
      reading.robot_pose = {rec.at("x").get<double>(), rec.at("y").get<double>()};
      reading.distance = rec.at("d").get<double>();
      reading.iteration = rec.value("iter", 0);
      auto it = fields.find(reading.tag_id);
      if (it == fields.end()) {
        it = fields.emplace(reading.tag_id,
                            ProbabilityField(reading.tag_id, reading.robot_pose, params))
                 .first;
      }
      it->second = bayes_update(it->second, reading);
    }

    json out = json::array();
    for (const auto& [id, field] : fields) {
      const TagEstimate est = extract_estimate(field);
      out.push_back(
          {{"tag_id", est.tag_id},
           {"x", coord(est.map_pose.col, loc_resolution, loc_meters)},
           {"y", coord(est.map_pose.row, loc_resolution, loc_meters)},
           {"probability", est.probability},
           {"update_count", est.update_count}});
      if (!loc_heatmap.empty()) {
        write_field_heatmap(field, loc_heatmap + "_tag" + std::to_string(id) + ".pgm");
      }
    }
    if (!loc_out.empty()) std::ofstream(loc_out) << out.dump(2) << "\n";
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (lines_cmd->parsed()) {
    const MapBundle map = load_bundle_arg(lines_map);
    RansacParams params;
    params.rng_seed = lines_seed;
    params.t_final = lines_t_final;
    const auto lines = extract_obstacle_lines(map.occupancy, params);

    const double res = map.occupancy.resolution();
    json out = json::array();
    for (const LineSegment& seg : lines) {
      out.push_back({{"x1", coord(seg.p1.x, res, lines_meters)},
                     {"y1", coord(seg.p1.y, res, lines_meters)},
                     {"x2", coord(seg.p2.x, res, lines_meters)},
                     {"y2", coord(seg.p2.y, res, lines_meters)},
                     {"theta_deg", seg.theta_deg},
                     {"length", coord(seg.length, res, lines_meters)},
                     {"reliability", seg.reliability},
                     {"n_members", seg.members.size()}});
    }
    if (!lines_overlay.empty()) write_line_overlay(map.occupancy, lines, lines_overlay);
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (ogm->parsed()) {
    const MapBundle map = load_bundle_arg(ogm_map);
    RansacParams params;
    params.rng_seed = ogm_seed;
    params.t_final = ogm_t_final;
    const OgmWeightForm form = ogm_complement
                                   ? OgmWeightForm::length_times_reliability_complement
                                   : OgmWeightForm::length_times_reliability;
    std::cout << ogm_to_json(compute_ogm_vector(map.occupancy, params, form)).dump(2)
              << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

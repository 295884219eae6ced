#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biasmap/field.hpp"
#include "biasmap/gpr.hpp"
#include "biasmap/ipp.hpp"
#include "biasmap/metrics.hpp"
#include "biasmap/sbe.hpp"
#include "biasmap/sim.hpp"

namespace biasmap {

enum class PlannerKind { boustrophedon, ipp, fixed_waypoints };

std::string planner_name(PlannerKind kind);

struct GpConfig {
  Hyperparams hyperparams;
  bool optimize = false;
  HyperBounds bounds;
  int reoptimize_every = 10;  // ticks between re-optimizations
};

struct AnchorConfig {
  int drone_id = 0;
  // Unset: the anchor bias is taken from the truth field at the drone's
  // initial position (the "known initial bias" assumption).
  std::optional<Vec2> known_bias;
};

struct ScenarioConfig {
  Rect bounds{0.0, 0.0, 50.0, 50.0};
  int n_drones = 2;
  std::vector<DroneState> initial_poses;  // empty: auto-spread
  BiasFieldSpec field;
  NoiseConfig noise;
  ActionLimits limits;
  PlannerKind planner = PlannerKind::fixed_waypoints;
  std::vector<std::pair<Vec2, Vec2>> waypoint_pairs;  // fixed_waypoints
  PlannerConfig planner_cfg;
  GpConfig gp;
  double duration = 30.0;
  double dt = 0.2;
  double sbe_start = 0.0;
  double arrive_tol = 0.5;
  double eval_grid_spacing = 1.0;
  int gp_node_cap = 1500;
  AnchorConfig anchor;
  std::uint64_t seed = 1;
  std::string output_dir;  // empty: no files written
};

struct PlanLogEntry {
  int plan_index = 0;
  double time = 0.0;
  double j_init = 0.0;
  double j_final = 0.0;
  double mean_grid_variance = 0.0;  // current model, at plan time
  std::vector<Route> routes;        // indexed by drone after assignment
};

struct ExperimentRecord {
  ScenarioConfig config;
  std::vector<RmseRecord> rmse;
  std::vector<DeltaRecord> deltas;
  std::vector<PlanLogEntry> plans;
  BiasEstimateSet final_estimates;
  std::vector<Vec2> final_truth_positions;  // aligned with final_estimates
  GpModel final_model;
  int n_nodes = 0;
  bool gp_nodes_capped = false;
  bool anchor_warning = false;
  double wall_ms = 0.0;
};

/// Runs the tick loop: control, motion, sensing, delta accumulation, and
/// (from sbe_start onward) per-tick solve + GP refit + RMSE records.
/// Writes all exports when output_dir is non-empty.
ExperimentRecord run_scenario(const ScenarioConfig& cfg);

struct SweepRow {
  double sigma = 0.0;
  double mean_solver_rmse = 0.0;
  double mean_map_rmse = 0.0;
  int runs_ok = 0;
  int runs_failed = 0;
};

/// Cross product of process-noise levels and seeds; sensor noise is zeroed
/// so the sigma = 0 row exercises the exactness property.
std::vector<SweepRow> run_noise_sweep(const ScenarioConfig& base,
                                      const std::vector<double>& sigmas,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::string& out_dir = "");

struct ComparisonTrace {
  std::vector<double> time;
  std::vector<double> ipp_mean_map_rmse;
  std::vector<double> bous_mean_map_rmse;
};

/// Paired per-seed runs of the two planners; configs must differ only in
/// the planner.
ComparisonTrace run_comparison(const ScenarioConfig& cfg_ipp,
                               const ScenarioConfig& cfg_bous,
                               const std::vector<std::uint64_t>& seeds,
                               const std::string& out_dir = "");

/// Seven-drone fixed-waypoint scenario on the constant-plus-perturbation
/// field (210 measured positions at the default duration).
ScenarioConfig sbe_validation_preset();

/// Three-drone scenario on the radial Gaussian field for the planner
/// comparison.
ScenarioConfig ipp_comparison_preset(PlannerKind planner = PlannerKind::ipp);

ScenarioConfig load_scenario_config(const std::string& path);
std::string scenario_config_to_json(const ScenarioConfig& cfg);

/// Writes map_grid.csv-style output for a fitted model.
void export_map_grid(const GpModel& model, const Rect& bounds, double spacing,
                     const std::string& path);

/// model.json round trip for the export-map verb.
void save_model(const GpModel& model, const Rect& bounds, const std::string& path);
GpModel load_model(const std::string& path, Rect* bounds);

}  // namespace biasmap

// Command-line front end: run one scenario, sweep process noise, compare
// planners, or re-grid a saved model.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "biasmap/harness.hpp"

namespace {

using namespace biasmap;

ScenarioConfig resolve_config(const std::string& config_path,
                              const std::string& preset) {
  if (!config_path.empty()) return load_scenario_config(config_path);
  if (preset == "sbe-validation") return sbe_validation_preset();
  if (preset == "ipp-comparison") return ipp_comparison_preset();
  throw CLI::ValidationError("--preset", "unknown preset: " + preset);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPS bias field estimation: simulator, solver, GP map, and planner"};
  app.require_subcommand(1);

  std::string config_path, preset = "sbe-validation", out_dir, planner_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double duration = 0.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario config JSON");
    cmd->add_option("--preset", preset,
                    "built-in scenario when --config is absent "
                    "(sbe-validation | ipp-comparison)");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s; seed_set = true; },
        "override the scenario seed");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--duration", duration, "override duration in seconds");
  };

  auto* run = app.add_subcommand("run", "run one scenario and write its exports");
  add_common(run);
  run->add_option("--planner", planner_override,
                  "override planner (boustrophedon | ipp | fixed_waypoints)");

  auto* sweep = app.add_subcommand("sweep", "process-noise sweep over seeds");
  add_common(sweep);
  double sigma_max = 0.5, sigma_step = 0.05;
  int n_seeds = 5;
  sweep->add_option("--sigma-max", sigma_max, "largest process sigma (m)");
  sweep->add_option("--sigma-step", sigma_step, "sigma increment (m)");
  sweep->add_option("--seeds", n_seeds, "number of seeds per sigma");

  auto* compare = app.add_subcommand("compare", "IPP vs. boustrophedon RMSE traces");
  preset = "sbe-validation";
  add_common(compare);
  int cmp_seeds = 5;
  compare->add_option("--seeds", cmp_seeds, "number of paired seeds");

  auto* export_map = app.add_subcommand("export-map", "re-grid a saved model");
  std::string model_path, map_out = "map_grid.csv";
  double spacing = 1.0;
  export_map->add_option("--model", model_path, "model.json from a previous run")
      ->required();
  export_map->add_option("--spacing", spacing, "grid spacing in meters");
  export_map->add_option("--out", map_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ScenarioConfig cfg = resolve_config(config_path, preset);
      if (seed_set) cfg.seed = seed;
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (cfg.output_dir.empty()) cfg.output_dir = "out";
      if (duration > 0.0) cfg.duration = duration;
      if (!planner_override.empty()) {
        if (planner_override == "boustrophedon") cfg.planner = PlannerKind::boustrophedon;
        else if (planner_override == "ipp") cfg.planner = PlannerKind::ipp;
        else if (planner_override == "fixed_waypoints") cfg.planner = PlannerKind::fixed_waypoints;
        else throw std::invalid_argument("unknown planner: " + planner_override);
      }
      const ExperimentRecord rec = run_scenario(cfg);
      std::printf("ticks=%zu nodes=%d deltas=%zu final_map_rmse=%.4f m (%.0f ms)\n",
                  rec.rmse.size(), rec.n_nodes, rec.deltas.size(),
                  rec.rmse.empty() ? 0.0 : rec.rmse.back().map_rmse, rec.wall_ms);
      std::printf("exports written to %s\n", cfg.output_dir.c_str());
    } else if (sweep->parsed()) {
      ScenarioConfig cfg = resolve_config(config_path, preset);
      cfg.gp.optimize = false;  // the sweep reports solver accuracy
      std::vector<double> sigmas;
      for (double s = 0.0; s <= sigma_max + 1e-12; s += sigma_step) sigmas.push_back(s);
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < n_seeds; ++i)
        seeds.push_back((seed_set ? seed : 1) + i);
      if (out_dir.empty()) out_dir = "out";
      const auto table = run_noise_sweep(cfg, sigmas, seeds, out_dir);
      for (const auto& row : table)
        std::printf("sigma=%.2f solver_rmse=%.5f map_rmse=%.5f (%d ok, %d failed)\n",
                    row.sigma, row.mean_solver_rmse, row.mean_map_rmse, row.runs_ok,
                    row.runs_failed);
    } else if (compare->parsed()) {
      ScenarioConfig cfg_ipp =
          config_path.empty() ? ipp_comparison_preset(PlannerKind::ipp)
                              : resolve_config(config_path, preset);
      cfg_ipp.planner = PlannerKind::ipp;
      ScenarioConfig cfg_bous = cfg_ipp;
      cfg_bous.planner = PlannerKind::boustrophedon;
      if (duration > 0.0) {
        cfg_ipp.duration = duration;
        cfg_bous.duration = duration;
      }
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < cmp_seeds; ++i)
        seeds.push_back((seed_set ? seed : 1) + i);
      if (out_dir.empty()) out_dir = "out";
      const ComparisonTrace trace = run_comparison(cfg_ipp, cfg_bous, seeds, out_dir);
      if (!trace.time.empty())
        std::printf("final mean map RMSE: ipp=%.4f bous=%.4f (trace in %s/comparison.csv)\n",
                    trace.ipp_mean_map_rmse.back(), trace.bous_mean_map_rmse.back(),
                    out_dir.c_str());
    } else if (export_map->parsed()) {
      Rect bounds;
      const GpModel model = load_model(model_path, &bounds);
      export_map_grid(model, bounds, spacing, map_out);
      std::printf("map written to %s\n", map_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

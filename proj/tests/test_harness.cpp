#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "biasmap/harness.hpp"

using namespace biasmap;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig cfg;
  cfg.bounds = {0.0, 0.0, 30.0, 30.0};
  cfg.n_drones = 3;
  cfg.field = BiasFieldSpec{GaussianRadialField{{20.0, 15.0}, 3.0, 8.0}};
  cfg.planner = PlannerKind::fixed_waypoints;
  cfg.waypoint_pairs = {{{2.0, 2.0}, {25.0, 5.0}},
                        {{2.0, 15.0}, {25.0, 15.0}},
                        {{2.0, 25.0}, {25.0, 25.0}}};
  cfg.initial_poses = {{{2.0, 2.0}, 0.0}, {{2.0, 15.0}, 0.0}, {{2.0, 25.0}, 0.0}};
  cfg.duration = 4.0;
  cfg.dt = 0.2;
  cfg.sbe_start = 0.0;
  cfg.seed = 7;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("biasmap_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("tick and record counts follow duration / dt") {
  ScenarioConfig cfg = small_scenario();
  cfg.duration = 30.0;
  cfg.n_drones = 2;
  cfg.waypoint_pairs.resize(2);
  cfg.initial_poses.resize(2);
  ExperimentRecord rec = run_scenario(cfg);
  CHECK(rec.rmse.size() == 150);
  for (std::size_t i = 1; i < rec.rmse.size(); ++i)
    CHECK(rec.rmse[i].time >= rec.rmse[i - 1].time);
}

TEST_CASE("delta log has exactly k * n^2 rows") {
  ScenarioConfig cfg = small_scenario();
  ExperimentRecord rec = run_scenario(cfg);
  const int k = static_cast<int>(rec.rmse.size());
  CHECK(rec.deltas.size() == static_cast<std::size_t>(k) * 9);
}

TEST_CASE("identical config and seed reproduce identical records") {
  ScenarioConfig cfg = small_scenario();
  ExperimentRecord a = run_scenario(cfg);
  ExperimentRecord b = run_scenario(cfg);
  REQUIRE(a.rmse.size() == b.rmse.size());
  for (std::size_t i = 0; i < a.rmse.size(); ++i) {
    CHECK(a.rmse[i].map_rmse == b.rmse[i].map_rmse);
    CHECK(a.rmse[i].solver_rmse == b.rmse[i].solver_rmse);
    CHECK(a.rmse[i].n_deltas == b.rmse[i].n_deltas);
  }
  REQUIRE(a.final_estimates.entries.size() == b.final_estimates.entries.size());
  for (std::size_t i = 0; i < a.final_estimates.entries.size(); ++i)
    CHECK(a.final_estimates.entries[i].bias == b.final_estimates.entries[i].bias);
}

TEST_CASE("exports are byte-identical across reruns") {
  TempDir d1("rerun_a"), d2("rerun_b");
  ScenarioConfig cfg = small_scenario();
  cfg.output_dir = d1.path.string();
  run_scenario(cfg);
  cfg.output_dir = d2.path.string();
  run_scenario(cfg);
  for (const char* name : {"rmse.csv", "map_grid.csv", "deltas.csv"}) {
    CHECK(slurp(d1.path / name) == slurp(d2.path / name));
    CHECK(!slurp(d1.path / name).empty());
  }
}

TEST_CASE("the seven-drone preset accumulates 210 measured positions") {
  ScenarioConfig cfg = sbe_validation_preset();
  cfg.gp.optimize = false;  // node count is independent of the gp settings
  ExperimentRecord rec = run_scenario(cfg);
  CHECK(rec.n_nodes == 210);
  const int k = static_cast<int>(rec.rmse.size());
  CHECK(rec.deltas.size() == static_cast<std::size_t>(k) * 49);
}

TEST_CASE("zero noise drives solver rmse to numerical zero") {
  ScenarioConfig cfg = small_scenario();
  cfg.noise = cfg.noise.with_all_zero();
  ExperimentRecord rec = run_scenario(cfg);
  REQUIRE(rec.rmse.back().solver_rmse.has_value());
  CHECK(*rec.rmse.back().solver_rmse < 1e-6);
}

TEST_CASE("noise sweep zeroes the sensor sigmas and aggregates rows") {
  ScenarioConfig base = small_scenario();
  base.gp.optimize = false;
  auto rows = run_noise_sweep(base, {0.0, 0.2}, {1, 2});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].sigma == 0.0);
  CHECK(rows[0].runs_ok == 2);
  CHECK(rows[0].mean_solver_rmse < 1e-6);
  CHECK(rows[1].mean_solver_rmse > rows[0].mean_solver_rmse);
}

TEST_CASE("comparison traces share the zero-map value before sbe_start") {
  ScenarioConfig ipp = ipp_comparison_preset(PlannerKind::ipp);
  ScenarioConfig bous = ipp_comparison_preset(PlannerKind::boustrophedon);
  ipp.duration = bous.duration = 4.0;
  ComparisonTrace trace = run_comparison(ipp, bous, {1, 2});
  REQUIRE(!trace.time.empty());
  for (std::size_t i = 0; i < trace.time.size(); ++i) {
    if (trace.time[i] >= ipp.sbe_start) break;
    CHECK(trace.ipp_mean_map_rmse[i] ==
          doctest::Approx(trace.bous_mean_map_rmse[i]).epsilon(1e-12));
  }
}

TEST_CASE("comparison rejects configs that differ beyond the planner") {
  ScenarioConfig ipp = ipp_comparison_preset(PlannerKind::ipp);
  ScenarioConfig bous = ipp_comparison_preset(PlannerKind::boustrophedon);
  bous.duration += 1.0;
  CHECK_THROWS(run_comparison(ipp, bous, {1}));
}

TEST_CASE("scenario config json round trip") {
  ScenarioConfig cfg = sbe_validation_preset();
  TempDir d("config");
  const fs::path p = d.path / "cfg.json";
  {
    std::ofstream out(p);
    out << scenario_config_to_json(cfg);
  }
  ScenarioConfig back = load_scenario_config(p.string());
  CHECK(scenario_config_to_json(back) == scenario_config_to_json(cfg));
}

TEST_CASE("model save/load round trip preserves predictions") {
  std::vector<Vec2> X{{1.0, 1.0}, {8.0, 3.0}, {4.0, 9.0}};
  std::vector<Vec2> Y{{0.5, 0.0}, {-0.2, 0.4}, {0.1, 0.1}};
  GpModel m = GpModel::fit(X, Y, Hyperparams{7.0, 3.0, 0.02});
  TempDir d("model");
  const fs::path p = d.path / "model.json";
  save_model(m, {0.0, 0.0, 10.0, 10.0}, p.string());
  Rect bounds;
  GpModel back = load_model(p.string(), &bounds);
  CHECK(bounds.xmax == 10.0);
  std::vector<Vec2> q{{2.0, 2.0}, {9.0, 9.0}};
  std::vector<Vec2> m1, m2;
  std::vector<double> v1, v2;
  m.predict(q, &m1, &v1);
  back.predict(q, &m2, &v2);
  for (int i = 0; i < 2; ++i) {
    CHECK((m1[i] - m2[i]).norm() < 1e-12);
    CHECK(std::abs(v1[i] - v2[i]) < 1e-12);
  }
}

TEST_CASE("ipp scenario logs plans with non-increasing objectives") {
  ScenarioConfig cfg = ipp_comparison_preset(PlannerKind::ipp);
  cfg.duration = 10.0;
  ExperimentRecord rec = run_scenario(cfg);
  REQUIRE(!rec.plans.empty());
  for (const auto& plan : rec.plans) {
    CHECK(plan.j_final <= plan.j_init + 1e-12);
    CHECK(plan.routes.size() == 3);
  }
}

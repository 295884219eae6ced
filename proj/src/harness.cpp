#include "biasmap/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "biasmap/csv.hpp"

namespace biasmap {

namespace {

constexpr double kMergeTol = 1e-6;

std::vector<DroneState> auto_spread_poses(const Rect& bounds, int n) {
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  const double mx = 0.1 * bounds.width();
  const double my = 0.1 * bounds.height();
  std::vector<DroneState> poses;
  for (int i = 0; i < n; ++i) {
    const int r = i / cols;
    const int c = i % cols;
    const double x =
        bounds.xmin + mx + (cols == 1 ? 0.5 : c / double(cols - 1)) * (bounds.width() - 2 * mx);
    const double y =
        bounds.ymin + my + (rows == 1 ? 0.5 : r / double(rows - 1)) * (bounds.height() - 2 * my);
    poses.push_back({{x, y}, 0.0});
  }
  return poses;
}

// Per-drone waypoint follower. Cycling navs ping-pong over their list;
// one-shot navs hover at the final waypoint once done.
struct DroneNav {
  std::vector<Vec2> waypoints;
  std::size_t next = 0;
  bool cycle = false;

  bool complete() const { return next >= waypoints.size(); }

  void advance(const Vec2& est_pos, double arrive_tol) {
    while (next < waypoints.size() &&
           (waypoints[next] - est_pos).norm() <= arrive_tol)
      ++next;
    if (complete() && cycle && waypoints.size() > 1) {
      std::reverse(waypoints.begin(), waypoints.end());
      next = 1;  // waypoints[0] is where we just arrived
    }
  }

  Action control(const DroneEstimate& est, const ActionLimits& limits, double dt,
                 double arrive_tol) const {
    if (complete()) return Action{0.0, 0.0};
    return waypoint_controller(est, waypoints[next], limits, dt, arrive_tol);
  }
};

struct TickLog {
  std::vector<Observation> observations;
  std::vector<DroneState> states;
  std::vector<DroneEstimate> estimates;
};

void write_exports(const ExperimentRecord& rec, const std::vector<TickLog>& ticks,
                   const std::vector<Vec2>& eval_grid);

}  // namespace

ExperimentRecord run_scenario(const ScenarioConfig& cfg_in) {
  const auto t_start = std::chrono::steady_clock::now();

  ScenarioConfig cfg = cfg_in;
  cfg.planner_cfg.n_drones = cfg.n_drones;
  cfg.planner_cfg.bounds = cfg.bounds;
  if (cfg.n_drones < 2) throw std::invalid_argument("run_scenario: n_drones must be >= 2");
  if (!(cfg.duration > cfg.sbe_start) || cfg.sbe_start < 0.0)
    throw std::invalid_argument("run_scenario: require duration > sbe_start >= 0");
  if (cfg.planner == PlannerKind::fixed_waypoints &&
      static_cast<int>(cfg.waypoint_pairs.size()) != cfg.n_drones)
    throw std::invalid_argument("run_scenario: need one waypoint pair per drone");
  if (cfg.initial_poses.empty())
    cfg.initial_poses = auto_spread_poses(cfg.bounds, cfg.n_drones);

  const int n = cfg.n_drones;
  const int total_ticks = static_cast<int>(std::llround(cfg.duration / cfg.dt));

  std::vector<std::mt19937_64> rngs;
  for (int i = 0; i < n; ++i) rngs.push_back(make_drone_rng(cfg.noise.rng_seed + cfg.seed, i));

  std::vector<DroneState> states(cfg.initial_poses.begin(), cfg.initial_poses.end());
  std::vector<DroneEstimate> estimates(n);
  for (int i = 0; i < n; ++i)
    estimates[i] = {states[i].position, states[i].heading};

  ExperimentRecord rec;
  rec.config = cfg;

  const std::vector<Vec2> eval_grid = make_eval_grid(cfg.bounds, cfg.eval_grid_spacing);
  const std::vector<Vec2> cand_grid =
      make_eval_grid(cfg.bounds, cfg.planner_cfg.candidate_grid_spacing);

  // Planner setup.
  std::vector<DroneNav> navs(n);
  GpModel model(cfg.gp.hyperparams);  // zero-map prior until the first solve
  Hyperparams h_cur = cfg.gp.hyperparams;

  auto current_positions = [&] {
    std::vector<Vec2> ps(n);
    for (int i = 0; i < n; ++i) ps[i] = estimates[i].position;
    return ps;
  };

  auto log_routes_plan = [&](double time, const std::vector<Route>& per_drone,
                             double j_init, double j_final) {
    PlanLogEntry entry;
    entry.plan_index = static_cast<int>(rec.plans.size());
    entry.time = time;
    entry.j_init = j_init;
    entry.j_final = j_final;
    entry.mean_grid_variance = mean_map_variance(model, cand_grid);
    entry.routes = per_drone;
    rec.plans.push_back(std::move(entry));
  };

  auto make_ipp_plan = [&](double time) {
    const std::vector<Vec2> init = initial_inducing_points(model, cfg.planner_cfg);
    const InducingResult opt = optimize_inducing_points(model, cfg.planner_cfg, init);
    std::vector<Route> routes = partition_routes(
        opt.points, n, cfg.planner_cfg.points_per_drone);
    const std::vector<int> perm = assign_routes(routes, current_positions());
    std::vector<Route> per_drone(n);
    for (int i = 0; i < n; ++i) per_drone[i] = routes[perm[i]];
    for (int i = 0; i < n; ++i) navs[i] = DroneNav{per_drone[i].waypoints, 0, false};
    log_routes_plan(time, per_drone, opt.j_init, opt.j_final);
  };

  switch (cfg.planner) {
    case PlannerKind::fixed_waypoints:
      for (int i = 0; i < n; ++i)
        navs[i] = DroneNav{{cfg.waypoint_pairs[i].first, cfg.waypoint_pairs[i].second},
                           0,
                           true};
      break;
    case PlannerKind::boustrophedon: {
      // Equal horizontal bands, one serpentine per band, optimally paired.
      std::vector<Route> routes;
      const double band_h = cfg.bounds.height() / n;
      for (int b = 0; b < n; ++b) {
        Rect band{cfg.bounds.xmin, cfg.bounds.ymin + b * band_h, cfg.bounds.xmax,
                  cfg.bounds.ymin + (b + 1) * band_h};
        routes.push_back(boustrophedon_path(band, cfg.planner_cfg.lane_spacing,
                                            {band.xmin, band.ymin}));
      }
      const std::vector<int> perm = assign_routes(routes, current_positions());
      std::vector<Route> per_drone(n);
      for (int i = 0; i < n; ++i) per_drone[i] = routes[perm[i]];
      for (int i = 0; i < n; ++i) navs[i] = DroneNav{per_drone[i].waypoints, 0, true};
      log_routes_plan(0.0, per_drone, 0.0, 0.0);
      break;
    }
    case PlannerKind::ipp:
      make_ipp_plan(0.0);
      break;
  }

  // Initial observations (timestep 0) seed the step deltas of tick 1.
  std::vector<TickLog> ticks;
  {
    TickLog t0;
    for (int i = 0; i < n; ++i)
      t0.observations.push_back(sense(cfg.field, states, i, cfg.noise, rngs[i], 0));
    t0.states = states;
    t0.estimates = estimates;
    ticks.push_back(std::move(t0));
  }

  const Vec2 anchor_position = ticks[0].observations[cfg.anchor.drone_id].gps;
  const Vec2 anchor_bias =
      cfg.anchor.known_bias
          ? *cfg.anchor.known_bias
          : eval_bias(cfg.field, states[cfg.anchor.drone_id].position);

  std::vector<Delta> deltas;
  int solve_count = 0;

  for (int k = 1; k <= total_ticks; ++k) {
    const double t = k * cfg.dt;

    for (int i = 0; i < n; ++i) {
      navs[i].advance(estimates[i].position, cfg.arrive_tol);
      const Action a = navs[i].control(estimates[i], cfg.limits, cfg.dt, cfg.arrive_tol);
      states[i] = step(states[i], a, cfg.dt, cfg.noise.process_sigma, rngs[i]);
      estimates[i] = dead_reckon(estimates[i], a, cfg.dt);
    }

    TickLog tick;
    for (int i = 0; i < n; ++i)
      tick.observations.push_back(sense(cfg.field, states, i, cfg.noise, rngs[i], k));
    tick.states = states;
    tick.estimates = estimates;

    const TickLog& prev = ticks.back();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        deltas.push_back(
            make_pair_delta(tick.observations[i], tick.observations[j]));
        rec.deltas.push_back({deltas.back(), DeltaKind::pair, k});
      }
      deltas.push_back(make_step_delta(tick.observations[i], prev.observations[i],
                                       tick.estimates[i], prev.estimates[i]));
      rec.deltas.push_back({deltas.back(), DeltaKind::step, k});
    }
    ticks.push_back(std::move(tick));

    RmseRecord rr;
    rr.time = t;
    rr.n_deltas = static_cast<int>(deltas.size());

    if (t + 1e-9 >= cfg.sbe_start) {
      DeltaGraph graph;
      bool solved = false;
      try {
        graph = build_graph(deltas, anchor_position, anchor_bias, kMergeTol);
        rec.final_estimates = solve_biases(graph);
        solved = true;
      } catch (const std::runtime_error&) {
        rec.anchor_warning = true;
      }

      if (solved) {
        ++solve_count;
        rec.n_nodes = static_cast<int>(graph.nodes.size());
        rr.n_nodes = rec.n_nodes;

        // Truth position per node: the true pose that produced the reading.
        rec.final_truth_positions.assign(graph.nodes.size(), Vec2::Zero());
        for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
          bool found = false;
          for (const TickLog& tl : ticks) {
            for (int i = 0; i < n && !found; ++i) {
              if ((tl.observations[i].gps - graph.nodes[v]).norm() <= kMergeTol) {
                rec.final_truth_positions[v] = tl.states[i].position;
                found = true;
              }
            }
            if (found) break;
          }
          if (!found) rec.final_truth_positions[v] = graph.nodes[v];
        }

        std::vector<Vec2> gp_inputs, gp_targets;
        for (const auto& e : rec.final_estimates.entries) {
          if (!e.reachable) continue;
          gp_inputs.push_back(e.position);
          gp_targets.push_back(e.bias);
        }
        if (static_cast<int>(gp_inputs.size()) > cfg.gp_node_cap) {
          rec.gp_nodes_capped = true;
          std::vector<Vec2> in2, tg2;
          const double stride = gp_inputs.size() / double(cfg.gp_node_cap);
          for (int m = 0; m < cfg.gp_node_cap; ++m) {
            const auto idx = static_cast<std::size_t>(m * stride);
            in2.push_back(gp_inputs[idx]);
            tg2.push_back(gp_targets[idx]);
          }
          gp_inputs = std::move(in2);
          gp_targets = std::move(tg2);
        }

        const bool reoptimize =
            cfg.gp.optimize && gp_inputs.size() >= 3 &&
            (solve_count == 1 || solve_count % cfg.gp.reoptimize_every == 0 ||
             k == total_ticks);
        if (reoptimize)
          h_cur = optimize_hyperparams(gp_inputs, gp_targets, h_cur, cfg.gp.bounds,
                                       cfg.seed).params;
        model = GpModel::fit(gp_inputs, gp_targets, h_cur);

        rr.solver_rmse =
            solver_rmse_at(rec.final_estimates, cfg.field, rec.final_truth_positions);
      }
    }

    rr.map_rmse = map_rmse(model, cfg.field, eval_grid);
    rec.rmse.push_back(rr);

    if (cfg.planner == PlannerKind::ipp) {
      std::vector<RouteProgress> progress(n);
      for (int i = 0; i < n; ++i)
        progress[i] = RouteProgress{Route{navs[i].waypoints}, navs[i].next};
      if (replan_trigger(progress)) make_ipp_plan(t);
    }
  }

  rec.final_model = model;
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t_start)
                    .count();

  if (!cfg.output_dir.empty()) write_exports(rec, ticks, eval_grid);
  return rec;
}

namespace {

void write_exports(const ExperimentRecord& rec, const std::vector<TickLog>& ticks,
                   const std::vector<Vec2>& eval_grid) {
  namespace fs = std::filesystem;
  const fs::path dir(rec.config.output_dir);
  fs::create_directories(dir);
  const std::string planner = planner_name(rec.config.planner);

  {
    CsvWriter w((dir / "rmse.csv").string(),
                {"time_s", "solver_rmse_m", "map_rmse_m", "n_deltas", "n_nodes",
                 "planner", "seed"});
    for (const auto& r : rec.rmse)
      w.row(r.time, r.solver_rmse ? g9(*r.solver_rmse) : std::string(), r.map_rmse,
            r.n_deltas, r.n_nodes, planner, rec.config.seed);
  }

  export_map_grid(rec.final_model, rec.config.bounds, rec.config.eval_grid_spacing,
                  (dir / "map_grid.csv").string());
  (void)eval_grid;

  {
    CsvWriter w((dir / "deltas.csv").string(),
                {"p1x", "p1y", "p2x", "p2y", "dx", "dy", "kind", "timestep"});
    for (const auto& d : rec.deltas)
      w.row(d.delta.p1.x(), d.delta.p1.y(), d.delta.p2.x(), d.delta.p2.y(),
            d.delta.delta.x(), d.delta.delta.y(),
            d.kind == DeltaKind::pair ? "pair" : "step", d.timestep);
  }

  {
    CsvWriter w((dir / "routes.csv").string(),
                {"plan_index", "drone_id", "waypoint_order", "x", "y"});
    for (const auto& plan : rec.plans)
      for (std::size_t i = 0; i < plan.routes.size(); ++i)
        for (std::size_t o = 0; o < plan.routes[i].waypoints.size(); ++o)
          w.row(plan.plan_index, i, o, plan.routes[i].waypoints[o].x(),
                plan.routes[i].waypoints[o].y());
  }

  {
    CsvWriter w((dir / "bias_estimates.csv").string(),
                {"x", "y", "bx", "by", "reachable"});
    for (const auto& e : rec.final_estimates.entries)
      w.row(e.position.x(), e.position.y(), e.bias.x(), e.bias.y(),
            e.reachable ? 1 : 0);
  }

  {
    const int n = rec.config.n_drones;
    std::vector<std::string> header{"k",     "id",    "true_x", "true_y",
                                    "est_x", "est_y", "gps_x",  "gps_y"};
    for (int p = 0; p < n - 1; ++p) {
      header.push_back("range_" + std::to_string(p));
      header.push_back("bearing_" + std::to_string(p) + "_x");
      header.push_back("bearing_" + std::to_string(p) + "_y");
    }
    std::ofstream out((dir / "observations.csv").string());
    for (std::size_t h = 0; h < header.size(); ++h)
      out << (h ? "," : "") << header[h];
    out << '\n';
    for (const auto& tick : ticks) {
      for (int i = 0; i < n; ++i) {
        const Observation& o = tick.observations[i];
        out << o.timestep << ',' << i << ',' << g9(tick.states[i].position.x())
            << ',' << g9(tick.states[i].position.y()) << ','
            << g9(tick.estimates[i].position.x()) << ','
            << g9(tick.estimates[i].position.y()) << ',' << g9(o.gps.x()) << ','
            << g9(o.gps.y());
        for (int p = 0; p < n - 1; ++p)
          out << ',' << g9(o.ranges[p]) << ',' << g9(o.bearings[p].x()) << ','
              << g9(o.bearings[p].y());
        out << '\n';
      }
    }
  }

  save_model(rec.final_model, rec.config.bounds, (dir / "model.json").string());

  {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(scenario_config_to_json(rec.config));
    nlohmann::json summary;
    summary["n_nodes"] = rec.n_nodes;
    summary["n_deltas"] = rec.deltas.size();
    summary["wall_ms"] = rec.wall_ms;
    summary["gp_nodes_capped"] = rec.gp_nodes_capped;
    summary["anchor_warning"] = rec.anchor_warning;
    summary["rmse_convention"] =
        "per-component pooled: sqrt(mean(|err|^2 / 2))";
    if (!rec.rmse.empty()) {
      summary["final_map_rmse_m"] = rec.rmse.back().map_rmse;
      if (rec.rmse.back().solver_rmse)
        summary["final_solver_rmse_m"] = *rec.rmse.back().solver_rmse;
    }
    j["summary"] = summary;
    std::ofstream out((dir / "record.json").string());
    out << j.dump(2) << '\n';
  }
}

}  // namespace

std::vector<SweepRow> run_noise_sweep(const ScenarioConfig& base,
                                      const std::vector<double>& sigmas,
                                      const std::vector<std::uint64_t>& seeds,
                                      const std::string& out_dir) {
  if (sigmas.empty() || seeds.empty())
    throw std::invalid_argument("run_noise_sweep: need sigmas and seeds");

  std::vector<SweepRow> table;
  for (double sigma : sigmas) {
    SweepRow row;
    row.sigma = sigma;
    double sum_solver = 0.0, sum_map = 0.0;
    for (std::uint64_t seed : seeds) {
      ScenarioConfig cfg = base;
      // Isolate the process-noise effect; sigma = 0 must be exact.
      cfg.noise = cfg.noise.with_all_zero();
      cfg.noise.process_sigma = sigma;
      cfg.seed = seed;
      cfg.output_dir.clear();
      try {
        const ExperimentRecord rec = run_scenario(cfg);
        if (rec.rmse.empty() || !rec.rmse.back().solver_rmse)
          throw std::runtime_error("run produced no solver RMSE");
        sum_solver += *rec.rmse.back().solver_rmse;
        sum_map += rec.rmse.back().map_rmse;
        ++row.runs_ok;
      } catch (const std::exception&) {
        ++row.runs_failed;
      }
    }
    if (row.runs_ok > 0) {
      row.mean_solver_rmse = sum_solver / row.runs_ok;
      row.mean_map_rmse = sum_map / row.runs_ok;
    }
    table.push_back(row);
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    CsvWriter w(out_dir + "/sweep.csv",
                {"sigma_m", "mean_solver_rmse_m", "mean_map_rmse_m", "runs_ok",
                 "runs_failed"});
    for (const auto& r : table)
      w.row(r.sigma, r.mean_solver_rmse, r.mean_map_rmse, r.runs_ok, r.runs_failed);
  }
  return table;
}

ComparisonTrace run_comparison(const ScenarioConfig& cfg_ipp,
                               const ScenarioConfig& cfg_bous,
                               const std::vector<std::uint64_t>& seeds,
                               const std::string& out_dir) {
  if (seeds.empty()) throw std::invalid_argument("run_comparison: need seeds");
  {
    auto strip = [](const ScenarioConfig& c) {
      nlohmann::json j = nlohmann::json::parse(scenario_config_to_json(c));
      j.erase("planner");
      return j.dump();
    };
    if (strip(cfg_ipp) != strip(cfg_bous))
      throw std::invalid_argument("run_comparison: configs must differ only in planner");
  }

  ComparisonTrace trace;
  std::vector<std::vector<double>> ipp_runs, bous_runs;
  for (std::uint64_t seed : seeds) {
    for (const ScenarioConfig* base : {&cfg_ipp, &cfg_bous}) {
      ScenarioConfig cfg = *base;
      cfg.seed = seed;
      cfg.output_dir.clear();
      const ExperimentRecord rec = run_scenario(cfg);
      std::vector<double> series;
      series.reserve(rec.rmse.size());
      for (const auto& r : rec.rmse) series.push_back(r.map_rmse);
      if (trace.time.empty())
        for (const auto& r : rec.rmse) trace.time.push_back(r.time);
      (base == &cfg_ipp ? ipp_runs : bous_runs).push_back(std::move(series));
    }
  }

  const std::size_t len = trace.time.size();
  trace.ipp_mean_map_rmse.assign(len, 0.0);
  trace.bous_mean_map_rmse.assign(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    for (const auto& run : ipp_runs) trace.ipp_mean_map_rmse[t] += run[t];
    for (const auto& run : bous_runs) trace.bous_mean_map_rmse[t] += run[t];
    trace.ipp_mean_map_rmse[t] /= ipp_runs.size();
    trace.bous_mean_map_rmse[t] /= bous_runs.size();
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    CsvWriter w(out_dir + "/comparison.csv",
                {"time_s", "ipp_mean_map_rmse_m", "bous_mean_map_rmse_m"});
    for (std::size_t t = 0; t < len; ++t)
      w.row(trace.time[t], trace.ipp_mean_map_rmse[t], trace.bous_mean_map_rmse[t]);
  }
  return trace;
}

void export_map_grid(const GpModel& model, const Rect& bounds, double spacing,
                     const std::string& path) {
  const std::vector<Vec2> grid = make_eval_grid(bounds, spacing);
  std::vector<Vec2> means;
  std::vector<double> vars;
  model.predict(grid, &means, &vars);
  CsvWriter w(path, {"x", "y", "mean_bx", "mean_by", "variance"});
  for (std::size_t i = 0; i < grid.size(); ++i)
    w.row(grid[i].x(), grid[i].y(), means[i].x(), means[i].y(), vars[i]);
}

void save_model(const GpModel& model, const Rect& bounds, const std::string& path) {
  nlohmann::json j;
  j["hyperparams"] = {{"lengthscale", model.hyperparams().lengthscale},
                      {"signal_variance", model.hyperparams().signal_variance},
                      {"noise_variance", model.hyperparams().noise_variance}};
  j["bounds"] = {bounds.xmin, bounds.ymin, bounds.xmax, bounds.ymax};
  nlohmann::json inputs = nlohmann::json::array(), targets = nlohmann::json::array();
  for (const Vec2& x : model.train_inputs()) inputs.push_back({x.x(), x.y()});
  for (const Vec2& y : model.train_targets()) targets.push_back({y.x(), y.y()});
  j["train_inputs"] = inputs;
  j["train_targets"] = targets;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << '\n';
}

GpModel load_model(const std::string& path, Rect* bounds) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  Hyperparams h{j["hyperparams"]["lengthscale"].get<double>(),
                j["hyperparams"]["signal_variance"].get<double>(),
                j["hyperparams"]["noise_variance"].get<double>()};
  if (bounds)
    *bounds = {j["bounds"][0].get<double>(), j["bounds"][1].get<double>(),
               j["bounds"][2].get<double>(), j["bounds"][3].get<double>()};
  std::vector<Vec2> inputs, targets;
  for (const auto& x : j["train_inputs"]) inputs.emplace_back(x[0].get<double>(), x[1].get<double>());
  for (const auto& y : j["train_targets"]) targets.emplace_back(y[0].get<double>(), y[1].get<double>());
  if (inputs.empty()) return GpModel(h);
  return GpModel::fit(inputs, targets, h);
}

}  // namespace biasmap

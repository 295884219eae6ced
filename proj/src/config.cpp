#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "biasmap/harness.hpp"

namespace biasmap {

using nlohmann::json;

namespace {

json vec2_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec2_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("expected a 2-element array for a vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

json field_to_json(const BiasFieldSpec& spec) {
  return std::visit(
      [](const auto& f) -> json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantField>) {
          return {{"type", "constant"}, {"vector", vec2_to_json(f.vector)}};
        } else if constexpr (std::is_same_v<T, GaussianRadialField>) {
          return {{"type", "gaussian_radial"},
                  {"center", vec2_to_json(f.center)},
                  {"peak_magnitude", f.peak_magnitude},
                  {"sigma", f.sigma}};
        } else if constexpr (std::is_same_v<T, SumField>) {
          json parts = json::array();
          for (const auto& p : f.parts) parts.push_back(field_to_json(p));
          return {{"type", "sum"}, {"parts", parts}};
        } else {
          json values = json::array();
          for (int iy = 0; iy < f.rows; ++iy) {
            json row = json::array();
            for (int ix = 0; ix < f.cols; ++ix)
              row.push_back(vec2_to_json(f.at(ix, iy)));
            values.push_back(row);
          }
          return {{"type", "grid_interp"},
                  {"origin", vec2_to_json(f.origin)},
                  {"spacing", f.spacing},
                  {"values", values}};
        }
      },
      spec.value());
}

BiasFieldSpec field_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant") {
    return ConstantField{vec2_from_json(j.at("vector"))};
  }
  if (type == "gaussian_radial") {
    return GaussianRadialField{vec2_from_json(j.at("center")),
                               j.at("peak_magnitude").get<double>(),
                               j.at("sigma").get<double>()};
  }
  if (type == "sum") {
    SumField f;
    for (const auto& p : j.at("parts")) f.parts.push_back(field_from_json(p));
    return f;
  }
  if (type == "grid_interp") {
    GridInterpField f;
    f.origin = vec2_from_json(j.at("origin"));
    f.spacing = j.at("spacing").get<double>();
    const auto& values = j.at("values");
    f.rows = static_cast<int>(values.size());
    f.cols = f.rows > 0 ? static_cast<int>(values[0].size()) : 0;
    for (const auto& row : values) {
      if (static_cast<int>(row.size()) != f.cols)
        throw std::invalid_argument("grid_interp: ragged value rows");
      for (const auto& v : row) f.values.push_back(vec2_from_json(v));
    }
    return f;
  }
  throw std::invalid_argument("unknown field type: " + type);
}

json rect_to_json(const Rect& r) { return json::array({r.xmin, r.ymin, r.xmax, r.ymax}); }

Rect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw std::invalid_argument("bounds must be [xmin, ymin, xmax, ymax]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>()};
}

PlannerKind planner_from_string(const std::string& s) {
  if (s == "boustrophedon") return PlannerKind::boustrophedon;
  if (s == "ipp") return PlannerKind::ipp;
  if (s == "fixed_waypoints") return PlannerKind::fixed_waypoints;
  throw std::invalid_argument("unknown planner: " + s);
}

json config_to_json_impl(const ScenarioConfig& c) {
  json j;
  j["bounds"] = rect_to_json(c.bounds);
  j["n_drones"] = c.n_drones;
  if (!c.initial_poses.empty()) {
    json poses = json::array();
    for (const auto& p : c.initial_poses)
      poses.push_back(json::array({p.position.x(), p.position.y(), p.heading}));
    j["initial_poses"] = poses;
  } else {
    j["initial_poses"] = "auto";
  }
  j["field"] = field_to_json(c.field);
  j["noise"] = {{"process_sigma", c.noise.process_sigma},
                {"gps_sigma", c.noise.gps_sigma},
                {"bearing_sigma", c.noise.bearing_sigma},
                {"range_sigma", c.noise.range_sigma}};
  j["limits"] = {{"s_max", c.limits.s_max}, {"omega_max", c.limits.omega_max}};
  j["planner"] = planner_name(c.planner);
  if (!c.waypoint_pairs.empty()) {
    json wps = json::array();
    for (const auto& [a, b] : c.waypoint_pairs)
      wps.push_back(json::array({vec2_to_json(a), vec2_to_json(b)}));
    j["waypoints"] = wps;
  }
  j["planner_cfg"] = {
      {"points_per_drone", c.planner_cfg.points_per_drone},
      {"candidate_grid_spacing", c.planner_cfg.candidate_grid_spacing},
      {"lane_spacing", c.planner_cfg.lane_spacing},
      {"optimizer",
       {{"step_size", c.planner_cfg.optimizer.step_size},
        {"max_iters", c.planner_cfg.optimizer.max_iters},
        {"tolerance", c.planner_cfg.optimizer.tolerance}}}};
  j["gp"] = {{"lengthscale", c.gp.hyperparams.lengthscale},
             {"signal_variance", c.gp.hyperparams.signal_variance},
             {"noise_variance", c.gp.hyperparams.noise_variance},
             {"optimize", c.gp.optimize},
             {"reoptimize_every", c.gp.reoptimize_every}};
  j["duration"] = c.duration;
  j["dt"] = c.dt;
  j["sbe_start"] = c.sbe_start;
  j["arrive_tol"] = c.arrive_tol;
  j["eval_grid_spacing"] = c.eval_grid_spacing;
  j["gp_node_cap"] = c.gp_node_cap;
  j["anchor"] = {{"drone_id", c.anchor.drone_id}};
  if (c.anchor.known_bias)
    j["anchor"]["known_bias"] = vec2_to_json(*c.anchor.known_bias);
  else
    j["anchor"]["known_bias"] = "true_bias";
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

void validate_config(const ScenarioConfig& c) {
  if (c.n_drones < 2)
    throw std::invalid_argument("config: n_drones must be >= 2 (pair deltas need peers)");
  if (!(c.duration > c.sbe_start) || c.sbe_start < 0.0)
    throw std::invalid_argument("config: require duration > sbe_start >= 0");
  if (c.dt <= 0.0) throw std::invalid_argument("config: dt must be > 0");
  if (c.anchor.drone_id < 0 || c.anchor.drone_id >= c.n_drones)
    throw std::invalid_argument("config: anchor drone id out of range");
  if (!c.initial_poses.empty() &&
      static_cast<int>(c.initial_poses.size()) != c.n_drones)
    throw std::invalid_argument("config: initial_poses count != n_drones");
  if (c.planner == PlannerKind::fixed_waypoints &&
      static_cast<int>(c.waypoint_pairs.size()) != c.n_drones)
    throw std::invalid_argument("config: fixed_waypoints needs one waypoint pair per drone");
}

}  // namespace

std::string planner_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::boustrophedon: return "boustrophedon";
    case PlannerKind::ipp: return "ipp";
    case PlannerKind::fixed_waypoints: return "fixed_waypoints";
  }
  return "?";
}

std::string scenario_config_to_json(const ScenarioConfig& cfg) {
  return config_to_json_impl(cfg).dump(2);
}

ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j = json::parse(in);

  ScenarioConfig c;
  c.bounds = rect_from_json(j.at("bounds"));
  c.n_drones = j.at("n_drones").get<int>();
  if (j.contains("initial_poses") && j["initial_poses"].is_array()) {
    for (const auto& p : j["initial_poses"])
      c.initial_poses.push_back(
          {Vec2(p[0].get<double>(), p[1].get<double>()), p[2].get<double>()});
  }
  c.field = field_from_json(j.at("field"));
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    c.noise.process_sigma = n.value("process_sigma", c.noise.process_sigma);
    c.noise.gps_sigma = n.value("gps_sigma", c.noise.gps_sigma);
    c.noise.bearing_sigma = n.value("bearing_sigma", c.noise.bearing_sigma);
    c.noise.range_sigma = n.value("range_sigma", c.noise.range_sigma);
  }
  if (j.contains("limits")) {
    c.limits.s_max = j["limits"].value("s_max", c.limits.s_max);
    c.limits.omega_max = j["limits"].value("omega_max", c.limits.omega_max);
  }
  c.planner = planner_from_string(j.at("planner").get<std::string>());
  if (j.contains("waypoints")) {
    for (const auto& w : j["waypoints"])
      c.waypoint_pairs.emplace_back(vec2_from_json(w[0]), vec2_from_json(w[1]));
  }
  if (j.contains("planner_cfg")) {
    const auto& p = j["planner_cfg"];
    c.planner_cfg.points_per_drone =
        p.value("points_per_drone", c.planner_cfg.points_per_drone);
    c.planner_cfg.candidate_grid_spacing =
        p.value("candidate_grid_spacing", c.planner_cfg.candidate_grid_spacing);
    c.planner_cfg.lane_spacing = p.value("lane_spacing", c.planner_cfg.lane_spacing);
    if (p.contains("optimizer")) {
      const auto& o = p["optimizer"];
      c.planner_cfg.optimizer.step_size =
          o.value("step_size", c.planner_cfg.optimizer.step_size);
      c.planner_cfg.optimizer.max_iters =
          o.value("max_iters", c.planner_cfg.optimizer.max_iters);
      c.planner_cfg.optimizer.tolerance =
          o.value("tolerance", c.planner_cfg.optimizer.tolerance);
    }
  }
  if (j.contains("gp")) {
    const auto& g = j["gp"];
    c.gp.hyperparams.lengthscale = g.value("lengthscale", c.gp.hyperparams.lengthscale);
    c.gp.hyperparams.signal_variance =
        g.value("signal_variance", c.gp.hyperparams.signal_variance);
    c.gp.hyperparams.noise_variance =
        g.value("noise_variance", c.gp.hyperparams.noise_variance);
    c.gp.optimize = g.value("optimize", c.gp.optimize);
    c.gp.reoptimize_every = g.value("reoptimize_every", c.gp.reoptimize_every);
  }
  c.duration = j.value("duration", c.duration);
  c.dt = j.value("dt", c.dt);
  c.sbe_start = j.value("sbe_start", c.sbe_start);
  c.arrive_tol = j.value("arrive_tol", c.arrive_tol);
  c.eval_grid_spacing = j.value("eval_grid_spacing", c.eval_grid_spacing);
  c.gp_node_cap = j.value("gp_node_cap", c.gp_node_cap);
  if (j.contains("anchor")) {
    c.anchor.drone_id = j["anchor"].value("drone_id", 0);
    if (j["anchor"].contains("known_bias") && j["anchor"]["known_bias"].is_array())
      c.anchor.known_bias = vec2_from_json(j["anchor"]["known_bias"]);
  }
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);

  c.planner_cfg.n_drones = c.n_drones;
  c.planner_cfg.bounds = c.bounds;
  validate_config(c);
  return c;
}

namespace {

// Smooth low-amplitude perturbation used by the validation preset; the
// experiment's truth field is declared here, in config, not hard-coded in
// the simulator.
GridInterpField make_perturbation_grid() {
  GridInterpField f;
  f.origin = {0.0, 0.0};
  f.spacing = 10.0;
  f.cols = 6;
  f.rows = 6;
  for (int iy = 0; iy < 6; ++iy)
    for (int ix = 0; ix < 6; ++ix)
      f.values.emplace_back(0.5 * std::sin(0.9 * ix + 0.3 * iy),
                            0.5 * std::cos(0.7 * iy - 0.4 * ix));
  return f;
}

}  // namespace

ScenarioConfig sbe_validation_preset() {
  ScenarioConfig c;
  c.bounds = {0.0, 0.0, 50.0, 50.0};
  c.n_drones = 7;
  c.field = SumField{{BiasFieldSpec(ConstantField{{3.0, 1.0}}),
                      BiasFieldSpec(make_perturbation_grid())}};
  c.noise.process_sigma = 0.05;
  c.planner = PlannerKind::fixed_waypoints;
  // Segments spread over the field; each drone shuttles between its pair.
  c.waypoint_pairs = {
      {{5.0, 5.0}, {20.0, 7.0}},   {{30.0, 5.0}, {45.0, 9.0}},
      {{5.0, 25.0}, {18.0, 20.0}}, {{24.0, 26.0}, {38.0, 30.0}},
      {{40.0, 18.0}, {46.0, 33.0}}, {{5.0, 45.0}, {18.0, 39.0}},
      {{30.0, 45.0}, {44.0, 41.0}}};
  for (const auto& [a, b] : c.waypoint_pairs) {
    const Vec2 d = b - a;
    c.initial_poses.push_back({a, wrap_angle(std::atan2(d.y(), d.x()))});
  }
  // 29 ticks at 0.2 s: 7 drones x 30 readings = 210 measured positions.
  c.duration = 5.8;
  c.dt = 0.2;
  c.sbe_start = 0.0;
  c.gp.optimize = true;
  c.anchor.drone_id = 0;
  c.seed = 1;
  c.planner_cfg.n_drones = c.n_drones;
  c.planner_cfg.bounds = c.bounds;
  return c;
}

ScenarioConfig ipp_comparison_preset(PlannerKind planner) {
  ScenarioConfig c;
  c.bounds = {0.0, 0.0, 50.0, 50.0};
  c.n_drones = 3;
  c.field = GaussianRadialField{{35.0, 30.0}, 5.0, 10.0};
  c.planner = planner;
  c.limits.s_max = 4.0;
  c.initial_poses = {{{2.0, 2.0}, 0.0}, {{2.0, 20.0}, 0.0}, {{2.0, 36.0}, 0.0}};
  c.duration = 30.0;
  c.dt = 0.2;
  c.sbe_start = 2.0;
  c.anchor.drone_id = 0;
  c.seed = 1;
  c.planner_cfg.n_drones = c.n_drones;
  c.planner_cfg.bounds = c.bounds;
  c.planner_cfg.points_per_drone = 3;
  return c;
}

}  // namespace biasmap

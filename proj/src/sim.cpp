#include "biasmap/sim.hpp"

#include <stdexcept>

namespace biasmap {

namespace {

double draw_normal(std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, sigma);
  return dist(rng);
}

Vec2 draw_normal2(std::mt19937_64& rng, double sigma) {
  const double x = draw_normal(rng, sigma);
  const double y = draw_normal(rng, sigma);
  return {x, y};
}

}  // namespace

std::mt19937_64 make_drone_rng(std::uint64_t scenario_seed, int drone_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(scenario_seed),
                    static_cast<std::uint32_t>(scenario_seed >> 32),
                    static_cast<std::uint32_t>(drone_id), 0x5b1a5u};
  return std::mt19937_64(seq);
}

DroneState step(const DroneState& state, const Action& action, double dt,
                double process_sigma, std::mt19937_64& rng) {
  if (dt <= 0.0) throw std::invalid_argument("step: dt must be > 0");
  DroneState next;
  const Vec2 e = draw_normal2(rng, process_sigma);
  next.position = state.position +
                  Vec2(action.speed * std::cos(state.heading),
                       action.speed * std::sin(state.heading)) * dt +
                  e;
  next.heading = wrap_angle(state.heading + action.angular_velocity * dt);
  return next;
}

Observation sense(const BiasFieldSpec& world, const std::vector<DroneState>& swarm,
                  int i, const NoiseConfig& noise, std::mt19937_64& rng, int timestep) {
  const int n = static_cast<int>(swarm.size());
  if (n < 2) throw std::invalid_argument("sense: need at least 2 drones");
  if (i < 0 || i >= n) throw std::invalid_argument("sense: drone index out of range");

  Observation obs;
  obs.timestep = timestep;
  obs.drone_id = i;

  const Vec2& pi = swarm[i].position;
  obs.gps = pi + eval_bias(world, pi) + draw_normal2(rng, noise.gps_sigma);

  obs.bearings.reserve(n - 1);
  obs.ranges.reserve(n - 1);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const Vec2 rel = pi - swarm[j].position;
    if (rel.norm() < 1e-9)
      throw std::runtime_error("sense: coincident drones (degenerate geometry)");
    // Noise enters inside the norm, additive to the displacement.
    const Vec2 db = rel + draw_normal2(rng, noise.bearing_sigma);
    obs.bearings.push_back(db / db.norm());
    obs.ranges.push_back((rel + draw_normal2(rng, noise.range_sigma)).norm());
  }
  return obs;
}

DroneEstimate dead_reckon(const DroneEstimate& est, const Action& action, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dead_reckon: dt must be > 0");
  DroneEstimate next;
  next.position = est.position +
                  Vec2(action.speed * std::cos(est.heading),
                       action.speed * std::sin(est.heading)) * dt;
  next.heading = wrap_angle(est.heading + action.angular_velocity * dt);
  return next;
}

Action waypoint_controller(const DroneEstimate& est, const Vec2& waypoint,
                           const ActionLimits& limits, double dt, double arrive_tol) {
  if (arrive_tol <= 0.0)
    throw std::invalid_argument("waypoint_controller: arrive_tol must be > 0");
  const Vec2 to = waypoint - est.position;
  const double dist = to.norm();
  if (dist <= arrive_tol) return Action{0.0, 0.0};

  const double desired = std::atan2(to.y(), to.x());
  const double err = angle_diff(desired, est.heading);
  const double omega = err / dt;
  const double speed = std::min(limits.s_max, dist / dt);
  return Action::clamped(speed, omega, limits);
}

}  // namespace biasmap

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "biasmap/field.hpp"
#include "biasmap/geometry.hpp"

namespace biasmap {

/// True pose of one drone. Heading is kept wrapped into [0, 2*pi).
struct DroneState {
  Vec2 position{0.0, 0.0};
  double heading = 0.0;
};

/// Dead-reckoned pose estimate; evolves only through dead_reckon().
struct DroneEstimate {
  Vec2 position{0.0, 0.0};
  double heading = 0.0;
};

struct ActionLimits {
  double s_max = 2.0;          // m/s
  double omega_max = kTwoPi / 2.0;  // rad/s
};

/// Commanded (speed, angular velocity); out-of-range commands are clamped.
struct Action {
  double speed = 0.0;
  double angular_velocity = 0.0;

  static Action clamped(double speed, double omega, const ActionLimits& lim) {
    return {std::clamp(speed, 0.0, lim.s_max),
            std::clamp(omega, -lim.omega_max, lim.omega_max)};
  }
};

struct NoiseConfig {
  double process_sigma = 0.05;  // meters, per transition component
  double gps_sigma = 0.01;
  double bearing_sigma = 0.01;
  double range_sigma = 0.01;
  std::uint64_t rng_seed = 0;

  NoiseConfig with_all_zero() const {
    NoiseConfig c = *this;
    c.process_sigma = c.gps_sigma = c.bearing_sigma = c.range_sigma = 0.0;
    return c;
  }
};

/// One drone's per-tick sensor bundle. Peer lists are ordered by ascending
/// peer drone id with self omitted.
struct Observation {
  Vec2 gps{0.0, 0.0};
  std::vector<Vec2> bearings;
  std::vector<double> ranges;
  int timestep = 0;
  int drone_id = 0;

  /// Index of peer `j` within the bearings/ranges lists of observer `i`.
  static int peer_index(int i, int j) { return j < i ? j : j - 1; }
};

/// Deterministic per-drone noise stream derived from (scenario seed, id).
std::mt19937_64 make_drone_rng(std::uint64_t scenario_seed, int drone_id);

/// Advances one drone by dt seconds with additive Gaussian process noise.
DroneState step(const DroneState& state, const Action& action, double dt,
                double process_sigma, std::mt19937_64& rng);

/// Samples drone i's GPS/bearing/range bundle against the rest of the swarm.
/// Throws on coincident drones (pairwise distance < 1e-9 before noise).
Observation sense(const BiasFieldSpec& world, const std::vector<DroneState>& swarm,
                  int i, const NoiseConfig& noise, std::mt19937_64& rng, int timestep);

/// Noise-free application of the motion model to the estimate.
DroneEstimate dead_reckon(const DroneEstimate& est, const Action& action, double dt);

/// Proportional heading controller toward `waypoint`; returns the zero
/// action within arrive_tol.
Action waypoint_controller(const DroneEstimate& est, const Vec2& waypoint,
                           const ActionLimits& limits, double dt, double arrive_tol);

}  // namespace biasmap

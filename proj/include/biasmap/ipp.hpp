#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "biasmap/geometry.hpp"
#include "biasmap/gpr.hpp"

namespace biasmap {

/// Ordered waypoint list for one drone.
struct Route {
  std::vector<Vec2> waypoints;
};

struct InducingOptimizerConfig {
  double step_size = 0.5;  // meters
  int max_iters = 100;
  double tolerance = 1e-6;
};

struct PlannerConfig {
  int n_drones = 1;
  int points_per_drone = 3;
  Rect bounds;
  double candidate_grid_spacing = 2.5;
  InducingOptimizerConfig optimizer;
  double lane_spacing = 10.0;  // boustrophedon
};

/// Mean posterior variance over `candidates` as if noiseless measurements
/// were added at Z on top of the model's training data.
double inducing_objective(const GpModel& model, const std::vector<Vec2>& candidates,
                          const std::vector<Vec2>& inducing_points);

/// Default initialization: highest-variance candidate grid points spread by
/// farthest-point sampling.
std::vector<Vec2> initial_inducing_points(const GpModel& model,
                                          const PlannerConfig& cfg);

struct InducingResult {
  std::vector<Vec2> points;
  double j_init = 0.0;
  double j_final = 0.0;
  int iterations = 0;
};

/// Pattern-search descent of the variance objective with projection onto
/// bounds. Guarantees j_final <= j_init.
InducingResult optimize_inducing_points(const GpModel& model, const PlannerConfig& cfg,
                                        std::vector<Vec2> init);

/// Balanced clustering of n*p points into n routes of exactly p waypoints,
/// each ordered by nearest-neighbor chaining.
std::vector<Route> partition_routes(const std::vector<Vec2>& points, int n, int p);

/// Minimum-cost drone->route pairing on C_ij = |P_i - R_j[0]|; ties broken
/// toward the lexicographically smallest permutation. Returns pi with
/// pi[i] = route index assigned to drone i.
std::vector<int> assign_routes(const std::vector<Route>& routes,
                               const std::vector<Vec2>& positions);

/// O(n^3) optimal linear assignment with lexicographic tie-breaking,
/// exposed for direct testing against permutation enumeration.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// Serpentine coverage path: lanes parallel to the x-axis spaced
/// lane_spacing apart, starting at the corner of `bounds` nearest
/// start_corner.
Route boustrophedon_path(const Rect& bounds, double lane_spacing,
                         const Vec2& start_corner);

struct RouteProgress {
  Route route;
  std::size_t next_waypoint = 0;

  bool complete() const { return next_waypoint >= route.waypoints.size(); }
};

/// True exactly when every drone has finished its assigned route.
bool replan_trigger(const std::vector<RouteProgress>& progress);

}  // namespace biasmap

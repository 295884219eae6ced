#pragma once

#include <optional>
#include <vector>

#include "biasmap/field.hpp"
#include "biasmap/gpr.hpp"
#include "biasmap/sbe.hpp"

namespace biasmap {

struct RmseRecord {
  double time = 0.0;  // seconds
  std::optional<double> solver_rmse;  // absent before the first solve
  double map_rmse = 0.0;
  int n_deltas = 0;
  int n_nodes = 0;
};

/// Per-component pooled RMSE: sqrt(mean |err|^2 / 2), both components in
/// the mean.
double pooled_rmse(const std::vector<Vec2>& errors);

/// RMSE of reachable bias estimates against the truth field evaluated at
/// the stored node positions. Throws if no node is reachable.
double solver_rmse(const BiasEstimateSet& estimates, const BiasFieldSpec& truth);

/// Same, but the truth field is evaluated at caller-provided positions
/// (one per node; used to score against the true positions that produced
/// each GPS reading).
double solver_rmse_at(const BiasEstimateSet& estimates, const BiasFieldSpec& truth,
                      const std::vector<Vec2>& truth_positions);

/// Pooled RMSE of the model's predictive mean against truth over a grid.
/// A prior (zero-training) model scores the all-zero map.
double map_rmse(const GpModel& model, const BiasFieldSpec& truth,
                const std::vector<Vec2>& grid);

/// Mean latent predictive variance over a grid.
double mean_map_variance(const GpModel& model, const std::vector<Vec2>& grid);

}  // namespace biasmap

#include "biasmap/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace biasmap {

double pooled_rmse(const std::vector<Vec2>& errors) {
  if (errors.empty()) throw std::invalid_argument("pooled_rmse: empty input");
  double acc = 0.0;
  for (const Vec2& e : errors) acc += e.squaredNorm() / 2.0;
  return std::sqrt(acc / errors.size());
}

double solver_rmse(const BiasEstimateSet& estimates, const BiasFieldSpec& truth) {
  std::vector<Vec2> errors;
  for (const auto& e : estimates.entries)
    if (e.reachable) errors.push_back(e.bias - eval_bias(truth, e.position));
  if (errors.empty())
    throw std::invalid_argument("solver_rmse: no reachable estimates");
  return pooled_rmse(errors);
}

double solver_rmse_at(const BiasEstimateSet& estimates, const BiasFieldSpec& truth,
                      const std::vector<Vec2>& truth_positions) {
  if (truth_positions.size() != estimates.entries.size())
    throw std::invalid_argument("solver_rmse_at: position count mismatch");
  std::vector<Vec2> errors;
  for (std::size_t i = 0; i < estimates.entries.size(); ++i)
    if (estimates.entries[i].reachable)
      errors.push_back(estimates.entries[i].bias -
                       eval_bias(truth, truth_positions[i]));
  if (errors.empty())
    throw std::invalid_argument("solver_rmse_at: no reachable estimates");
  return pooled_rmse(errors);
}

double map_rmse(const GpModel& model, const BiasFieldSpec& truth,
                const std::vector<Vec2>& grid) {
  if (grid.empty()) throw std::invalid_argument("map_rmse: empty grid");
  std::vector<Vec2> means;
  model.predict(grid, &means, nullptr);
  std::vector<Vec2> errors(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    errors[i] = means[i] - eval_bias(truth, grid[i]);
  return pooled_rmse(errors);
}

double mean_map_variance(const GpModel& model, const std::vector<Vec2>& grid) {
  if (grid.empty()) throw std::invalid_argument("mean_map_variance: empty grid");
  std::vector<double> vars;
  model.predict(grid, nullptr, &vars);
  double acc = 0.0;
  for (double v : vars) acc += v;
  return acc / vars.size();
}

}  // namespace biasmap

#include "biasmap/ipp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "biasmap/field.hpp"

namespace biasmap {

namespace {

// Posterior-variance evaluator for hypothetical noiseless measurements.
// Caches the per-position solve so coordinate moves only pay for the
// point that changed.
class VarianceReducer {
 public:
  VarianceReducer(const GpModel& model, const std::vector<Vec2>& candidates)
      : model_(model), candidates_(candidates) {
    if (candidates_.empty())
      throw std::invalid_argument("inducing_objective: empty candidate grid");
    const double sf2 = model_.hyperparams().signal_variance;
    jitter_ = 1e-8 * sf2;
    base_var_.resize(candidates_.size());
    vcand_.resize(candidates_.size());
    for (std::size_t c = 0; c < candidates_.size(); ++c) {
      if (model_.size() > 0)
        vcand_[c] = model_.whiten(model_.kernel_vector(candidates_[c]));
      base_var_[c] = sf2 - vcand_[c].squaredNorm();
    }
  }

  double eval(const std::vector<Vec2>& z) {
    const std::size_t m = z.size();
    if (m == 0) {
      double s = 0.0;
      for (double v : base_var_) s += v;
      return s / base_var_.size();
    }

    std::vector<const Column*> cols(m);
    for (std::size_t i = 0; i < m; ++i) cols[i] = &column(z[i]);

    // Posterior covariance among the hypothetical points.
    Eigen::MatrixXd S(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double cov = rbf(z[i], z[j], model_.hyperparams());
        if (model_.size() > 0) cov -= cols[i]->v.dot(cols[j]->v);
        S(i, j) = cov;
        S(j, i) = cov;
      }
    }
    S.diagonal().array() += jitter_;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd Ls = llt.matrixL();

    Eigen::MatrixXd cross(m, candidates_.size());
    for (std::size_t i = 0; i < m; ++i) cross.row(i) = cols[i]->cross.transpose();
    const Eigen::MatrixXd W = Ls.triangularView<Eigen::Lower>().solve(cross);

    double total = 0.0;
    for (std::size_t c = 0; c < candidates_.size(); ++c)
      total += std::max(base_var_[c] - W.col(c).squaredNorm(), 0.0);
    return total / candidates_.size();
  }

 private:
  struct Column {
    Eigen::VectorXd v;      // whitened k(X, z)
    Eigen::VectorXd cross;  // posterior cov(z, candidate) per candidate
  };

  const Column& column(const Vec2& z) {
    const auto key = std::make_pair(z.x(), z.y());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    Column col;
    if (model_.size() > 0) col.v = model_.whiten(model_.kernel_vector(z));
    col.cross.resize(candidates_.size());
    for (std::size_t c = 0; c < candidates_.size(); ++c) {
      double cov = rbf(z, candidates_[c], model_.hyperparams());
      if (model_.size() > 0) cov -= col.v.dot(vcand_[c]);
      col.cross(c) = cov;
    }
    return cache_.emplace(key, std::move(col)).first->second;
  }

  struct PairHash {
    std::size_t operator()(const std::pair<double, double>& p) const {
      const std::size_t a = std::hash<double>()(p.first);
      const std::size_t b = std::hash<double>()(p.second);
      return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    }
  };

  const GpModel& model_;
  const std::vector<Vec2>& candidates_;
  double jitter_ = 0.0;
  std::vector<double> base_var_;
  std::vector<Eigen::VectorXd> vcand_;
  std::unordered_map<std::pair<double, double>, Column, PairHash> cache_;
};

std::vector<Vec2> farthest_point_sample(const std::vector<Vec2>& pool, int count,
                                        int first) {
  std::vector<Vec2> picked{pool[first]};
  std::vector<double> dist(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    dist[i] = (pool[i] - pool[first]).norm();
  while (static_cast<int>(picked.size()) < count) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (dist[i] > dist[best]) best = i;
    picked.push_back(pool[best]);
    for (std::size_t i = 0; i < pool.size(); ++i)
      dist[i] = std::min(dist[i], (pool[i] - pool[best]).norm());
  }
  return picked;
}

}  // namespace

double inducing_objective(const GpModel& model, const std::vector<Vec2>& candidates,
                          const std::vector<Vec2>& inducing_points) {
  VarianceReducer reducer(model, candidates);
  return reducer.eval(inducing_points);
}

std::vector<Vec2> initial_inducing_points(const GpModel& model,
                                          const PlannerConfig& cfg) {
  const std::vector<Vec2> cand =
      make_eval_grid(cfg.bounds, cfg.candidate_grid_spacing);
  const int np = cfg.n_drones * cfg.points_per_drone;
  if (static_cast<int>(cand.size()) < np)
    throw std::invalid_argument("initial_inducing_points: candidate grid too coarse");

  std::vector<double> var;
  GpModel const& m = model;
  m.predict(cand, nullptr, &var);

  const double vmax = *std::max_element(var.begin(), var.end());
  const double vmin = *std::min_element(var.begin(), var.end());

  // Pool of near-maximum-variance candidates; a flat field keeps them all.
  std::vector<int> pool_idx;
  if (vmax - vmin <= 1e-12 * (1.0 + vmax)) {
    for (int i = 0; i < static_cast<int>(cand.size()); ++i) pool_idx.push_back(i);
  } else {
    std::vector<int> order(cand.size());
    for (int i = 0; i < static_cast<int>(cand.size()); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return var[a] > var[b]; });
    const int take = std::max(np, static_cast<int>(cand.size()) / 4);
    pool_idx.assign(order.begin(), order.begin() + take);
  }

  std::vector<Vec2> pool;
  int first = 0;
  double best_var = -1.0;
  for (std::size_t i = 0; i < pool_idx.size(); ++i) {
    pool.push_back(cand[pool_idx[i]]);
    if (var[pool_idx[i]] > best_var) {
      best_var = var[pool_idx[i]];
      first = static_cast<int>(i);
    }
  }
  return farthest_point_sample(pool, np, first);
}

InducingResult optimize_inducing_points(const GpModel& model, const PlannerConfig& cfg,
                                        std::vector<Vec2> init) {
  const std::vector<Vec2> cand =
      make_eval_grid(cfg.bounds, cfg.candidate_grid_spacing);
  VarianceReducer reducer(model, cand);

  for (auto& p : init) p = cfg.bounds.clamp(p);

  InducingResult res;
  res.j_init = reducer.eval(init);
  double j_cur = res.j_init;
  std::vector<Vec2> pts = std::move(init);

  const double s = cfg.optimizer.step_size;
  const Vec2 moves[8] = {{s, 0},  {-s, 0}, {0, s},  {0, -s},
                         {s, s},  {s, -s}, {-s, s}, {-s, -s}};

  for (int it = 0; it < cfg.optimizer.max_iters; ++it) {
    const double j_sweep_start = j_cur;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best_j = j_cur;
      Vec2 best_pos = pts[i];
      const Vec2 orig = pts[i];
      for (const Vec2& mv : moves) {
        const Vec2 trial = cfg.bounds.clamp(orig + mv);
        if ((trial - orig).norm() < 1e-12) continue;
        pts[i] = trial;
        const double j = reducer.eval(pts);
        if (j < best_j - 1e-15) {
          best_j = j;
          best_pos = trial;
        }
      }
      pts[i] = best_pos;
      j_cur = best_j;
    }
    res.iterations = it + 1;
    if (j_sweep_start - j_cur < cfg.optimizer.tolerance) break;
  }

  res.points = std::move(pts);
  res.j_final = j_cur;
  return res;
}

std::vector<Route> partition_routes(const std::vector<Vec2>& points, int n, int p) {
  if (n < 1 || p < 1) throw std::invalid_argument("partition_routes: n, p must be >= 1");
  if (static_cast<int>(points.size()) != n * p)
    throw std::invalid_argument("partition_routes: need exactly n*p points");

  std::vector<Vec2> centers;
  std::vector<int> group(points.size(), -1);
  auto assign = [&] {
    std::fill(group.begin(), group.end(), -1);
    std::vector<int> load(n, 0);
    for (int done = 0; done < static_cast<int>(points.size()); ++done) {
      double best = std::numeric_limits<double>::infinity();
      int bi = -1, bg = -1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (group[i] >= 0) continue;
        for (int g = 0; g < n; ++g) {
          if (load[g] >= p) continue;
          const double d = (points[i] - centers[g]).norm();
          if (d < best) {
            best = d;
            bi = static_cast<int>(i);
            bg = g;
          }
        }
      }
      group[bi] = bg;
      ++load[bg];
    }
  };

  auto recenter = [&] {
    for (int g = 0; g < n; ++g) {
      Vec2 c = Vec2::Zero();
      int cnt = 0;
      for (std::size_t i = 0; i < points.size(); ++i)
        if (group[i] == g) {
          c += points[i];
          ++cnt;
        }
      if (cnt > 0) centers[g] = c / cnt;
    }
  };

  auto refine = [&] {
    for (int sweep = 0; sweep < 2; ++sweep) {
      recenter();
      assign();
    }
    // Pairwise swap refinement keeps groups spatially coherent; the greedy
    // capacity assignment can strand far-apart points in the same group.
    for (int pass = 0; pass < 100; ++pass) {
      recenter();
      double best_gain = 1e-12;
      int bi = -1, bj = -1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
          if (group[i] == group[j]) continue;
          const double cur = (points[i] - centers[group[i]]).squaredNorm() +
                             (points[j] - centers[group[j]]).squaredNorm();
          const double swapped = (points[i] - centers[group[j]]).squaredNorm() +
                                 (points[j] - centers[group[i]]).squaredNorm();
          if (cur - swapped > best_gain) {
            best_gain = cur - swapped;
            bi = static_cast<int>(i);
            bj = static_cast<int>(j);
          }
        }
      }
      if (bi < 0) break;
      std::swap(group[bi], group[bj]);
    }
  };

  // Shortest nearest-neighbor chain over all start members.
  auto chain = [](const std::vector<Vec2>& members) {
    std::vector<Vec2> best_order;
    double best_len = std::numeric_limits<double>::infinity();
    for (std::size_t start = 0; start < members.size(); ++start) {
      std::vector<bool> used(members.size(), false);
      std::vector<Vec2> order{members[start]};
      used[start] = true;
      double len = 0.0;
      std::size_t cur = start;
      for (std::size_t step = 1; step < members.size(); ++step) {
        std::size_t nxt = members.size();
        for (std::size_t i = 0; i < members.size(); ++i) {
          if (used[i]) continue;
          if (nxt == members.size() ||
              (members[i] - members[cur]).norm() < (members[nxt] - members[cur]).norm())
            nxt = i;
        }
        len += (members[nxt] - members[cur]).norm();
        order.push_back(members[nxt]);
        used[nxt] = true;
        cur = nxt;
      }
      if (len < best_len) {
        best_len = len;
        best_order = std::move(order);
      }
    }
    return std::pair(best_order, best_len);
  };

  auto build_routes = [&] {
    std::vector<Route> routes(n);
    double longest = 0.0;
    double total = 0.0;
    for (int g = 0; g < n; ++g) {
      std::vector<Vec2> members;
      for (std::size_t i = 0; i < points.size(); ++i)
        if (group[i] == g) members.push_back(points[i]);
      auto [order, len] = chain(members);
      routes[g].waypoints = std::move(order);
      longest = std::max(longest, len);
      total += len;
    }
    return std::tuple(routes, longest, total);
  };

  // The balanced clustering is seed-sensitive, so try farthest-point seedings
  // from every start and keep the partition whose longest route is shortest
  // (ties broken by total length). Route completion time bounds replanning
  // cadence, so the longest chain is what matters.
  std::vector<Route> best_routes;
  double best_longest = std::numeric_limits<double>::infinity();
  double best_total = std::numeric_limits<double>::infinity();
  for (std::size_t first = 0; first < points.size(); ++first) {
    centers = farthest_point_sample(points, n, static_cast<int>(first));
    assign();
    refine();
    auto [routes, longest, total] = build_routes();
    if (longest < best_longest - 1e-12 ||
        (longest < best_longest + 1e-12 && total < best_total - 1e-12)) {
      best_longest = longest;
      best_total = total;
      best_routes = std::move(routes);
    }
  }
  return best_routes;
}

namespace {

// Classic potential-based Hungarian algorithm, O(n^3).
double hungarian_cost(const Eigen::MatrixXd& cost, std::vector<int>* assignment) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  double total = 0.0;
  if (assignment) assignment->assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (assignment) (*assignment)[p[j] - 1] = j - 1;
    total += cost(p[j] - 1, j - 1);
  }
  return total;
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n == 0 || cost.cols() != n)
    throw std::invalid_argument("solve_assignment: cost matrix must be square and non-empty");

  const double best = hungarian_cost(cost, nullptr);
  const double tol = 1e-9 * (1.0 + std::abs(best));

  // Fix rows in order, always taking the smallest column index that still
  // admits an optimal completion; yields the lexicographically smallest
  // optimal permutation.
  std::vector<int> result(n, -1);
  std::vector<bool> col_used(n, false);
  double prefix = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (col_used[j]) continue;
      const int rest = n - i - 1;
      double completion = 0.0;
      if (rest > 0) {
        Eigen::MatrixXd sub(rest, rest);
        int cc = 0;
        std::vector<int> cols;
        for (int c = 0; c < n; ++c)
          if (!col_used[c] && c != j) cols.push_back(c);
        for (int r = i + 1; r < n; ++r, ++cc)
          for (int c = 0; c < rest; ++c) sub(cc, c) = cost(r, cols[c]);
        completion = hungarian_cost(sub, nullptr);
      }
      if (prefix + cost(i, j) + completion <= best + tol) {
        result[i] = j;
        col_used[j] = true;
        prefix += cost(i, j);
        break;
      }
    }
  }
  return result;
}

std::vector<int> assign_routes(const std::vector<Route>& routes,
                               const std::vector<Vec2>& positions) {
  if (routes.size() != positions.size())
    throw std::invalid_argument("assign_routes: route/position count mismatch");
  const int n = static_cast<int>(routes.size());
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (routes[j].waypoints.empty())
        throw std::invalid_argument("assign_routes: empty route");
      cost(i, j) = (positions[i] - routes[j].waypoints.front()).norm();
    }
  }
  return solve_assignment(cost);
}

Route boustrophedon_path(const Rect& bounds, double lane_spacing,
                         const Vec2& start_corner) {
  if (lane_spacing <= 0.0)
    throw std::invalid_argument("boustrophedon_path: lane_spacing must be > 0");

  std::vector<double> ys;
  if (lane_spacing > bounds.height()) {
    // A single lane covers everything; center it.
    ys.push_back(0.5 * (bounds.ymin + bounds.ymax));
  } else {
    for (double y = bounds.ymin; y <= bounds.ymax + 1e-9; y += lane_spacing)
      ys.push_back(std::min(y, bounds.ymax));
    // Keep every point within lane_spacing/2 of a lane.
    if (bounds.ymax - ys.back() > lane_spacing / 2.0) ys.push_back(bounds.ymax);
  }

  const bool from_left =
      std::abs(start_corner.x() - bounds.xmin) <= std::abs(start_corner.x() - bounds.xmax);
  const bool from_bottom =
      std::abs(start_corner.y() - bounds.ymin) <= std::abs(start_corner.y() - bounds.ymax);
  if (!from_bottom) std::reverse(ys.begin(), ys.end());

  Route route;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const bool rightward = (i % 2 == 0) == from_left;
    const double x0 = rightward ? bounds.xmin : bounds.xmax;
    const double x1 = rightward ? bounds.xmax : bounds.xmin;
    route.waypoints.emplace_back(x0, ys[i]);
    route.waypoints.emplace_back(x1, ys[i]);
  }
  return route;
}

bool replan_trigger(const std::vector<RouteProgress>& progress) {
  if (progress.empty()) return false;
  return std::all_of(progress.begin(), progress.end(),
                     [](const RouteProgress& rp) { return rp.complete(); });
}

}  // namespace biasmap

#include "biasmap/sbe.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <deque>
#include <stdexcept>

namespace biasmap {

namespace {

// Above this node count the dense factorization gives way to CG.
constexpr int kDenseNodeLimit = 2000;

}  // namespace

Delta make_pair_delta(const Observation& obs_i, const Observation& obs_j) {
  if (obs_i.timestep != obs_j.timestep)
    throw std::invalid_argument("make_pair_delta: mismatched timesteps");
  if (obs_i.drone_id == obs_j.drone_id)
    throw std::invalid_argument("make_pair_delta: need two distinct drones");

  const int idx = Observation::peer_index(obs_i.drone_id, obs_j.drone_id);
  if (idx < 0 || idx >= static_cast<int>(obs_i.ranges.size()))
    throw std::invalid_argument("make_pair_delta: peer index out of range");

  const double r = obs_i.ranges[idx];
  const Vec2& b = obs_i.bearings[idx];
  return Delta{obs_i.gps, obs_j.gps, obs_i.gps - obs_j.gps - r * b};
}

Delta make_step_delta(const Observation& obs_k, const Observation& obs_prev,
                      const DroneEstimate& est_k, const DroneEstimate& est_prev) {
  if (obs_k.drone_id != obs_prev.drone_id)
    throw std::invalid_argument("make_step_delta: observations from different drones");
  if (obs_k.timestep != obs_prev.timestep + 1)
    throw std::invalid_argument("make_step_delta: timesteps not consecutive");

  const Vec2 d = (obs_k.gps - est_k.position) - (obs_prev.gps - est_prev.position);
  return Delta{obs_k.gps, obs_prev.gps, d};
}

DeltaGraph build_graph(const std::vector<Delta>& deltas, const Vec2& anchor_position,
                       const Vec2& anchor_bias, double merge_tol) {
  if (merge_tol < 0.0) throw std::invalid_argument("build_graph: merge_tol must be >= 0");
  if (deltas.empty()) throw std::invalid_argument("build_graph: need at least one delta");

  DeltaGraph g;
  auto find_or_add = [&](const Vec2& p) -> int {
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i)
      if ((g.nodes[i] - p).norm() <= merge_tol) return i;
    g.nodes.push_back(p);
    return static_cast<int>(g.nodes.size()) - 1;
  };

  g.edges.reserve(deltas.size());
  for (const Delta& d : deltas) {
    const int a = find_or_add(d.p1);
    const int b = find_or_add(d.p2);
    g.edges.push_back({a, b, d.delta});
  }

  int anchor = -1;
  for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
    if ((g.nodes[i] - anchor_position).norm() <= merge_tol) {
      anchor = i;
      break;
    }
  }
  if (anchor < 0)
    throw std::runtime_error("build_graph: anchor position matches no node");
  g.anchor_node = anchor;
  g.anchor_bias = anchor_bias;
  return g;
}

std::vector<bool> connected_component(const DeltaGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : graph.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<bool> reach(n, false);
  std::deque<int> queue{graph.anchor_node};
  reach[graph.anchor_node] = true;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : adj[v]) {
      if (!reach[w]) {
        reach[w] = true;
        queue.push_back(w);
      }
    }
  }
  return reach;
}

BiasEstimateSet solve_biases(const DeltaGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  if (graph.anchor_node < 0 || graph.anchor_node >= n)
    throw std::invalid_argument("solve_biases: invalid anchor node");

  const std::vector<bool> reach = connected_component(graph);

  // Variable index per reachable non-anchor node.
  std::vector<int> var(n, -1);
  int nvars = 0;
  for (int i = 0; i < n; ++i)
    if (reach[i] && i != graph.anchor_node) var[i] = nvars++;

  BiasEstimateSet out;
  out.anchor_node = graph.anchor_node;
  out.entries.resize(n);
  for (int i = 0; i < n; ++i) {
    out.entries[i].position = graph.nodes[i];
    out.entries[i].reachable = reach[i];
  }
  out.entries[graph.anchor_node].bias = graph.anchor_bias;
  if (nvars == 0) return out;

  // Anchored graph-Laplacian normal equations, shared by both components.
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nvars, 2);
  auto accumulate_rhs = [&](int row, const Vec2& v, double sign) {
    rhs.row(row) += sign * v.transpose();
  };

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(graph.edges.size() * 4);
  for (const auto& e : graph.edges) {
    if (!reach[e.a]) continue;  // both endpoints share a component
    const int va = var[e.a];
    const int vb = var[e.b];
    // Residual: b(a) - b(b) - delta.
    if (va >= 0) {
      trips.emplace_back(va, va, 1.0);
      accumulate_rhs(va, e.delta, 1.0);
      if (vb >= 0) trips.emplace_back(va, vb, -1.0);
      else accumulate_rhs(va, graph.anchor_bias, 1.0);
    }
    if (vb >= 0) {
      trips.emplace_back(vb, vb, 1.0);
      accumulate_rhs(vb, e.delta, -1.0);
      if (va >= 0) trips.emplace_back(vb, va, -1.0);
      else accumulate_rhs(vb, graph.anchor_bias, 1.0);
    }
  }

  Eigen::MatrixXd sol(nvars, 2);
  if (nvars <= kDenseNodeLimit) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nvars, nvars);
    for (const auto& t : trips) A(t.row(), t.col()) += t.value();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("solve_biases: dense factorization failed");
    sol = ldlt.solve(rhs);
    const double resid = (A * sol - rhs).norm();
    if (!sol.allFinite() || resid > 1e-6 * (1.0 + rhs.norm()))
      throw std::runtime_error("solve_biases: ill-conditioned anchored system");
  } else {
    Eigen::SparseMatrix<double> A(nvars, nvars);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                             Eigen::Lower | Eigen::Upper>
        cg(A);
    cg.setTolerance(1e-12);
    cg.setMaxIterations(10 * nvars);
    sol = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
      throw std::runtime_error("solve_biases: conjugate gradient did not converge");
  }

  for (int i = 0; i < n; ++i)
    if (var[i] >= 0) out.entries[i].bias = sol.row(var[i]).transpose();
  return out;
}

}  // namespace biasmap

#include <doctest.h>

#include <Eigen/Dense>
#include <random>
#include <stdexcept>

#include "biasmap/sbe.hpp"

using namespace biasmap;

namespace {

Observation make_obs(int id, int timestep, const Vec2& gps) {
  Observation o;
  o.drone_id = id;
  o.timestep = timestep;
  o.gps = gps;
  return o;
}

// Independent oracle: minimize C over the anchor's connected component by
// stacking one row per edge per axis and solving with column-pivoted QR
// (a different algorithm and code path than the production normal-equations
// solve). The anchor variable is eliminated by substitution.
std::vector<Vec2> oracle_solve(const DeltaGraph& g,
                               const std::vector<bool>& reachable) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<int> var(n, -1);
  int nv = 0;
  for (int i = 0; i < n; ++i)
    if (reachable[i] && i != g.anchor_node) var[i] = nv++;

  std::vector<Vec2> out(n, Vec2::Zero());
  out[g.anchor_node] = g.anchor_bias;
  if (nv == 0) return out;

  for (int axis = 0; axis < 2; ++axis) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.edges.size(), nv);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(g.edges.size());
    int row = 0;
    for (const auto& e : g.edges) {
      if (!reachable[e.a]) continue;  // edges off the component drop out
      double r = e.delta[axis];
      if (e.a == g.anchor_node)
        r -= g.anchor_bias[axis];
      else
        A(row, var[e.a]) += 1.0;
      if (e.b == g.anchor_node)
        r += g.anchor_bias[axis];
      else
        A(row, var[e.b]) -= 1.0;
      rhs(row) = r;
      ++row;
    }
    Eigen::VectorXd x =
        A.topRows(row).colPivHouseholderQr().solve(rhs.head(row));
    for (int i = 0; i < n; ++i)
      if (var[i] >= 0) out[i][axis] = x(var[i]);
  }
  return out;
}

DeltaGraph random_graph(std::mt19937_64& rng, int max_nodes) {
  std::uniform_int_distribution<int> nn(2, max_nodes);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const int n = nn(rng);
  DeltaGraph g;
  for (int i = 0; i < n; ++i) g.nodes.push_back({i * 10.0, u(rng)});
  // Random spanning tree keeps the anchor component nontrivial...
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    g.edges.push_back({parent(rng), i, {u(rng), u(rng)}});
  }
  // ...plus extra edges to create cycles (and inconsistency).
  std::uniform_int_distribution<int> extra(0, n);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int e = extra(rng); e > 0; --e) {
    int a = pick(rng), b = pick(rng);
    if (a != b) g.edges.push_back({a, b, {u(rng), u(rng)}});
  }
  g.anchor_node = pick(rng);
  g.anchor_bias = {u(rng), u(rng)};
  return g;
}

}  // namespace

TEST_CASE("pair delta cancels a uniform bias") {
  Observation oi = make_obs(0, 3, {2.0, 1.0});
  Observation oj = make_obs(1, 3, {5.0, 5.0});
  // True positions (0,0) and (3,4), both biased by (2,1).
  oi.bearings = {Vec2{-0.6, -0.8}};
  oi.ranges = {5.0};
  Delta d = make_pair_delta(oi, oj);
  CHECK(d.delta.norm() < 1e-12);
  CHECK(d.p1 == oi.gps);
  CHECK(d.p2 == oj.gps);
}

TEST_CASE("pair delta recovers a bias difference") {
  // M(P_1)=(1,0) at P_1=(0,0); M(P_2)=(0,0) at P_2=(3,4).
  Observation oi = make_obs(0, 0, {1.0, 0.0});
  Observation oj = make_obs(1, 0, {3.0, 4.0});
  oi.bearings = {Vec2{-0.6, -0.8}};
  oi.ranges = {5.0};
  Delta d = make_pair_delta(oi, oj);
  CHECK((d.delta - Vec2{1.0, 0.0}).norm() < 1e-12);
}

TEST_CASE("pair delta rejects mismatched timesteps") {
  Observation oi = make_obs(0, 1, {0.0, 0.0});
  Observation oj = make_obs(1, 2, {1.0, 1.0});
  oi.bearings = {Vec2{1.0, 0.0}};
  oi.ranges = {1.0};
  CHECK_THROWS_AS(make_pair_delta(oi, oj), std::invalid_argument);
}

TEST_CASE("step delta vanishes for a constant field") {
  // Drone moves (0,0) -> (2,0) exactly; constant bias (3,-1) on both reads.
  Observation prev = make_obs(0, 0, {3.0, -1.0});
  Observation cur = make_obs(0, 1, {5.0, -1.0});
  DroneEstimate e0{{0.0, 0.0}, 0.0}, e1{{2.0, 0.0}, 0.0};
  Delta d = make_step_delta(cur, prev, e1, e0);
  CHECK(d.delta.norm() < 1e-12);
}

TEST_CASE("step delta vanishes for a stationary drone") {
  Observation prev = make_obs(0, 4, {1.0, 2.0});
  Observation cur = make_obs(0, 5, {1.0, 2.0});
  DroneEstimate e{{0.5, 0.5}, 0.0};
  Delta d = make_step_delta(cur, prev, e, e);
  CHECK(d.delta.norm() < 1e-12);
}

TEST_CASE("step delta captures a linear bias gradient") {
  // Bias x-component grows 0.1 per meter of x; drone moves +5 m in x with
  // exact dead reckoning. gps = P + M(P).
  Observation prev = make_obs(0, 0, {0.0, 0.0});
  Observation cur = make_obs(0, 1, {5.5, 0.0});  // 5 + 0.1*5
  DroneEstimate e0{{0.0, 0.0}, 0.0}, e1{{5.0, 0.0}, 0.0};
  Delta d = make_step_delta(cur, prev, e1, e0);
  CHECK((d.delta - Vec2{0.5, 0.0}).norm() < 1e-12);
}

TEST_CASE("step delta rejects id and timestep mismatches") {
  Observation prev = make_obs(0, 0, {0.0, 0.0});
  Observation wrong_id = make_obs(1, 1, {1.0, 0.0});
  Observation wrong_k = make_obs(0, 2, {1.0, 0.0});
  DroneEstimate e{{0.0, 0.0}, 0.0};
  CHECK_THROWS_AS(make_step_delta(wrong_id, prev, e, e), std::invalid_argument);
  CHECK_THROWS_AS(make_step_delta(wrong_k, prev, e, e), std::invalid_argument);
}

TEST_CASE("build_graph merges shared endpoints") {
  std::vector<Delta> deltas{{{0.0, 0.0}, {5.0, 5.0}, {1.0, 0.0}},
                            {{5.0, 5.0}, {9.0, 1.0}, {0.0, 1.0}}};
  DeltaGraph g = build_graph(deltas, {0.0, 0.0}, {0.0, 0.0});
  CHECK(g.nodes.size() == 3);
  CHECK(g.edges.size() == 2);
}

TEST_CASE("build_graph merges within tolerance, first-come representative") {
  std::vector<Delta> deltas{{{5.0, 5.0}, {0.0, 0.0}, {0.0, 0.0}},
                            {{5.0005, 5.0}, {9.0, 1.0}, {0.0, 0.0}}};
  DeltaGraph g = build_graph(deltas, {0.0, 0.0}, {0.0, 0.0}, 1e-3);
  CHECK(g.nodes.size() == 3);
  CHECK((g.nodes[0] - Vec2{5.0, 5.0}).norm() == 0.0);
}

TEST_CASE("build_graph rejects an anchor matching no node") {
  std::vector<Delta> deltas{{{0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}}};
  CHECK_THROWS_AS(build_graph(deltas, {30.0, 30.0}, {0.0, 0.0}),
                  std::runtime_error);
}

TEST_CASE("connected_component reachability") {
  // Chain anchor--a--b plus a disjoint pair c--d.
  std::vector<Delta> deltas{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}},
                            {{1.0, 0.0}, {2.0, 0.0}, {0.0, 0.0}},
                            {{10.0, 0.0}, {11.0, 0.0}, {0.0, 0.0}}};
  DeltaGraph g = build_graph(deltas, {0.0, 0.0}, {0.0, 0.0});
  auto reach = connected_component(g);
  REQUIRE(reach.size() == 5);
  CHECK(reach[0]);
  CHECK(reach[1]);
  CHECK(reach[2]);
  CHECK(!reach[3]);
  CHECK(!reach[4]);

  DeltaGraph lone;
  lone.nodes = {{0.0, 0.0}, {1.0, 1.0}};
  lone.anchor_node = 1;
  auto r2 = connected_component(lone);
  CHECK(!r2[0]);
  CHECK(r2[1]);
}

TEST_CASE("single anchored edge solves in closed form") {
  DeltaGraph g;
  g.nodes = {{0.0, 0.0}, {1.0, 0.0}};
  g.edges = {{0, 1, {1.0, 2.0}}};
  g.anchor_node = 0;
  g.anchor_bias = {0.0, 0.0};
  auto est = solve_biases(g);
  CHECK((est.entries[1].bias - Vec2{-1.0, -2.0}).norm() < 1e-12);
  CHECK(est.entries[0].bias == g.anchor_bias);  // bit-exact anchor
}

TEST_CASE("consistent triangle is recovered exactly") {
  DeltaGraph g;
  g.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  g.edges = {{0, 1, {1.0, -2.0}}, {1, 2, {2.0, 5.0}}, {2, 0, {-3.0, -3.0}}};
  g.anchor_node = 0;
  g.anchor_bias = {4.0, 4.0};
  auto est = solve_biases(g);
  CHECK((est.entries[1].bias - Vec2{3.0, 6.0}).norm() < 1e-10);
  CHECK((est.entries[2].bias - Vec2{1.0, 1.0}).norm() < 1e-10);
}

TEST_CASE("inconsistent triangle matches the quadratic-minimization oracle") {
  const double eps = 0.3;
  DeltaGraph g;
  g.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  g.edges = {{0, 1, {1.0 + eps, 0.0}}, {1, 2, {2.0, 0.0}}, {2, 0, {-3.0, 0.0}}};
  g.anchor_node = 0;
  g.anchor_bias = {0.0, 0.0};
  auto est = solve_biases(g);
  auto reach = connected_component(g);
  auto oracle = oracle_solve(g, reach);
  for (int i = 0; i < 3; ++i)
    CHECK((est.entries[i].bias - oracle[i]).norm() < 1e-10);

  double C = 0.0;
  for (const auto& e : g.edges)
    C += (est.entries[e.a].bias - est.entries[e.b].bias - e.delta).squaredNorm();
  // Cycle inconsistency eps spreads evenly: each residual eps/3.
  CHECK(C == doctest::Approx(eps * eps / 3.0).epsilon(1e-9));
}

TEST_CASE("solver matches the dense QR oracle on random graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    DeltaGraph g = random_graph(rng, 12);
    auto est = solve_biases(g);
    auto reach = connected_component(g);
    auto oracle = oracle_solve(g, reach);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      CHECK(est.entries[i].reachable == reach[i]);
      if (reach[i]) CHECK((est.entries[i].bias - oracle[i]).norm() < 1e-8);
    }
  }
}

TEST_CASE("gauge covariance: shifting the anchor shifts every estimate") {
  std::mt19937_64 rng(9);
  DeltaGraph g = random_graph(rng, 10);
  auto base = solve_biases(g);
  const Vec2 v{2.5, -1.25};
  DeltaGraph shifted = g;
  shifted.anchor_bias += v;
  auto moved = solve_biases(shifted);
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (base.entries[i].reachable)
      CHECK((moved.entries[i].bias - base.entries[i].bias - v).norm() < 1e-10);
}

TEST_CASE("unreachable nodes are excluded and zeroed") {
  std::vector<Delta> deltas{{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}},
                            {{10.0, 0.0}, {11.0, 0.0}, {5.0, 5.0}}};
  DeltaGraph g = build_graph(deltas, {0.0, 0.0}, {0.0, 0.0});
  auto est = solve_biases(g);
  CHECK(!est.entries[2].reachable);
  CHECK(!est.entries[3].reachable);
  CHECK(est.entries[2].bias.norm() == 0.0);
}

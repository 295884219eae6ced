#pragma once

#include <vector>

#include "biasmap/geometry.hpp"
#include "biasmap/sim.hpp"

namespace biasmap {

/// Relative-bias measurement: between positions p1 and p2, the GPS bias
/// changes by delta, i.e. bias(p1) - bias(p2) ~= delta.
struct Delta {
  Vec2 p1{0.0, 0.0};
  Vec2 p2{0.0, 0.0};
  Vec2 delta{0.0, 0.0};
};

enum class DeltaKind { pair, step };

struct DeltaRecord {
  Delta delta;
  DeltaKind kind = DeltaKind::pair;
  int timestep = 0;
};

/// Deltas with shared endpoints merged into canonical nodes, plus the
/// anchor node whose absolute bias is known.
struct DeltaGraph {
  struct Edge {
    int a = 0;
    int b = 0;
    Vec2 delta{0.0, 0.0};  // bias(node a) - bias(node b) ~= delta
  };

  std::vector<Vec2> nodes;
  std::vector<Edge> edges;
  int anchor_node = 0;
  Vec2 anchor_bias{0.0, 0.0};
};

struct BiasEstimate {
  Vec2 position{0.0, 0.0};
  Vec2 bias{0.0, 0.0};
  bool reachable = false;
};

struct BiasEstimateSet {
  std::vector<BiasEstimate> entries;  // one per DeltaGraph node, same order
  int anchor_node = 0;
};

/// Same-time delta between two drones from drone i's range/bearing to j.
Delta make_pair_delta(const Observation& obs_i, const Observation& obs_j);

/// Consecutive-timestep delta for one drone using its dead-reckoned motion.
Delta make_step_delta(const Observation& obs_k, const Observation& obs_prev,
                      const DroneEstimate& est_k, const DroneEstimate& est_prev);

/// Merges delta endpoints within merge_tol into canonical nodes (first-come
/// representative) and marks the anchor. Throws if the anchor position
/// matches no node within merge_tol.
DeltaGraph build_graph(const std::vector<Delta>& deltas, const Vec2& anchor_position,
                       const Vec2& anchor_bias, double merge_tol = 1e-6);

/// Undirected reachability from the anchor node.
std::vector<bool> connected_component(const DeltaGraph& graph);

/// Minimizes the summed squared delta residuals subject to the anchor
/// equality; x and y solve independently. Unreachable nodes are flagged and
/// left with a zero bias.
BiasEstimateSet solve_biases(const DeltaGraph& graph);

}  // namespace biasmap

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hiernav/grid.hpp"
#include "hiernav/semantic_field.hpp"
#include "hiernav/topo_map.hpp"

namespace hiernav {

struct SamplePointSet {
  std::vector<Vec2> points;
  double density = 4.0;
  std::uint64_t seed = 0;
};

/// floor(density * free_area) points over Free cells. Free cells are grouped
/// into square blocks holding 1/density m^2 each; blocks receive points by
/// systematic sampling on their cumulative free-cell count and each point is
/// jittered uniformly inside a free cell of its block. Deterministic per seed.
SamplePointSet sample_free_points(const OccupancyGrid& grid, double density = 4.0, std::uint64_t seed = 0);

struct GoalParams {
  double tau_sim = 0.2;
  double w_v = 0.5;
};

struct ResolvedGoal {
  Vec2 point;
  std::optional<std::size_t> sample_index;  // none for Position goals
  double similarity = 1.0;
};

/// argmax of combined similarity over the samples (ties -> lowest index),
/// optionally restricted to samples inside `region_constraint`.
ResolvedGoal resolve_goal(const Instruction& instr, const SemanticField& field, const SamplePointSet& samples,
                          const RegionLabeling& labeling, std::optional<int> region_constraint = std::nullopt,
                          const GoalParams& params = {});

/// Nearest cell center within `max_dist` whose clearance is at least
/// `min_clearance`. Throws NotFound when none exists.
Vec2 snap_to_clearance(const OccupancyGrid& grid, std::span<const double> clearance, Vec2 p, double min_clearance, double max_dist);

struct GlobalPlan {
  Vec2 p_start;
  Vec2 p_end;
  int start_region = 0;
  int end_region = 0;
  std::vector<int> entrance_ids;
  std::vector<Vec2> waypoints;
  double total_cost_m = 0.0;
};

/// Search graph: the topo graph plus a virtual start vertex attached to the
/// entrances of the start region and a virtual goal vertex attached to the
/// entrances of the goal region, weighted by intra-region geodesics.
struct SearchGraph {
  int vertex_count = 0;
  int start = 0;
  int goal = 0;
  struct Arc {
    int to;
    double w;
  };
  std::vector<std::vector<Arc>> adjacency;
};

SearchGraph build_search_graph(const TopoGraph& g, const RegionLabeling& labeling, Vec2 p_start, Vec2 p_end);

/// Least-cost entrance sequence from p_start to p_end (Dijkstra).
/// Same region -> empty waypoints, cost = geodesic. Throws Unreachable.
GlobalPlan plan_global(const TopoGraph& g, const RegionLabeling& labeling, Vec2 p_start, Vec2 p_end);

/// Copy of g with both edges of the entrance set to +inf.
TopoGraph penalize_edge(const TopoGraph& g, int entrance_id);

}  // namespace hiernav

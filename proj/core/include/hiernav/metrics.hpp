#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hiernav/grid.hpp"

namespace hiernav {

struct GridPath {
  std::vector<CellIndex> cells;
  double length_m = 0.0;
};

/// 8-connected A* (diagonal cost sqrt(2) * cell, no corner cutting) over Free
/// cells whose clearance is at least `inflation_m`. Cells within `start_slack_m`
/// of the start are exempt from the clearance test. Empty when disconnected.
std::optional<GridPath> grid_shortest_path(const OccupancyGrid& grid, Vec2 start, Vec2 goal, double inflation_m,
                                           double start_slack_m = 0.0);

/// Optimal path length on the static grid inflated by the robot radius.
/// Throws Unreachable when start and goal are disconnected.
double oracle_shortest(const OccupancyGrid& static_grid, Vec2 start, Vec2 goal, double robot_radius_m = 0.2);

struct EpisodeScore {
  bool success = false;
  double path_length_m = 0.0;
  double oracle_length_m = 0.0;
};

/// success * oracle / max(path, oracle); 1 for a successful zero-length oracle.
double spl_contribution(const EpisodeScore& e);

struct SrSpl {
  double sr = 0.0;
  double spl = 0.0;
};

/// Means over episodes; throws InvalidArgument when empty.
SrSpl compute_sr_spl(std::span<const EpisodeScore> episodes);

}  // namespace hiernav

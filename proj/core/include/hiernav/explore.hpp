#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "hiernav/grid.hpp"
#include "hiernav/local_planner.hpp"
#include "hiernav/semantic_field.hpp"
#include "hiernav/sim.hpp"

namespace hiernav {

enum class ExploreMode { Oracle, WallFollow };

const char* to_string(ExploreMode m);
ExploreMode parse_explore_mode(std::string_view s);

struct ExploreParams {
  ExploreMode mode = ExploreMode::Oracle;
  int step_budget = 40000;
  /// Lattice cells the wall follower may occupy keep at least this clearance.
  double lattice_clearance_m = 0.35;
  /// The camera looks to the right of the direction of travel.
  double camera_offset_rad = -std::numbers::pi / 2.0;
  double min_coverage = 0.5;
  DepthParams depth;
};

struct ExploreResult {
  OccupancyGrid memory;
  bool loop_closed = false;
  int steps = 0;
  double path_length_m = 0.0;
  /// Fraction of ground-truth Free cells that memory marks Free.
  double coverage = 0.0;
  std::vector<Vec2> trajectory;
  /// False when the budget ran out below the minimum coverage.
  bool ok = true;
};

/// Integrates a scan into memory: cells before each hit Free, the hit cell Occupied.
void integrate_scan(OccupancyGrid& memory, const DepthScan& scan);

double coverage(const OccupancyGrid& memory, const OccupancyGrid& truth);

/// Incremental mapper. Oracle finishes in one step with the static ground
/// truth. WallFollow keeps the wall on its left on a clearance lattice, scanning
/// to the right every frame, and stops when it re-enters its first lattice
/// state (loop closure) or the budget runs out.
class Explorer {
 public:
  Explorer(World& world, ExploreParams params = {});

  /// One frame; returns true once exploration has finished.
  bool step();
  bool finished() const { return finished_; }
  ExploreResult result() const;

 private:
  void plan_contour();

  World& world_;
  ExploreParams params_;
  OccupancyGrid memory_;
  bool finished_ = false;
  bool loop_closed_ = false;
  int steps_ = 0;
  double path_length_ = 0.0;
  std::vector<Vec2> trajectory_;
  PathFollower follower_;
  bool planned_ = false;
};

/// Runs an Explorer to completion.
ExploreResult explore(World& world, const ExploreParams& params = {});

}  // namespace hiernav

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hiernav/grid.hpp"
#include "hiernav/sim.hpp"

namespace hiernav {

struct LocalParams {
  double window_side_m = 5.0;
  double cell_m = 0.05;
  /// Obstacle dilation: robot radius plus a tracking margin.
  double inflation_m = 0.3;
  double waypoint_spacing_m = 0.5;
  /// Blocked targets snap to the nearest traversable cell within this radius.
  double snap_radius_m = 0.5;
  /// Minimum approach toward an out-of-window waypoint for a partial plan.
  double min_progress_m = 0.1;
};

enum class LocalCell : std::uint8_t { Free, Inflated, Occupied, Unknown };
enum class Provenance : std::uint8_t { Memory, Sensed };

/// Square window around the robot, axis-aligned with the world and snapped to
/// the memory lattice. Unknown cells are traversable.
class LocalCostmap {
 public:
  LocalCostmap() = default;
  LocalCostmap(Vec2 origin, double cell, int n);

  Vec2 origin() const { return origin_; }
  double cell_size() const { return cell_; }
  int side() const { return n_; }
  std::size_t size() const { return cost_.size(); }

  bool in_bounds(CellIndex c) const { return c.col >= 0 && c.row >= 0 && c.col < n_ && c.row < n_; }
  std::size_t index(CellIndex c) const { return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c.col); }
  CellIndex cell_of(std::size_t i) const { return {static_cast<int>(i % static_cast<std::size_t>(n_)), static_cast<int>(i / static_cast<std::size_t>(n_))}; }
  CellIndex world_to_cell(Vec2 p) const;
  Vec2 cell_center(CellIndex c) const;

  LocalCell at(CellIndex c) const { return cost_[index(c)]; }
  Provenance provenance(CellIndex c) const { return prov_[index(c)]; }
  void set(CellIndex c, LocalCell v, Provenance p) {
    cost_[index(c)] = v;
    prov_[index(c)] = p;
  }
  bool traversable(CellIndex c) const {
    return in_bounds(c) && (at(c) == LocalCell::Free || at(c) == LocalCell::Unknown);
  }
  std::size_t count(LocalCell v) const;

 private:
  Vec2 origin_;
  double cell_ = 0.05;
  int n_ = 0;
  std::vector<LocalCell> cost_;
  std::vector<Provenance> prov_;
};

struct ProjectedWaypoint {
  Vec2 offset;  // window frame: relative to the robot, world-aligned axes
  bool clamped = false;
};

/// Offset of v_next from the robot; clamped to the window boundary along the
/// robot -> v_next ray when it falls outside.
ProjectedWaypoint project_waypoint(Vec2 v_next, const Pose2& pose, double window_side_m = 5.0);

/// Memory window, ray-carved by the scans (free before the hit, occupied at
/// the hit; sensed cells override memory), then inflated.
LocalCostmap build_local_costmap(std::span<const DepthScan> scans, const OccupancyGrid& memory, const Pose2& pose,
                                 const LocalParams& params = {});

struct LocalPlan {
  Vec2 target;
  std::vector<CellIndex> cells;  // raw A* path
  std::vector<Vec2> trajectory;  // smoothed; starts at the robot position
  std::vector<Vec2> waypoints;   // W
  double raw_length_m = 0.0;
  double length_m = 0.0;
  /// False when the plan stops short of the target (partial, receding).
  bool reaches_target = true;
};

/// 8-connected A* (no corner cutting) from the robot to `target`, shortcut by
/// line of sight and resampled at <= spacing. A robot standing in an inflated
/// cell may leave through inflated cells within the inflation radius.
/// `beyond` is the true waypoint when `target` was clamped: if the target is
/// unreachable the plan heads for the reachable cell nearest to it instead.
/// Throws LocalBlocked.
LocalPlan plan_local(const LocalCostmap& costmap, Vec2 start, Vec2 target, const LocalParams& params = {},
                     std::optional<Vec2> beyond = std::nullopt);

/// Memory cells hit by the scan within `lookahead_m` that memory holds Free.
std::vector<CellIndex> detect_conflict(const DepthScan& scan, const OccupancyGrid& memory, double lookahead_m = 2.0);

/// Points at arc length k * L / ceil(L / spacing), k = 1..m.
std::vector<Vec2> resample_polyline(std::span<const Vec2> polyline, double spacing);
double polyline_length(std::span<const Vec2> polyline);

struct FollowerParams {
  double heading_tolerance_rad = 0.1;
  double reach_tolerance_m = 0.02;
};

/// Vertex-to-vertex tracker: turns in place when the heading error exceeds
/// the tolerance, otherwise drives at up to max speed with heading correction.
class PathFollower {
 public:
  PathFollower() = default;
  explicit PathFollower(std::vector<Vec2> path, FollowerParams params = {});

  bool done() const { return next_ >= path_.size(); }
  VelocityCmd command(const RobotState& state, double dt = kFrameDt);
  double remaining_m(Vec2 position) const;
  const std::vector<Vec2>& path() const { return path_; }

 private:
  std::vector<Vec2> path_;
  std::size_t next_ = 0;
  FollowerParams params_;
};

}  // namespace hiernav

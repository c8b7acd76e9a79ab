#pragma once

#include <numbers>
#include <vector>

#include "hiernav/geometry.hpp"
#include "hiernav/grid.hpp"
#include "hiernav/scenario.hpp"

namespace hiernav {

/// Default frame period (15 Hz).
inline constexpr double kFrameDt = 1.0 / 15.0;
/// Camera resolution of the original RGB-D setup; recorded, unused in 2D.
inline constexpr int kCameraRows = 480;
inline constexpr int kCameraCols = 640;

struct RobotParams {
  double radius_m = 0.2;
  double max_speed_mps = 0.5;
  double max_yaw_rate_rps = 1.0;
};

struct RobotState {
  Pose2 pose;
  RobotParams params;
  double sim_time_s = 0.0;
};

struct VelocityCmd {
  double v_mps = 0.0;
  double yaw_rate_rps = 0.0;
};

struct StepResult {
  RobotState state;
  bool collision = false;
};

/// Unicycle integration over `dt`. Translation that would make the robot disc
/// overlap an Occupied cell is rejected (yaw still updates).
StepResult step_robot(const OccupancyGrid& grid, const RobotState& state, VelocityCmd cmd, double dt = kFrameDt);

struct DepthParams {
  double fov_rad = std::numbers::pi / 2.0;
  int n_rays = 120;
  double max_range_m = 5.0;
};

struct DepthScan {
  Pose2 pose;
  double fov_rad = std::numbers::pi / 2.0;
  double max_range_m = 5.0;
  std::vector<double> ranges;

  double bearing(std::size_t i) const;
  bool is_hit(std::size_t i) const { return ranges[i] < max_range_m; }
};

/// Distance along the ray to the first Occupied cell (or grid edge), capped at
/// `max_range`. Exact cell traversal.
double cast_ray(const OccupancyGrid& grid, Vec2 origin, double angle, double max_range);

/// Simulated 1 x n_rays depth scan; throws when the pose is not in Free space.
DepthScan simulate_depth(const OccupancyGrid& grid, const Pose2& pose, const DepthParams& params = {});

/// Ground truth for one episode: static layout, dynamic obstacles, and the robot.
class World {
 public:
  explicit World(Scenario scenario, RobotParams params = {});

  const Scenario& scenario() const { return scenario_; }
  const OccupancyGrid& static_grid() const { return static_grid_; }
  /// Current truth, including spawned obstacles.
  const OccupancyGrid& grid() const { return grid_; }
  const RobotState& robot() const { return robot_; }
  void set_robot(const RobotState& r) { robot_ = r; }

  StepResult step(VelocityCmd cmd, double dt = kFrameDt);
  DepthScan scan(const DepthParams& params = {}) const;
  DepthScan scan(const DepthParams& params, double camera_yaw) const;

  /// Adds the obstacles flagged spawn_after_mapping; returns their rectangles.
  std::vector<Rect> spawn_post_mapping_obstacles();

 private:
  Scenario scenario_;
  OccupancyGrid static_grid_;
  OccupancyGrid grid_;
  RobotState robot_;
  bool spawned_ = false;
};

}  // namespace hiernav

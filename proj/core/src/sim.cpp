#include "hiernav/sim.hpp"

#include <cmath>
#include <limits>

#include "hiernav/errors.hpp"

namespace hiernav {

StepResult step_robot(const OccupancyGrid& grid, const RobotState& state, VelocityCmd cmd, double dt) {
  const auto& p = state.params;
  if (std::abs(cmd.v_mps) > p.max_speed_mps + 1e-9 || std::abs(cmd.yaw_rate_rps) > p.max_yaw_rate_rps + 1e-9)
    throw Error(ErrorKind::InvalidArgument, "velocity command exceeds robot limits");

  StepResult out{state, false};
  const double heading = state.pose.yaw + cmd.yaw_rate_rps * dt / 2.0;
  const Vec2 next = state.pose.position + Vec2{std::cos(heading), std::sin(heading)} * (cmd.v_mps * dt);
  out.state.pose.yaw = wrap_angle(state.pose.yaw + cmd.yaw_rate_rps * dt);
  out.state.sim_time_s += dt;
  if (cmd.v_mps != 0.0) {
    if (disc_collides(grid, next, p.radius_m)) out.collision = true;
    else out.state.pose.position = next;
  }
  return out;
}

double DepthScan::bearing(std::size_t i) const {
  if (ranges.size() <= 1) return pose.yaw;
  return pose.yaw - fov_rad / 2.0 + fov_rad * static_cast<double>(i) / static_cast<double>(ranges.size() - 1);
}

double cast_ray(const OccupancyGrid& grid, Vec2 origin, double angle, double max_range) {
  const double c = grid.cell_size();
  const Vec2 dir{std::cos(angle), std::sin(angle)};
  CellIndex cell = grid.world_to_cell(origin);
  const int step_x = dir.x > 0 ? 1 : (dir.x < 0 ? -1 : 0);
  const int step_y = dir.y > 0 ? 1 : (dir.y < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const Rect first = grid.cell_rect(cell);
  double t_max_x = step_x > 0 ? (first.x1 - origin.x) / dir.x : (step_x < 0 ? (first.x0 - origin.x) / dir.x : inf);
  double t_max_y = step_y > 0 ? (first.y1 - origin.y) / dir.y : (step_y < 0 ? (first.y0 - origin.y) / dir.y : inf);
  const double t_delta_x = step_x != 0 ? c / std::abs(dir.x) : inf;
  const double t_delta_y = step_y != 0 ? c / std::abs(dir.y) : inf;

  double t = 0.0;
  while (t < max_range) {
    if (t_max_x < t_max_y) {
      t = t_max_x;
      t_max_x += t_delta_x;
      cell.col += step_x;
    } else {
      t = t_max_y;
      t_max_y += t_delta_y;
      cell.row += step_y;
    }
    if (t >= max_range) break;
    if (!grid.in_bounds(cell) || grid.at(cell) == CellState::Occupied) return std::max(t, 1e-6);
  }
  return max_range;
}

DepthScan simulate_depth(const OccupancyGrid& grid, const Pose2& pose, const DepthParams& params) {
  if (grid.at(pose.position) != CellState::Free) throw Error(ErrorKind::InvalidArgument, "depth pose is not in free space");
  if (params.n_rays < 1 || !(params.max_range_m > 0.0)) throw Error(ErrorKind::InvalidArgument, "bad depth parameters");
  DepthScan scan{pose, params.fov_rad, params.max_range_m, {}};
  scan.ranges.resize(static_cast<std::size_t>(params.n_rays));
  for (std::size_t i = 0; i < scan.ranges.size(); ++i)
    scan.ranges[i] = cast_ray(grid, pose.position, scan.bearing(i), params.max_range_m);
  return scan;
}

World::World(Scenario scenario, RobotParams params)
    : scenario_(std::move(scenario)),
      static_grid_(rasterize(scenario_, false)),
      grid_(static_grid_),
      robot_{scenario_.start, params, 0.0} {
  // Obstacles present from the beginning are part of the truth immediately.
  for (const auto& o : scenario_.dynamic_obstacles)
    if (!o.spawn_after_mapping) paint_rect(grid_, o.rect, CellState::Occupied);
}

StepResult World::step(VelocityCmd cmd, double dt) {
  StepResult r = step_robot(grid_, robot_, cmd, dt);
  robot_ = r.state;
  return r;
}

DepthScan World::scan(const DepthParams& params) const { return scan(params, robot_.pose.yaw); }

DepthScan World::scan(const DepthParams& params, double camera_yaw) const {
  return simulate_depth(grid_, {robot_.pose.position, camera_yaw}, params);
}

std::vector<Rect> World::spawn_post_mapping_obstacles() {
  std::vector<Rect> out;
  if (spawned_) return out;
  spawned_ = true;
  for (const auto& o : scenario_.dynamic_obstacles)
    if (o.spawn_after_mapping) {
      paint_rect(grid_, o.rect, CellState::Occupied);
      out.push_back(o.rect);
    }
  return out;
}

}  // namespace hiernav

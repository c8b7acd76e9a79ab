#include "hiernav/local_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

#include "hiernav/errors.hpp"

namespace hiernav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<std::pair<int, int>, 8> kNeighbors{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

struct Passability {
  const LocalCostmap& map;
  std::vector<std::uint8_t> ok;

  bool operator()(CellIndex c) const { return map.in_bounds(c) && ok[map.index(c)] != 0; }
};

Passability passability(const LocalCostmap& map, CellIndex start, double inflation_m) {
  Passability p{map, std::vector<std::uint8_t>(map.size(), 0)};
  for (std::size_t i = 0; i < map.size(); ++i) p.ok[i] = map.traversable(map.cell_of(i)) ? 1 : 0;
  if (map.at(start) != LocalCell::Inflated) return p;
  // Escape corridor: inflated cells connected to the start, within the inflation radius.
  const Vec2 s = map.cell_center(start);
  std::vector<CellIndex> stack{start};
  p.ok[map.index(start)] = 1;
  while (!stack.empty()) {
    const CellIndex c = stack.back();
    stack.pop_back();
    for (const auto& [dx, dy] : kNeighbors) {
      const CellIndex n{c.col + dx, c.row + dy};
      if (!map.in_bounds(n) || p.ok[map.index(n)] != 0 || map.at(n) != LocalCell::Inflated) continue;
      if (distance(map.cell_center(n), s) > inflation_m) continue;
      p.ok[map.index(n)] = 1;
      stack.push_back(n);
    }
  }
  return p;
}

bool diagonal_allowed(const Passability& pass, CellIndex c, int dx, int dy) {
  if (dx == 0 || dy == 0) return true;
  return pass({c.col + dx, c.row}) && pass({c.col, c.row + dy});
}

bool line_of_sight(const Passability& pass, Vec2 a, Vec2 b) {
  const double len = distance(a, b);
  const double step = pass.map.cell_size() / 4.0;
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    if (!pass(pass.map.world_to_cell(a + (b - a) * t))) return false;
  }
  return true;
}

std::vector<std::uint8_t> reachable_from(const Passability& pass, CellIndex start) {
  const LocalCostmap& map = pass.map;
  std::vector<std::uint8_t> seen(map.size(), 0);
  std::vector<CellIndex> stack{start};
  seen[map.index(start)] = 1;
  while (!stack.empty()) {
    const CellIndex c = stack.back();
    stack.pop_back();
    for (const auto& [dx, dy] : kNeighbors) {
      const CellIndex n{c.col + dx, c.row + dy};
      if (!pass(n) || seen[map.index(n)] != 0 || !diagonal_allowed(pass, c, dx, dy)) continue;
      seen[map.index(n)] = 1;
      stack.push_back(n);
    }
  }
  return seen;
}

std::vector<CellIndex> astar(const Passability& pass, CellIndex start, CellIndex goal) {
  const LocalCostmap& map = pass.map;
  const double c = map.cell_size();
  const auto h = [&](CellIndex a) {
    const double dx = std::abs(a.col - goal.col);
    const double dy = std::abs(a.row - goal.row);
    return c * (std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy));
  };
  std::vector<double> g(map.size(), kInf);
  std::vector<int> parent(map.size(), -1);
  std::vector<std::uint8_t> closed(map.size(), 0);
  using Item = std::tuple<double, double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  g[map.index(start)] = 0.0;
  open.emplace(h(start), h(start), map.index(start));
  const std::size_t goal_i = map.index(goal);
  while (!open.empty()) {
    const auto [f, hv, i] = open.top();
    open.pop();
    if (closed[i] != 0) continue;
    closed[i] = 1;
    if (i == goal_i) break;
    const CellIndex cur = map.cell_of(i);
    for (const auto& [dx, dy] : kNeighbors) {
      const CellIndex n{cur.col + dx, cur.row + dy};
      if (!pass(n) || !diagonal_allowed(pass, cur, dx, dy)) continue;
      const std::size_t ni = map.index(n);
      const double ng = g[i] + ((dx != 0 && dy != 0) ? std::sqrt(2.0) * c : c);
      if (ng < g[ni] - 1e-12) {
        g[ni] = ng;
        parent[ni] = static_cast<int>(i);
        open.emplace(ng + h(n), h(n), ni);
      }
    }
  }
  if (!std::isfinite(g[goal_i])) return {};
  std::vector<CellIndex> path;
  for (int v = static_cast<int>(goal_i); v != -1; v = parent[static_cast<std::size_t>(v)]) path.push_back(map.cell_of(static_cast<std::size_t>(v)));
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

LocalCostmap::LocalCostmap(Vec2 origin, double cell, int n)
    : origin_(origin), cell_(cell), n_(n),
      cost_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), LocalCell::Unknown),
      prov_(cost_.size(), Provenance::Memory) {}

CellIndex LocalCostmap::world_to_cell(Vec2 p) const {
  return {static_cast<int>(std::floor((p.x - origin_.x) / cell_)), static_cast<int>(std::floor((p.y - origin_.y) / cell_))};
}

Vec2 LocalCostmap::cell_center(CellIndex c) const {
  return {origin_.x + (c.col + 0.5) * cell_, origin_.y + (c.row + 0.5) * cell_};
}

std::size_t LocalCostmap::count(LocalCell v) const { return static_cast<std::size_t>(std::count(cost_.begin(), cost_.end(), v)); }

ProjectedWaypoint project_waypoint(Vec2 v_next, const Pose2& pose, double window_side_m) {
  const Vec2 d = v_next - pose.position;
  const double half = window_side_m / 2.0;
  const double m = std::max(std::abs(d.x), std::abs(d.y));
  if (m <= half) return {d, false};
  return {d * (half / m), true};
}

LocalCostmap build_local_costmap(std::span<const DepthScan> scans, const OccupancyGrid& memory, const Pose2& pose,
                                 const LocalParams& params) {
  const double c = params.cell_m;
  const int n = static_cast<int>(std::lround(params.window_side_m / c));
  const Vec2 mo = memory.origin();
  const double half = params.window_side_m / 2.0;
  const Vec2 origin{mo.x + std::floor((pose.position.x - half - mo.x) / c + 0.5) * c,
                    mo.y + std::floor((pose.position.y - half - mo.y) / c + 0.5) * c};
  LocalCostmap map(origin, c, n);

  for (std::size_t i = 0; i < map.size(); ++i) {
    const CellIndex cell = map.cell_of(i);
    switch (memory.at(map.cell_center(cell))) {
      case CellState::Free: map.set(cell, LocalCell::Free, Provenance::Memory); break;
      case CellState::Occupied: map.set(cell, LocalCell::Occupied, Provenance::Memory); break;
      case CellState::Unknown: map.set(cell, LocalCell::Unknown, Provenance::Memory); break;
    }
  }

  for (const auto& scan : scans) {
    for (std::size_t k = 0; k < scan.ranges.size(); ++k) {
      const double a = scan.bearing(k);
      const Vec2 dir{std::cos(a), std::sin(a)};
      const double r = scan.ranges[k];
      const double step = c / 4.0;
      for (double t = 0.0; t < r - 1e-6; t += step) {
        const CellIndex cell = map.world_to_cell(scan.pose.position + dir * t);
        if (!map.in_bounds(cell)) break;
        map.set(cell, LocalCell::Free, Provenance::Sensed);
      }
      if (scan.is_hit(k)) {
        const CellIndex hit = map.world_to_cell(scan.pose.position + dir * (r + 1e-4));
        if (map.in_bounds(hit)) map.set(hit, LocalCell::Occupied, Provenance::Sensed);
      }
    }
  }

  const int reach = static_cast<int>(std::ceil(params.inflation_m / c)) + 1;
  std::vector<std::pair<int, int>> stencil;
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx)
      if (std::hypot(std::max(0.0, std::abs(dx) - 0.5), std::max(0.0, std::abs(dy) - 0.5)) * c < params.inflation_m - 1e-9)
        stencil.emplace_back(dx, dy);
  std::vector<CellIndex> occupied;
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map.at(map.cell_of(i)) == LocalCell::Occupied) occupied.push_back(map.cell_of(i));
  // Memory obstacles just outside the window still constrain cells near its edge.
  for (int row = -reach; row < n + reach; ++row)
    for (int col = -reach; col < n + reach; ++col) {
      const CellIndex out{col, row};
      if (!map.in_bounds(out) && memory.at(map.cell_center(out)) == CellState::Occupied) occupied.push_back(out);
    }
  for (const CellIndex o : occupied)
    for (const auto& [dx, dy] : stencil) {
      const CellIndex nc{o.col + dx, o.row + dy};
      if (!map.in_bounds(nc)) continue;
      const LocalCell v = map.at(nc);
      if (v == LocalCell::Free || v == LocalCell::Unknown) map.set(nc, LocalCell::Inflated, map.provenance(nc));
    }
  return map;
}

LocalPlan plan_local(const LocalCostmap& costmap, Vec2 start, Vec2 target, const LocalParams& params, std::optional<Vec2> beyond) {
  const CellIndex s = costmap.world_to_cell(start);
  if (!costmap.in_bounds(s)) throw Error(ErrorKind::InvalidArgument, "robot outside the local window");
  if (costmap.at(s) == LocalCell::Occupied) throw Error(ErrorKind::LocalBlocked, "robot cell occupied");
  const Passability pass = passability(costmap, s, params.inflation_m);
  const auto endpoint = [&](CellIndex c) { return pass(c) && costmap.traversable(c); };

  const int n = costmap.side();
  CellIndex t = costmap.world_to_cell(target);
  t.col = std::clamp(t.col, 0, n - 1);
  t.row = std::clamp(t.row, 0, n - 1);
  bool exact_target = costmap.world_to_cell(target) == t;
  for (const auto& [dx, dy] : kNeighbors) exact_target = exact_target && costmap.traversable({t.col + dx, t.row + dy});
  exact_target = exact_target && costmap.traversable(t);
  if (!endpoint(t)) {
    std::optional<CellIndex> best;
    double best_d = kInf;
    const int r = static_cast<int>(std::ceil(params.snap_radius_m / costmap.cell_size()));
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const CellIndex c{t.col + dx, t.row + dy};
        if (!endpoint(c)) continue;
        const double d = distance(costmap.cell_center(c), target);
        if (d <= params.snap_radius_m && d < best_d) {
          best_d = d;
          best = c;
        }
      }
    if (!best) {
      if (!beyond) throw Error(ErrorKind::LocalBlocked, "local target blocked");
    } else {
      t = *best;
    }
    exact_target = false;
  }

  const auto reach = reachable_from(pass, s);
  LocalPlan plan;
  plan.target = target;
  CellIndex goal = t;
  if (!endpoint(t) || reach[costmap.index(t)] == 0) {
    if (!beyond) throw Error(ErrorKind::LocalBlocked, "no path to local target");
    std::optional<CellIndex> best;
    double best_d = kInf;
    for (std::size_t i = 0; i < reach.size(); ++i) {
      if (reach[i] == 0 || !costmap.traversable(costmap.cell_of(i))) continue;
      const double d = distance(costmap.cell_center(costmap.cell_of(i)), *beyond);
      if (d < best_d) {
        best_d = d;
        best = costmap.cell_of(i);
      }
    }
    if (!best || distance(start, *beyond) - best_d < params.min_progress_m)
      throw Error(ErrorKind::LocalBlocked, "no progress toward waypoint");
    goal = *best;
    plan.reaches_target = false;
    exact_target = false;
  }

  plan.cells = astar(pass, s, goal);
  if (plan.cells.empty()) throw Error(ErrorKind::LocalBlocked, "no path to local target");
  for (std::size_t i = 1; i < plan.cells.size(); ++i) {
    const CellIndex a = plan.cells[i - 1];
    const CellIndex b = plan.cells[i];
    plan.raw_length_m += (a.col != b.col && a.row != b.row ? std::sqrt(2.0) : 1.0) * costmap.cell_size();
  }

  std::vector<Vec2> pts{start};
  for (std::size_t i = 1; i < plan.cells.size(); ++i) pts.push_back(costmap.cell_center(plan.cells[i]));
  const Vec2 end = exact_target ? target : costmap.cell_center(goal);
  if (plan.cells.size() == 1)
    pts.push_back(end);
  else
    pts.back() = end;

  plan.trajectory.push_back(pts.front());
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t j = pts.size() - 1;
    while (j > i + 1 && !line_of_sight(pass, pts[i], pts[j])) --j;
    plan.trajectory.push_back(pts[j]);
    i = j;
  }
  if (plan.trajectory.size() == 2 && distance(plan.trajectory[0], plan.trajectory[1]) < 1e-9) plan.trajectory.pop_back();
  plan.length_m = polyline_length(plan.trajectory);
  plan.waypoints = resample_polyline(plan.trajectory, params.waypoint_spacing_m);
  return plan;
}

std::vector<CellIndex> detect_conflict(const DepthScan& scan, const OccupancyGrid& memory, double lookahead_m) {
  std::set<CellIndex> cells;
  for (std::size_t k = 0; k < scan.ranges.size(); ++k) {
    if (!scan.is_hit(k) || scan.ranges[k] > lookahead_m) continue;
    const double a = scan.bearing(k);
    const CellIndex hit = memory.world_to_cell(scan.pose.position + Vec2{std::cos(a), std::sin(a)} * (scan.ranges[k] + 1e-4));
    if (memory.in_bounds(hit) && memory.at(hit) == CellState::Free) cells.insert(hit);
  }
  return {cells.begin(), cells.end()};
}

double polyline_length(std::span<const Vec2> polyline) {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) len += distance(polyline[i - 1], polyline[i]);
  return len;
}

std::vector<Vec2> resample_polyline(std::span<const Vec2> polyline, double spacing) {
  const double total = polyline_length(polyline);
  if (total <= 1e-12) return {};
  const auto m = static_cast<int>(std::ceil(total / spacing - 1e-9));
  const double ds = total / m;
  std::vector<Vec2> out;
  std::size_t seg = 1;
  double seg_start = 0.0;
  for (int k = 1; k <= m; ++k) {
    const double s = k == m ? total : k * ds;
    while (seg + 1 < polyline.size() && seg_start + distance(polyline[seg - 1], polyline[seg]) < s) {
      seg_start += distance(polyline[seg - 1], polyline[seg]);
      ++seg;
    }
    const double len = distance(polyline[seg - 1], polyline[seg]);
    const double t = len > 0.0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 1.0;
    out.push_back(polyline[seg - 1] + (polyline[seg] - polyline[seg - 1]) * t);
  }
  return out;
}

PathFollower::PathFollower(std::vector<Vec2> path, FollowerParams params) : path_(std::move(path)), params_(params) {}

VelocityCmd PathFollower::command(const RobotState& state, double dt) {
  const Vec2 p = state.pose.position;
  while (next_ < path_.size() && distance(p, path_[next_]) < params_.reach_tolerance_m) ++next_;
  if (done()) return {};
  const Vec2 d = path_[next_] - p;
  const double err = wrap_angle(std::atan2(d.y, d.x) - state.pose.yaw);
  const double w_max = state.params.max_yaw_rate_rps;
  const double w = std::clamp(err / dt, -w_max, w_max);
  if (std::abs(err) > params_.heading_tolerance_rad) return {0.0, w};
  return {std::min(state.params.max_speed_mps, d.norm() / dt), w};
}

double PathFollower::remaining_m(Vec2 position) const {
  if (done()) return 0.0;
  double r = distance(position, path_[next_]);
  for (std::size_t i = next_ + 1; i < path_.size(); ++i) r += distance(path_[i - 1], path_[i]);
  return r;
}

}  // namespace hiernav

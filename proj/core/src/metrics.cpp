#include "hiernav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "hiernav/errors.hpp"

namespace hiernav {

std::optional<GridPath> grid_shortest_path(const OccupancyGrid& grid, Vec2 start, Vec2 goal, double inflation_m, double start_slack_m) {
  const CellIndex s = grid.world_to_cell(start);
  const CellIndex t = grid.world_to_cell(goal);
  if (!grid.in_bounds(s) || !grid.in_bounds(t)) return std::nullopt;
  const auto clear = clearance_map(grid, inflation_m + grid.cell_size());
  const auto passable = [&](CellIndex c) {
    if (!grid.in_bounds(c) || grid.at(c) != CellState::Free) return false;
    return c == s || c == t || clear[grid.index(c)] >= inflation_m - 1e-9 || distance(grid.cell_center(c), start) <= start_slack_m;
  };
  if (!passable(s) || !passable(t)) return std::nullopt;

  const double c = grid.cell_size();
  const auto h = [&](CellIndex a) {
    const double dx = std::abs(a.col - t.col);
    const double dy = std::abs(a.row - t.row);
    return c * (std::max(dx, dy) + (std::sqrt(2.0) - 1.0) * std::min(dx, dy));
  };
  std::vector<double> g(grid.size(), std::numeric_limits<double>::infinity());
  std::vector<int> parent(grid.size(), -1);
  std::vector<std::uint8_t> closed(grid.size(), 0);
  using Item = std::tuple<double, double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  g[grid.index(s)] = 0.0;
  open.emplace(h(s), h(s), grid.index(s));
  const std::size_t goal_i = grid.index(t);
  while (!open.empty()) {
    const auto [f, hv, i] = open.top();
    open.pop();
    if (closed[i] != 0) continue;
    closed[i] = 1;
    if (i == goal_i) break;
    const CellIndex cur = grid.cell_of(i);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const CellIndex n{cur.col + dx, cur.row + dy};
        if (!passable(n)) continue;
        if (dx != 0 && dy != 0 && (!passable({cur.col + dx, cur.row}) || !passable({cur.col, cur.row + dy}))) continue;
        const std::size_t ni = grid.index(n);
        const double ng = g[i] + ((dx != 0 && dy != 0) ? std::sqrt(2.0) * c : c);
        if (ng < g[ni] - 1e-12) {
          g[ni] = ng;
          parent[ni] = static_cast<int>(i);
          open.emplace(ng + h(n), h(n), ni);
        }
      }
  }
  if (!std::isfinite(g[goal_i])) return std::nullopt;
  GridPath path;
  path.length_m = g[goal_i];
  for (int v = static_cast<int>(goal_i); v != -1; v = parent[static_cast<std::size_t>(v)]) path.cells.push_back(grid.cell_of(static_cast<std::size_t>(v)));
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

double oracle_shortest(const OccupancyGrid& static_grid, Vec2 start, Vec2 goal, double robot_radius_m) {
  const auto p = grid_shortest_path(static_grid, start, goal, robot_radius_m);
  if (!p) throw Error(ErrorKind::Unreachable, "goal not reachable on the static grid");

  // String-pull the lattice path so the reference length is close to the
  // any-angle geodesic.
  const auto clear = clearance_map(static_grid, robot_radius_m + static_grid.cell_size());
  const CellIndex s = static_grid.world_to_cell(start);
  const CellIndex t = static_grid.world_to_cell(goal);
  const auto passable = [&](Vec2 q) {
    const CellIndex c = static_grid.world_to_cell(q);
    if (!static_grid.in_bounds(c) || static_grid.at(c) != CellState::Free) return false;
    return c == s || c == t || clear[static_grid.index(c)] >= robot_radius_m - 1e-9;
  };
  const double step = static_grid.cell_size() / 4.0;
  const auto visible = [&](Vec2 a, Vec2 b) {
    const double d = distance(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(d / step)));
    for (int k = 0; k <= n; ++k)
      if (!passable(a + (b - a) * (static_cast<double>(k) / n))) return false;
    return true;
  };
  std::vector<Vec2> pts{start};
  for (std::size_t i = 1; i + 1 < p->cells.size(); ++i) pts.push_back(static_grid.cell_center(p->cells[i]));
  pts.push_back(goal);
  double length = 0.0;
  std::size_t anchor = 0;
  while (anchor + 1 < pts.size()) {
    std::size_t next = anchor + 1;
    for (std::size_t j = pts.size() - 1; j > anchor + 1; --j)
      if (visible(pts[anchor], pts[j])) {
        next = j;
        break;
      }
    length += distance(pts[anchor], pts[next]);
    anchor = next;
  }
  return std::min(length, p->length_m + distance(start, static_grid.cell_center(s)) + distance(goal, static_grid.cell_center(t)));
}

double spl_contribution(const EpisodeScore& e) {
  if (!e.success) return 0.0;
  const double denom = std::max(e.path_length_m, e.oracle_length_m);
  return denom <= 0.0 ? 1.0 : e.oracle_length_m / denom;
}

SrSpl compute_sr_spl(std::span<const EpisodeScore> episodes) {
  if (episodes.empty()) throw Error(ErrorKind::InvalidArgument, "no episodes");
  double sr = 0.0, spl = 0.0;
  for (const auto& e : episodes) {
    sr += e.success ? 1.0 : 0.0;
    spl += spl_contribution(e);
  }
  const auto n = static_cast<double>(episodes.size());
  return {sr / n, spl / n};
}

}  // namespace hiernav

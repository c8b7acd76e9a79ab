#include "hiernav/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hiernav/errors.hpp"

namespace hiernav {

namespace {
constexpr double kEps = 1e-6;
}

OccupancyGrid::OccupancyGrid(double cell_size, int width, int height, Vec2 origin, CellState fill)
    : cell_size_(cell_size), width_(width), height_(height), origin_(origin),
      cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
  if (cell_size <= 0.0 || width <= 0 || height <= 0) throw Error(ErrorKind::InvalidArgument, "degenerate grid dimensions");
}

CellIndex OccupancyGrid::world_to_cell(Vec2 p) const {
  return {static_cast<int>(std::floor((p.x - origin_.x) / cell_size_)),
          static_cast<int>(std::floor((p.y - origin_.y) / cell_size_))};
}

Vec2 OccupancyGrid::cell_center(CellIndex c) const {
  return {origin_.x + (c.col + 0.5) * cell_size_, origin_.y + (c.row + 0.5) * cell_size_};
}

Rect OccupancyGrid::cell_rect(CellIndex c) const {
  const double x = origin_.x + c.col * cell_size_;
  const double y = origin_.y + c.row * cell_size_;
  return {x, y, x + cell_size_, y + cell_size_};
}

std::size_t OccupancyGrid::count(CellState s) const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), s)); }

std::vector<DoorGap> door_gaps(const Scenario& s) {
  std::vector<DoorGap> out;
  for (const auto& d : s.doors) {
    const Room* a = s.find_room(d.connects[0]);
    const Room* b = s.find_room(d.connects[1]);
    DoorGap g{d.id, d.connects, d.position, d.width_m, true};
    if (a != nullptr && b != nullptr) {
      const bool vertical = std::abs(a->rect.x1 - b->rect.x0) < kEps || std::abs(b->rect.x1 - a->rect.x0) < kEps;
      g.vertical_wall = vertical;
    }
    out.push_back(g);
  }
  return out;
}

namespace {

/// Iterates cells whose centers fall within [lo, hi] along each axis.
template <typename F>
void for_cells_in(const OccupancyGrid& grid, double x_lo, double x_hi, double y_lo, double y_hi, F&& f) {
  const double c = grid.cell_size();
  const Vec2 o = grid.origin();
  const int c0 = std::max(0, static_cast<int>(std::ceil((x_lo - o.x) / c - 0.5 - kEps)));
  const int c1 = std::min(grid.width() - 1, static_cast<int>(std::floor((x_hi - o.x) / c - 0.5 + kEps)));
  const int r0 = std::max(0, static_cast<int>(std::ceil((y_lo - o.y) / c - 0.5 - kEps)));
  const int r1 = std::min(grid.height() - 1, static_cast<int>(std::floor((y_hi - o.y) / c - 0.5 + kEps)));
  for (int r = r0; r <= r1; ++r)
    for (int col = c0; col <= c1; ++col) f(CellIndex{col, r});
}

}  // namespace

std::vector<CellIndex> gap_cells(const OccupancyGrid& grid, const DoorGap& gap) {
  std::vector<CellIndex> out;
  const double band = grid.cell_size() / 2.0;
  const double half = gap.width_m / 2.0;
  if (gap.vertical_wall)
    for_cells_in(grid, gap.position.x - band, gap.position.x + band, gap.position.y - half, gap.position.y + half,
                 [&](CellIndex c) { out.push_back(c); });
  else
    for_cells_in(grid, gap.position.x - half, gap.position.x + half, gap.position.y - band, gap.position.y + band,
                 [&](CellIndex c) { out.push_back(c); });
  return out;
}

void paint_rect(OccupancyGrid& grid, const Rect& r, CellState state) {
  for_cells_in(grid, r.x0, r.x1, r.y0, r.y1, [&](CellIndex c) { grid.set(c, state); });
}

OccupancyGrid rasterize(const Scenario& s, bool include_dynamic) {
  const double c = s.cell_size_m;
  const int w = static_cast<int>(std::ceil(s.bounds_m.x / c - kEps));
  const int h = static_cast<int>(std::ceil(s.bounds_m.y / c - kEps));
  OccupancyGrid grid(c, w, h, {0.0, 0.0}, CellState::Unknown);

  // Interiors first (strict containment of the cell center), then walls over them.
  for (const auto& room : s.rooms)
    for_cells_in(grid, room.rect.x0 + kEps, room.rect.x1 - kEps, room.rect.y0 + kEps, room.rect.y1 - kEps,
                 [&](CellIndex cell) { grid.set(cell, CellState::Free); });

  const double band = c / 2.0;
  for (const auto& room : s.rooms) {
    const Rect& r = room.rect;
    for_cells_in(grid, r.x0 - band, r.x0 + band, r.y0 - band, r.y1 + band, [&](CellIndex cell) { grid.set(cell, CellState::Occupied); });
    for_cells_in(grid, r.x1 - band, r.x1 + band, r.y0 - band, r.y1 + band, [&](CellIndex cell) { grid.set(cell, CellState::Occupied); });
    for_cells_in(grid, r.x0 - band, r.x1 + band, r.y0 - band, r.y0 + band, [&](CellIndex cell) { grid.set(cell, CellState::Occupied); });
    for_cells_in(grid, r.x0 - band, r.x1 + band, r.y1 - band, r.y1 + band, [&](CellIndex cell) { grid.set(cell, CellState::Occupied); });
  }

  for (const auto& gap : door_gaps(s))
    for (const auto& cell : gap_cells(grid, gap)) grid.set(cell, CellState::Free);

  for (const auto& o : s.objects)
    if (o.blocking) paint_rect(grid, o.rect, CellState::Occupied);
  if (include_dynamic)
    for (const auto& o : s.dynamic_obstacles) paint_rect(grid, o.rect, CellState::Occupied);
  return grid;
}

std::vector<double> clearance_map(const OccupancyGrid& grid, double max_dist, bool unknown_is_obstacle) {
  const double c = grid.cell_size();
  const int w = grid.width();
  const int h = grid.height();
  std::vector<double> clear(grid.size(), max_dist);
  const auto blocked = [&](int col, int row) {
    if (col < 0 || row < 0 || col >= w || row >= h) return true;
    const CellState s = grid.at(CellIndex{col, row});
    return s == CellState::Occupied || (unknown_is_obstacle && s == CellState::Unknown);
  };

  // Grid edge acts as an obstacle boundary.
  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col) {
      const double edge = std::min({(col + 0.5) * c, (w - col - 0.5) * c, (r + 0.5) * c, (h - r - 0.5) * c});
      clear[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(col)] = std::min(max_dist, edge);
    }

  const int reach = static_cast<int>(std::ceil(max_dist / c)) + 1;
  std::vector<std::pair<int, int>> stencil;
  std::vector<double> stencil_dist;
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx) {
      const double d = std::hypot(std::max(0.0, std::abs(dx) - 0.5), std::max(0.0, std::abs(dy) - 0.5)) * c;
      if (d < max_dist) {
        stencil.emplace_back(dx, dy);
        stencil_dist.push_back(d);
      }
    }

  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col) {
      if (!blocked(col, r)) continue;
      // Only obstacle cells bordering non-obstacle space can be nearest.
      bool boundary = false;
      for (int dy = -1; dy <= 1 && !boundary; ++dy)
        for (int dx = -1; dx <= 1 && !boundary; ++dx)
          if ((dx != 0 || dy != 0) && !blocked(col + dx, r + dy)) boundary = true;
      clear[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(col)] = 0.0;
      if (!boundary) continue;
      for (std::size_t k = 0; k < stencil.size(); ++k) {
        const int nc = col + stencil[k].first;
        const int nr = r + stencil[k].second;
        if (nc < 0 || nr < 0 || nc >= w || nr >= h) continue;
        double& v = clear[static_cast<std::size_t>(nr) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nc)];
        v = std::min(v, stencil_dist[k]);
      }
    }
  return clear;
}

bool disc_collides(const OccupancyGrid& grid, Vec2 center, double radius) {
  const double c = grid.cell_size();
  const Vec2 o = grid.origin();
  const int c0 = static_cast<int>(std::floor((center.x - radius - o.x) / c));
  const int c1 = static_cast<int>(std::floor((center.x + radius - o.x) / c));
  const int r0 = static_cast<int>(std::floor((center.y - radius - o.y) / c));
  const int r1 = static_cast<int>(std::floor((center.y + radius - o.y) / c));
  for (int r = r0; r <= r1; ++r)
    for (int col = c0; col <= c1; ++col) {
      const CellIndex cell{col, r};
      const bool hit = !grid.in_bounds(cell) || grid.at(cell) == CellState::Occupied;
      if (hit && distance_to_rect(center, grid.cell_rect(cell)) < radius - 1e-9) return true;
    }
  return false;
}

}  // namespace hiernav

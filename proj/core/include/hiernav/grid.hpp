#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hiernav/geometry.hpp"
#include "hiernav/scenario.hpp"

namespace hiernav {

enum class CellState : std::uint8_t { Free, Occupied, Unknown };

struct CellIndex {
  int col = 0;
  int row = 0;
  constexpr bool operator==(const CellIndex&) const = default;
  constexpr auto operator<=>(const CellIndex&) const = default;
};

/// Row-major planar occupancy grid; cell (0,0) has its lower-left corner at `origin`.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(double cell_size, int width, int height, Vec2 origin = {}, CellState fill = CellState::Unknown);

  double cell_size() const { return cell_size_; }
  int width() const { return width_; }
  int height() const { return height_; }
  Vec2 origin() const { return origin_; }
  std::size_t size() const { return cells_.size(); }

  bool in_bounds(CellIndex c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
  std::size_t index(CellIndex c) const { return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.col); }
  CellIndex cell_of(std::size_t idx) const {
    return {static_cast<int>(idx % static_cast<std::size_t>(width_)), static_cast<int>(idx / static_cast<std::size_t>(width_))};
  }

  /// Out-of-bounds cells read as Unknown.
  CellState at(CellIndex c) const { return in_bounds(c) ? cells_[index(c)] : CellState::Unknown; }
  CellState at(Vec2 p) const { return at(world_to_cell(p)); }
  void set(CellIndex c, CellState s) { cells_[index(c)] = s; }

  CellIndex world_to_cell(Vec2 p) const;
  Vec2 cell_center(CellIndex c) const;
  Rect cell_rect(CellIndex c) const;

  bool is_free(Vec2 p) const { return at(p) == CellState::Free; }
  std::size_t count(CellState s) const;
  std::span<const CellState> cells() const { return cells_; }

  bool operator==(const OccupancyGrid&) const = default;

 private:
  double cell_size_ = 0.1;
  int width_ = 0;
  int height_ = 0;
  Vec2 origin_;
  std::vector<CellState> cells_;
};

/// A door opening in a wall between two rooms, with the wall orientation resolved.
struct DoorGap {
  std::string id;
  std::array<std::string, 2> connects;
  Vec2 position;
  double width_m = 0.0;
  bool vertical_wall = true;  // wall runs along y (constant x)
};

std::vector<DoorGap> door_gaps(const Scenario& s);

/// Cells forming the opening of a door: inside the wall band and within
/// width/2 of the door position along the wall.
std::vector<CellIndex> gap_cells(const OccupancyGrid& grid, const DoorGap& gap);

/// Room interiors Free; room boundaries Occupied except door openings;
/// blocking objects (and dynamic obstacles when requested) Occupied;
/// everything else Unknown. Walls are the cells whose center lies within
/// half a cell of a room edge.
OccupancyGrid rasterize(const Scenario& s, bool include_dynamic);

/// Marks every cell whose center lies inside `r` as Occupied.
void paint_rect(OccupancyGrid& grid, const Rect& r, CellState state);

/// Distance from each cell center to the nearest Occupied cell (or out-of-grid
/// area), capped at `max_dist`. Unknown cells count as obstacles iff requested.
std::vector<double> clearance_map(const OccupancyGrid& grid, double max_dist, bool unknown_is_obstacle = false);

/// True when a disc of `radius` centered at `center` overlaps an Occupied
/// cell or leaves the grid.
bool disc_collides(const OccupancyGrid& grid, Vec2 center, double radius);

}  // namespace hiernav

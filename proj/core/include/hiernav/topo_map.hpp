#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiernav/grid.hpp"
#include "hiernav/scenario.hpp"

namespace hiernav {

/// Cell -> region assignment over one occupancy grid. Region ids are dense,
/// assigned in row-major order of each component's first cell.
class RegionLabeling {
 public:
  static constexpr int kNone = -1;

  RegionLabeling() = default;
  RegionLabeling(OccupancyGrid grid, std::vector<int> region_of, std::vector<std::string> labels);

  const OccupancyGrid& grid() const { return grid_; }
  int region_count() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int region) const { return labels_.at(static_cast<std::size_t>(region)); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<int> find_label(std::string_view label) const;

  int at(CellIndex c) const { return grid_.in_bounds(c) ? region_of_[grid_.index(c)] : kNone; }
  /// Region of the containing cell; none for Occupied/Unknown/outside cells.
  std::optional<int> locate(Vec2 p) const;
  std::vector<CellIndex> cells_of(int region) const;

 private:
  OccupancyGrid grid_;
  std::vector<int> region_of_;
  std::vector<std::string> labels_;
};

/// Seals door openings, flood-fills Free space into 4-connected components,
/// then hands each opening cell to the adjacent region (breadth-first; ties go
/// to the lower region id). Components whose centroid falls inside one of
/// `rooms` take its label, others are named "region_k".
RegionLabeling segment_regions(const OccupancyGrid& grid, std::span<const DoorGap> doors, std::span<const Room> rooms = {});

enum class VertexKind { Region, Entrance };

struct Vertex {
  int id = 0;
  VertexKind kind = VertexKind::Region;
  std::string label;               // region
  Vec2 position;                   // region centroid or entrance position
  std::array<int, 2> connects{};   // entrance: the two region vertex ids
};

struct Edge {
  int a = 0;
  int b = 0;
  double weight_m = 0.0;
};

/// Bipartite topometric graph: region vertices share ids with the labeling's
/// region ids; entrance vertices follow.
struct TopoGraph {
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  const Vertex& vertex(int id) const { return vertices.at(static_cast<std::size_t>(id)); }
  int region_vertex_count() const;
  /// Entrance vertex ids adjacent to a region through finite-weight edges.
  std::vector<int> entrances_of(int region) const;
  bool connected() const;
};

/// Checks positivity, bipartiteness and entrance degree; throws Validation.
void validate(const TopoGraph& g);

/// Shortest 8-connected path length (m) inside `region` from `from` to each
/// target cell; targets may lie just outside the region (door cells).
/// Unreachable targets get +inf.
std::vector<double> region_geodesic(const RegionLabeling& labeling, int region, CellIndex from, std::span<const CellIndex> targets);

TopoGraph build_topo_graph(const RegionLabeling& labeling, std::span<const DoorGap> doors);

nlohmann::json to_json(const TopoGraph& g);
/// Byte-stable JSON (sorted keys, compact).
std::string serialize_graph(const TopoGraph& g);
TopoGraph deserialize_graph(std::string_view text);

std::optional<int> locate_region(const RegionLabeling& labeling, Vec2 p);

}  // namespace hiernav

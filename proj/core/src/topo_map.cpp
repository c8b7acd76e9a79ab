#include "hiernav/topo_map.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <set>

#include "hiernav/errors.hpp"

namespace hiernav {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<std::pair<int, int>, 4> kFour{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

}  // namespace

RegionLabeling::RegionLabeling(OccupancyGrid grid, std::vector<int> region_of, std::vector<std::string> labels)
    : grid_(std::move(grid)), region_of_(std::move(region_of)), labels_(std::move(labels)) {}

std::optional<int> RegionLabeling::find_label(std::string_view label) const {
  for (std::size_t k = 0; k < labels_.size(); ++k)
    if (labels_[k] == label) return static_cast<int>(k);
  return std::nullopt;
}

std::optional<int> RegionLabeling::locate(Vec2 p) const {
  const int r = at(grid_.world_to_cell(p));
  if (r == kNone) return std::nullopt;
  return r;
}

std::vector<CellIndex> RegionLabeling::cells_of(int region) const {
  std::vector<CellIndex> out;
  for (std::size_t i = 0; i < region_of_.size(); ++i)
    if (region_of_[i] == region) out.push_back(grid_.cell_of(i));
  return out;
}

RegionLabeling segment_regions(const OccupancyGrid& grid, std::span<const DoorGap> doors, std::span<const Room> rooms) {
  const std::size_t n = grid.size();
  std::vector<char> sealed(n, 0);
  for (const auto& d : doors)
    for (const auto& c : gap_cells(grid, d))
      if (grid.at(c) == CellState::Free) sealed[grid.index(c)] = 1;

  std::vector<int> region(n, RegionLabeling::kNone);
  int next_id = 0;
  std::vector<std::size_t> stack;
  const auto flood = [&](std::size_t seed_idx, bool allow_sealed) {
    const int id = next_id++;
    region[seed_idx] = id;
    stack.assign(1, seed_idx);
    while (!stack.empty()) {
      const CellIndex c = grid.cell_of(stack.back());
      stack.pop_back();
      for (const auto& [dx, dy] : kFour) {
        const CellIndex nc{c.col + dx, c.row + dy};
        if (!grid.in_bounds(nc)) continue;
        const std::size_t ni = grid.index(nc);
        if (region[ni] != RegionLabeling::kNone || grid.at(nc) != CellState::Free) continue;
        if (static_cast<bool>(sealed[ni]) != allow_sealed) continue;
        region[ni] = id;
        stack.push_back(ni);
      }
    }
  };

  for (std::size_t i = 0; i < n; ++i)
    if (region[i] == RegionLabeling::kNone && grid.cells()[i] == CellState::Free && !sealed[i]) flood(i, false);
  const int component_count = next_id;

  // Component centroids before the openings are handed back.
  std::vector<Vec2> sum(static_cast<std::size_t>(component_count));
  std::vector<int> count(static_cast<std::size_t>(component_count), 0);
  for (std::size_t i = 0; i < n; ++i)
    if (region[i] >= 0) {
      sum[static_cast<std::size_t>(region[i])] = sum[static_cast<std::size_t>(region[i])] + grid.cell_center(grid.cell_of(i));
      ++count[static_cast<std::size_t>(region[i])];
    }

  // Restore openings wave by wave.
  for (bool progress = true; progress;) {
    progress = false;
    std::vector<std::pair<std::size_t, int>> wave;
    for (std::size_t i = 0; i < n; ++i) {
      if (!sealed[i] || region[i] != RegionLabeling::kNone) continue;
      const CellIndex c = grid.cell_of(i);
      int best = RegionLabeling::kNone;
      for (const auto& [dx, dy] : kFour) {
        const int r = grid.in_bounds({c.col + dx, c.row + dy}) ? region[grid.index({c.col + dx, c.row + dy})] : RegionLabeling::kNone;
        if (r != RegionLabeling::kNone && (best == RegionLabeling::kNone || r < best)) best = r;
      }
      if (best != RegionLabeling::kNone) wave.emplace_back(i, best);
    }
    for (const auto& [i, r] : wave) region[i] = r;
    progress = !wave.empty();
  }
  // Openings isolated from every component form their own regions.
  for (std::size_t i = 0; i < n; ++i)
    if (sealed[i] && region[i] == RegionLabeling::kNone) {
      flood(i, true);
      sum.emplace_back();
      count.push_back(0);
    }

  std::vector<std::string> labels;
  for (int r = 0; r < next_id; ++r) {
    std::string label = "region_" + std::to_string(r);
    if (r < component_count && count[static_cast<std::size_t>(r)] > 0) {
      const Vec2 centroid = sum[static_cast<std::size_t>(r)] * (1.0 / count[static_cast<std::size_t>(r)]);
      for (const auto& room : rooms)
        if (room.rect.strictly_contains(centroid)) {
          label = room.label;
          break;
        }
    }
    labels.push_back(std::move(label));
  }
  return RegionLabeling(grid, std::move(region), std::move(labels));
}

int TopoGraph::region_vertex_count() const {
  return static_cast<int>(std::count_if(vertices.begin(), vertices.end(), [](const Vertex& v) { return v.kind == VertexKind::Region; }));
}

std::vector<int> TopoGraph::entrances_of(int region) const {
  std::vector<int> out;
  for (const auto& e : edges) {
    if (!std::isfinite(e.weight_m)) continue;
    if (e.a == region && vertex(e.b).kind == VertexKind::Entrance) out.push_back(e.b);
    else if (e.b == region && vertex(e.a).kind == VertexKind::Entrance) out.push_back(e.a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool TopoGraph::connected() const {
  if (vertices.empty()) return true;
  std::vector<std::vector<int>> adj(vertices.size());
  for (const auto& e : edges)
    if (std::isfinite(e.weight_m)) {
      adj[static_cast<std::size_t>(e.a)].push_back(e.b);
      adj[static_cast<std::size_t>(e.b)].push_back(e.a);
    }
  std::vector<char> seen(vertices.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t visited = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const int w : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++visited;
        stack.push_back(w);
      }
  }
  return visited == vertices.size();
}

void validate(const TopoGraph& g) {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::Validation, what); };
  for (std::size_t k = 0; k < g.vertices.size(); ++k)
    if (g.vertices[k].id != static_cast<int>(k)) fail("vertex ids must be dense and ordered");
  std::vector<int> degree(g.vertices.size(), 0);
  std::vector<std::set<int>> entrance_regions(g.vertices.size());
  for (const auto& e : g.edges) {
    if (e.a < 0 || e.b < 0 || e.a >= static_cast<int>(g.vertices.size()) || e.b >= static_cast<int>(g.vertices.size()))
      fail("edge references unknown vertex");
    if (!(e.weight_m > 0.0)) fail("edge " + std::to_string(e.a) + "-" + std::to_string(e.b) + " has non-positive weight");
    const Vertex& a = g.vertex(e.a);
    const Vertex& b = g.vertex(e.b);
    if (a.kind == b.kind) fail("edge " + std::to_string(e.a) + "-" + std::to_string(e.b) + " is not region-entrance");
    const Vertex& ent = a.kind == VertexKind::Entrance ? a : b;
    const Vertex& reg = a.kind == VertexKind::Entrance ? b : a;
    ++degree[static_cast<std::size_t>(ent.id)];
    entrance_regions[static_cast<std::size_t>(ent.id)].insert(reg.id);
  }
  for (const auto& v : g.vertices) {
    if (v.kind != VertexKind::Entrance) continue;
    if (degree[static_cast<std::size_t>(v.id)] != 2) fail("entrance vertex " + std::to_string(v.id) + " must have degree 2");
    const std::set<int> expect{v.connects[0], v.connects[1]};
    if (entrance_regions[static_cast<std::size_t>(v.id)] != expect)
      fail("entrance vertex " + std::to_string(v.id) + " edges disagree with its connects");
  }
}

std::vector<double> region_geodesic(const RegionLabeling& labeling, int region, CellIndex from, std::span<const CellIndex> targets) {
  const OccupancyGrid& grid = labeling.grid();
  const double c = grid.cell_size();
  std::vector<double> out(targets.size(), kInf);
  if (!grid.in_bounds(from)) return out;

  std::map<std::size_t, std::vector<std::size_t>> target_slots;
  for (std::size_t k = 0; k < targets.size(); ++k)
    if (grid.in_bounds(targets[k])) target_slots[grid.index(targets[k])].push_back(k);
  std::size_t remaining = target_slots.size();

  const auto passable = [&](CellIndex cell) {
    return grid.in_bounds(cell) && (labeling.at(cell) == region || target_slots.contains(grid.index(cell)));
  };

  std::vector<double> dist(grid.size(), kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[grid.index(from)] = 0.0;
  open.emplace(0.0, grid.index(from));
  while (!open.empty() && remaining > 0) {
    const auto [d, i] = open.top();
    open.pop();
    if (d > dist[i]) continue;
    if (const auto it = target_slots.find(i); it != target_slots.end()) {
      for (const std::size_t k : it->second) out[k] = d * c;
      --remaining;
    }
    const CellIndex cell = grid.cell_of(i);
    // Targets outside the region are endpoints, not corridors.
    if (labeling.at(cell) != region && i != grid.index(from)) continue;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const CellIndex nc{cell.col + dx, cell.row + dy};
        if (!passable(nc)) continue;
        if (dx != 0 && dy != 0 && (!passable({cell.col + dx, cell.row}) || !passable({cell.col, cell.row + dy}))) continue;
        const double nd = d + ((dx != 0 && dy != 0) ? std::numbers::sqrt2 : 1.0);
        const std::size_t ni = grid.index(nc);
        if (nd < dist[ni]) {
          dist[ni] = nd;
          open.emplace(nd, ni);
        }
      }
  }
  return out;
}

TopoGraph build_topo_graph(const RegionLabeling& labeling, std::span<const DoorGap> doors) {
  const OccupancyGrid& grid = labeling.grid();
  const int regions = labeling.region_count();
  TopoGraph g;

  std::vector<CellIndex> centroid_cell(static_cast<std::size_t>(regions));
  for (int r = 0; r < regions; ++r) {
    const auto cells = labeling.cells_of(r);
    Vec2 sum;
    for (const auto& c : cells) sum = sum + grid.cell_center(c);
    Vec2 centroid = sum * (1.0 / static_cast<double>(cells.size()));
    CellIndex cc = grid.world_to_cell(centroid);
    if (labeling.at(cc) != r) {
      // Non-convex region: snap to the nearest own cell.
      double best = kInf;
      for (const auto& c : cells)
        if (const double d = distance(grid.cell_center(c), centroid); d < best) {
          best = d;
          cc = c;
        }
      centroid = grid.cell_center(cc);
    }
    centroid_cell[static_cast<std::size_t>(r)] = cc;
    g.vertices.push_back({r, VertexKind::Region, labeling.label(r), centroid, {}});
  }

  struct Candidate {
    Vec2 position;
    CellIndex cell;
    std::array<int, 2> connects;
  };
  std::vector<Candidate> candidates;
  for (const auto& door : doors) {
    const auto opening = gap_cells(grid, door);
    std::set<std::size_t> opening_set;
    for (const auto& c : opening)
      if (grid.at(c) == CellState::Free) opening_set.insert(grid.index(c));
    if (opening_set.empty()) continue;

    std::map<int, int> side_votes;
    for (const std::size_t i : opening_set) {
      const CellIndex c = grid.cell_of(i);
      for (const auto& [dx, dy] : kFour) {
        const CellIndex nc{c.col + dx, c.row + dy};
        if (!grid.in_bounds(nc) || opening_set.contains(grid.index(nc))) continue;
        if (const int r = labeling.at(nc); r != RegionLabeling::kNone) ++side_votes[r];
      }
    }
    if (side_votes.size() < 2) continue;
    std::vector<std::pair<int, int>> ranked;
    for (const auto& [r, v] : side_votes) ranked.emplace_back(-v, r);
    std::sort(ranked.begin(), ranked.end());
    std::array<int, 2> connects{ranked[0].second, ranked[1].second};
    std::sort(connects.begin(), connects.end());

    CellIndex cell = grid.world_to_cell(door.position);
    if (!opening_set.contains(grid.index(cell))) {
      double best = kInf;
      for (const std::size_t i : opening_set)
        if (const double d = distance(grid.cell_center(grid.cell_of(i)), door.position); d < best) {
          best = d;
          cell = grid.cell_of(i);
        }
    }
    candidates.push_back({door.position, cell, connects});
  }

  // Centroid -> entrance geodesics, one search per region.
  std::vector<std::array<double, 2>> weights(candidates.size(), {kInf, kInf});
  for (int r = 0; r < regions; ++r) {
    std::vector<CellIndex> targets;
    std::vector<std::pair<std::size_t, int>> slots;
    for (std::size_t k = 0; k < candidates.size(); ++k)
      for (int side = 0; side < 2; ++side)
        if (candidates[k].connects[static_cast<std::size_t>(side)] == r) {
          targets.push_back(candidates[k].cell);
          slots.emplace_back(k, side);
        }
    if (targets.empty()) continue;
    const auto d = region_geodesic(labeling, r, centroid_cell[static_cast<std::size_t>(r)], targets);
    for (std::size_t t = 0; t < slots.size(); ++t)
      weights[slots[t].first][static_cast<std::size_t>(slots[t].second)] = std::max(d[t], 1e-6);
  }

  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (!std::isfinite(weights[k][0]) || !std::isfinite(weights[k][1])) continue;
    const int id = static_cast<int>(g.vertices.size());
    g.vertices.push_back({id, VertexKind::Entrance, {}, candidates[k].position, candidates[k].connects});
    g.edges.push_back({candidates[k].connects[0], id, weights[k][0]});
    g.edges.push_back({candidates[k].connects[1], id, weights[k][1]});
  }
  return g;
}

json to_json(const TopoGraph& g) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : g.vertices) {
    if (v.kind == VertexKind::Region)
      j["vertices"].push_back({{"id", v.id}, {"kind", "region"}, {"label", v.label}, {"centroid", {v.position.x, v.position.y}}});
    else
      j["vertices"].push_back({{"id", v.id},
                               {"kind", "entrance"},
                               {"position", {v.position.x, v.position.y}},
                               {"connects", {v.connects[0], v.connects[1]}}});
  }
  j["edges"] = json::array();
  for (const auto& e : g.edges) {
    if (!std::isfinite(e.weight_m)) throw Error(ErrorKind::InvalidArgument, "cannot serialize a penalized (infinite) edge");
    j["edges"].push_back({{"a", e.a}, {"b", e.b}, {"weight_m", e.weight_m}});
  }
  return j;
}

std::string serialize_graph(const TopoGraph& g) { return to_json(g).dump(); }

TopoGraph deserialize_graph(std::string_view text) {
  TopoGraph g;
  try {
    const json j = json::parse(text);
    for (const auto& v : j.at("vertices")) {
      Vertex vx;
      vx.id = v.at("id").get<int>();
      const auto kind = v.at("kind").get<std::string>();
      if (kind == "region") {
        vx.kind = VertexKind::Region;
        vx.label = v.at("label").get<std::string>();
        vx.position = {v.at("centroid").at(0).get<double>(), v.at("centroid").at(1).get<double>()};
      } else if (kind == "entrance") {
        vx.kind = VertexKind::Entrance;
        vx.position = {v.at("position").at(0).get<double>(), v.at("position").at(1).get<double>()};
        vx.connects = {v.at("connects").at(0).get<int>(), v.at("connects").at(1).get<int>()};
      } else {
        throw Error(ErrorKind::Parse, "unknown vertex kind '" + kind + "'");
      }
      g.vertices.push_back(vx);
    }
    for (const auto& e : j.at("edges")) g.edges.push_back({e.at("a").get<int>(), e.at("b").get<int>(), e.at("weight_m").get<double>()});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed graph JSON: ") + e.what());
  }
  validate(g);
  return g;
}

std::optional<int> locate_region(const RegionLabeling& labeling, Vec2 p) { return labeling.locate(p); }

}  // namespace hiernav

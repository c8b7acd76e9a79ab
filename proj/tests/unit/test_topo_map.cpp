#include <algorithm>
#include <queue>
#include <set>

#include "support.hpp"

#include "hiernav/errors.hpp"
#include "hiernav/grid.hpp"
#include "hiernav/topo_map.hpp"

using namespace hiernav;
using hiernav::test::fixture3r;

namespace {

struct Built {
  OccupancyGrid grid;
  std::vector<DoorGap> gaps;
  RegionLabeling labeling;
  TopoGraph graph;
};

Built build(const Scenario& s) {
  Built b;
  b.grid = rasterize(s, false);
  b.gaps = door_gaps(s);
  b.labeling = segment_regions(b.grid, b.gaps, s.rooms);
  b.graph = build_topo_graph(b.labeling, b.gaps);
  return b;
}

// 4-connected components of free cells once every door gap is sealed.
int sealed_components(const OccupancyGrid& grid, const std::vector<DoorGap>& gaps) {
  OccupancyGrid g = grid;
  for (const auto& gap : gaps)
    for (const auto& c : gap_cells(g, gap)) g.set(c, CellState::Occupied);
  std::vector<int> comp(g.size(), -1);
  int n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.cells()[i] != CellState::Free || comp[i] != -1) continue;
    std::queue<std::size_t> q;
    q.push(i);
    comp[i] = n;
    while (!q.empty()) {
      const CellIndex c = g.cell_of(q.front());
      q.pop();
      const CellIndex nb[4] = {{c.col + 1, c.row}, {c.col - 1, c.row}, {c.col, c.row + 1}, {c.col, c.row - 1}};
      for (const auto& m : nb)
        if (g.in_bounds(m) && g.at(m) == CellState::Free && comp[g.index(m)] == -1) {
          comp[g.index(m)] = n;
          q.push(g.index(m));
        }
    }
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("fixture segments into three labelled regions") {
  const Built b = build(fixture3r());
  CHECK(b.labeling.region_count() == sealed_components(b.grid, b.gaps));
  CHECK(b.labeling.region_count() == 3);
  std::set<std::string> labels(b.labeling.labels().begin(), b.labeling.labels().end());
  CHECK(labels == std::set<std::string>{"living room", "hall", "kitchen"});
}

TEST_CASE("single room without doors is one region") {
  Scenario s = fixture3r();
  s.rooms.resize(1);
  s.doors.clear();
  s.objects.clear();
  s.tasks = {Instruction::at({2, 2})};
  const Built b = build(s);
  CHECK(b.labeling.region_count() == 1);
  CHECK(b.graph.vertices.size() == 1);
  CHECK(b.graph.edges.empty());
}

TEST_CASE("zero-width door seals the gap") {
  Scenario s = fixture3r();
  s.rooms.resize(2);
  s.doors.resize(1);
  s.doors[0].width_m = 0.0;
  s.objects.clear();
  s.tasks = {Instruction::at({2, 2})};
  const Built b = build(s);
  CHECK(b.labeling.region_count() == 2);
  CHECK(sealed_components(b.grid, b.gaps) == 2);
  CHECK(b.graph.vertices.size() == 2);
}

TEST_CASE("fixture graph shape") {
  const Built b = build(fixture3r());
  validate(b.graph);
  CHECK(b.graph.region_vertex_count() == 3);
  CHECK(b.graph.vertices.size() == 5);
  CHECK(b.graph.edges.size() == 4);
  CHECK(b.graph.connected());
  const auto living = *b.labeling.find_label("living room");
  const auto hall = *b.labeling.find_label("hall");
  CHECK(b.graph.entrances_of(living).size() == 1);
  CHECK(b.graph.entrances_of(hall).size() == 2);
  // Centroid (2,2) to door (4,2) along the free corridor.
  for (const auto& e : b.graph.edges)
    if (e.a == living || e.b == living) CHECK(e.weight_m == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("generated graphs are bipartite with degree-two entrances") {
  GeneratorParams p;
  p.n_rooms = 8;
  p.seed = 1;
  const Built b = build(generate_scenario(p));
  validate(b.graph);
  std::vector<int> degree(b.graph.vertices.size(), 0);
  for (const auto& e : b.graph.edges) {
    CHECK(b.graph.vertex(e.a).kind != b.graph.vertex(e.b).kind);
    ++degree[static_cast<std::size_t>(e.a)];
    ++degree[static_cast<std::size_t>(e.b)];
  }
  for (const auto& v : b.graph.vertices)
    if (v.kind == VertexKind::Entrance) CHECK(degree[static_cast<std::size_t>(v.id)] == 2);
  CHECK(b.graph.region_vertex_count() == 8);
  CHECK(b.graph.connected());
}

TEST_CASE("graph serialization round trip") {
  const Built b = build(fixture3r());
  const std::string text = serialize_graph(b.graph);
  CHECK(serialize_graph(deserialize_graph(text)) == text);
  CHECK(nlohmann::json::parse(text).at("vertices").size() == 5);

  auto j = nlohmann::json::parse(text);
  j["edges"][0]["weight_m"] = -1.0;
  CHECK_THROWS_AS(deserialize_graph(j.dump()), Error);
  CHECK_THROWS_AS(deserialize_graph("[1,2"), Error);
}

TEST_CASE("locate region") {
  const Built b = build(fixture3r());
  CHECK(locate_region(b.labeling, {10, 2}) == b.labeling.find_label("kitchen"));
  CHECK_FALSE(locate_region(b.labeling, {-5, -5}).has_value());

  // Opening cells belong to the region reached in the fewest steps through
  // the opening, ties to the lower id.
  const Scenario s = fixture3r();
  std::set<std::size_t> gap;
  for (const auto& g : b.gaps)
    for (const auto& c : gap_cells(b.grid, g)) gap.insert(b.grid.index(c));
  const CellIndex q = b.grid.world_to_cell({4.0, 2.0});
  REQUIRE(gap.count(b.grid.index(q)) == 1);
  std::vector<int> dist(b.grid.size(), -1);
  std::queue<CellIndex> frontier;
  dist[b.grid.index(q)] = 0;
  frontier.push(q);
  int best_d = -1, expect = -1;
  while (!frontier.empty()) {
    const CellIndex c = frontier.front();
    frontier.pop();
    const int d = dist[b.grid.index(c)];
    if (best_d >= 0 && d > best_d) break;
    if (!gap.count(b.grid.index(c))) {
      const int r = *b.labeling.find_label(s.room_at(b.grid.cell_center(c))->label);
      if (expect < 0 || r < expect) expect = r;
      best_d = d;
      continue;
    }
    const CellIndex nb[4] = {{c.col + 1, c.row}, {c.col - 1, c.row}, {c.col, c.row + 1}, {c.col, c.row - 1}};
    for (const auto& m : nb)
      if (b.grid.at(m) == CellState::Free && dist[b.grid.index(m)] < 0) {
        dist[b.grid.index(m)] = d + 1;
        frontier.push(m);
      }
  }
  CHECK(locate_region(b.labeling, {4.0, 2.0}) == expect);
}

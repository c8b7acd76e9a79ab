#include <cmath>
#include <limits>
#include <queue>

#include "support.hpp"

#include "hiernav/bench.hpp"
#include "hiernav/errors.hpp"
#include "hiernav/grid.hpp"
#include "hiernav/metrics.hpp"

using namespace hiernav;
using hiernav::test::fixture;
using hiernav::test::fixture3r;

namespace {

// Dijkstra on cells whose clearance is at least `inflation`.
double lattice_dijkstra(const OccupancyGrid& g, Vec2 a, Vec2 b, double inflation) {
  const auto clear = clearance_map(g, inflation + g.cell_size());
  const CellIndex s = g.world_to_cell(a), t = g.world_to_cell(b);
  const auto ok = [&](CellIndex c) {
    return g.in_bounds(c) && g.at(c) == CellState::Free && (c == s || c == t || clear[g.index(c)] >= inflation - 1e-9);
  };
  std::vector<double> d(g.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  d[g.index(s)] = 0.0;
  q.emplace(0.0, g.index(s));
  while (!q.empty()) {
    const auto [dv, i] = q.top();
    q.pop();
    if (dv > d[i]) continue;
    const CellIndex c = g.cell_of(i);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const CellIndex n{c.col + dx, c.row + dy};
        if ((dx == 0 && dy == 0) || !ok(n)) continue;
        if (dx != 0 && dy != 0 && (!ok({c.col + dx, c.row}) || !ok({c.col, c.row + dy}))) continue;
        const double nd = dv + g.cell_size() * ((dx != 0 && dy != 0) ? std::sqrt(2.0) : 1.0);
        if (nd < d[g.index(n)] - 1e-12) {
          d[g.index(n)] = nd;
          q.emplace(nd, g.index(n));
        }
      }
  }
  return d[g.index(t)];
}

}  // namespace

TEST_CASE("SPL hand-computed cases") {
  const std::vector<EpisodeScore> one{{true, 5.0, 5.0}};
  const SrSpl a = compute_sr_spl(one);
  CHECK(std::abs(a.sr - 1.0) <= 1e-12);
  CHECK(std::abs(a.spl - 1.0) <= 1e-12);

  const std::vector<EpisodeScore> twice{{true, 10.0, 5.0}};
  CHECK(std::abs(compute_sr_spl(twice).spl - 0.5) <= 1e-12);

  const std::vector<EpisodeScore> mixed{{false, 3.0, 5.0}, {true, 5.0, 5.0}};
  const SrSpl m = compute_sr_spl(mixed);
  CHECK(std::abs(m.sr - 0.5) <= 1e-12);
  CHECK(std::abs(m.spl - 0.5) <= 1e-12);

  CHECK(spl_contribution({true, 0.0, 0.0}) == 1.0);
  CHECK(spl_contribution({true, 4.0, 5.0}) == 1.0);
  CHECK_THROWS_AS(compute_sr_spl(std::vector<EpisodeScore>{}), Error);
}

TEST_CASE("oracle shortest path on the fixture") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  CHECK(std::abs(oracle_shortest(g, {1, 2}, {10, 2}) - 9.0) <= 0.2);
  CHECK(oracle_shortest(g, {1, 2}, {1, 2}) == 0.0);

  Scenario sealed = fixture3r();
  sealed.doors[1].width_m = 0.0;
  CHECK_THROWS_AS(oracle_shortest(rasterize(sealed, false), {1, 2}, {10, 2}), Error);
}

TEST_CASE("oracle never exceeds the lattice optimum") {
  const Scenario s = fixture("ring4.json");
  const OccupancyGrid g = rasterize(s, false);
  const Vec2 a{1.05, 1.05};
  for (const Vec2 b : {Vec2{6, 2}, Vec2{6, 6}, Vec2{2, 6}, Vec2{3.3, 3.1}}) {
    const auto path = grid_shortest_path(g, a, b, 0.2);
    REQUIRE(path.has_value());
    CHECK(path->length_m == doctest::Approx(lattice_dijkstra(g, a, b, 0.2)));
    const double o = oracle_shortest(g, a, b);
    CHECK(o <= path->length_m + distance(a, g.cell_center(g.world_to_cell(a))) + distance(b, g.cell_center(g.world_to_cell(b))) + 1e-9);
    CHECK(o >= distance(a, b) - 1e-9);
  }
}

TEST_CASE("room hops follow the door graph") {
  const Scenario ring = fixture("ring4.json");
  CHECK(room_hops(ring, "r0", "r0") == 0);
  CHECK(room_hops(ring, "r0", "r1") == 1);
  CHECK(room_hops(ring, "r0", "r2") == 2);
  const Scenario f = fixture3r();
  CHECK(room_hops(f, "r0", "r2") == 2);
  CHECK(task_room(f, f.tasks[0]) == std::optional<std::string>("r2"));
  CHECK_FALSE(task_room(f, f.tasks[1]).has_value());
  CHECK(select_tasks(f, TaskSelection::All).size() == 4);
  CHECK(select_tasks(f, TaskSelection::Farthest) == std::vector<std::size_t>{0});
}

TEST_CASE("injected obstacles respect spacing rules") {
  GeneratorParams p;
  p.n_rooms = 8;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    p.seed = seed;
    const Scenario s = generate_scenario(p);
    for (std::size_t t = 0; t < s.tasks.size(); ++t) {
      const Scenario o = inject_obstacles(s, t, 3, 0.8, 5);
      CHECK(o.dynamic_obstacles.size() <= 3);
      for (std::size_t i = 0; i < o.dynamic_obstacles.size(); ++i) {
        const Rect r = o.dynamic_obstacles[i].rect;
        CHECK(o.dynamic_obstacles[i].spawn_after_mapping);
        CHECK(r.width() == doctest::Approx(0.8));
        for (const auto& d : s.doors) CHECK(distance_to_rect(d.position, r) >= 1.0 - 1e-9);
        CHECK(distance_to_rect(s.start.position, r) >= 1.0 - 1e-9);
        for (std::size_t j = 0; j < i; ++j) CHECK(distance(r.center(), o.dynamic_obstacles[j].rect.center()) >= 2.0 - 1e-9);
      }
      CHECK(dump_scenario(o) == dump_scenario(inject_obstacles(s, t, 3, 0.8, 5)));
    }
  }
}

TEST_CASE("corpus generation cycles room counts") {
  const auto c = generate_corpus(6, 5, 7, 100);
  REQUIRE(c.size() == 6);
  CHECK(c[0].rooms.size() == 5);
  CHECK(c[2].rooms.size() == 7);
  CHECK(c[3].rooms.size() == 5);
  CHECK_THROWS_AS(generate_corpus(2, 6, 5, 0), Error);
}

TEST_CASE("bench over the fixtures") {
  const std::vector<Scenario> set{fixture3r(), fixture("ring4.json")};
  BenchConfig cfg;
  cfg.workers = 2;
  const BenchReport r = run_bench(set, cfg);
  CHECK(r.rows.size() == 6);
  std::vector<EpisodeScore> scores;
  for (const auto& row : r.rows) {
    scores.push_back({row.success, row.path_length_m, row.oracle_length_m});
    CHECK(row.spl_contrib == spl_contribution(scores.back()));
  }
  const SrSpl agg = compute_sr_spl(scores);
  CHECK(r.aggregate.sr == agg.sr);
  CHECK(r.aggregate.spl == agg.spl);
  CHECK(r.rows[1].termination == Termination::NotFound);

  cfg.workers = 1;
  CHECK(report_json_body(run_bench(set, cfg)) == report_json_body(r));

  const std::string doc = report_json(r, "2026-01-01T00:00:00Z");
  CHECK(doc.substr(0, doc.find('\n', 2)) == "{\n  \"timestamp\": \"2026-01-01T00:00:00Z\",");
  const auto j = nlohmann::json::parse(doc);
  CHECK(j.at("aggregates").at("episodes") == 6);
  CHECK(report_csv(r).find("scenario,task,hops") == 0);
}

TEST_CASE("config echo reports ablations") {
  BenchConfig cfg;
  cfg.agent.no_global = true;
  const auto j = config_echo(cfg);
  CHECK(j.at("ablations").at("no_global") == true);
  CHECK(j.at("ablations").at("no_local") == false);
  CHECK(j.at("backend") == "scripted");
}

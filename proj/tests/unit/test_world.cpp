#include <cmath>
#include <numbers>
#include <queue>
#include <set>

#include "support.hpp"

#include "hiernav/errors.hpp"
#include "hiernav/grid.hpp"
#include "hiernav/rng.hpp"
#include "hiernav/scenario.hpp"
#include "hiernav/sim.hpp"

using namespace hiernav;
using hiernav::test::fixture3r;

namespace {

// Brute-force ray march at 1 mm steps.
double march(const OccupancyGrid& g, Vec2 o, double angle, double max_range) {
  const Vec2 dir{std::cos(angle), std::sin(angle)};
  for (double r = 0.0; r < max_range; r += 0.001)
    if (g.at(o + dir * r) != CellState::Free) return r;
  return max_range;
}

bool door_graph_connected(const Scenario& s) {
  std::set<std::string> seen{s.rooms.front().id};
  std::queue<std::string> q;
  q.push(s.rooms.front().id);
  while (!q.empty()) {
    const auto r = q.front();
    q.pop();
    for (const auto& d : s.doors)
      for (int k = 0; k < 2; ++k)
        if (d.connects[k] == r && seen.insert(d.connects[1 - k]).second) q.push(d.connects[1 - k]);
  }
  return seen.size() == s.rooms.size();
}

}  // namespace

TEST_CASE("fixture loads with three rooms and two doors") {
  const Scenario s = fixture3r();
  CHECK(s.rooms.size() == 3);
  CHECK(s.doors.size() == 2);
  CHECK(s.find_room_by_label("kitchen") != nullptr);
  CHECK(s.room_at({10, 2})->label == "kitchen");
  CHECK(parse_scenario(dump_scenario(s)).rooms.size() == 3);
  CHECK(dump_scenario(parse_scenario(dump_scenario(s))) == dump_scenario(s));
}

TEST_CASE("validation names the offending door") {
  Scenario s = fixture3r();
  s.doors[1].position = {10.0, 2.0};
  try {
    validate(s);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("d1") != std::string::npos);
  }
}

TEST_CASE("empty rooms list is rejected") {
  Scenario s = fixture3r();
  s.rooms.clear();
  try {
    validate(s);
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "no rooms");
  }
}

TEST_CASE("instruction payload must be unique") {
  const auto j = nlohmann::json::parse(R"({"kind":"text","target_label":"chair","embedding_seed":"chair_1"})");
  CHECK_THROWS_AS(instruction_from_json(j), Error);
}

TEST_CASE("malformed and missing files") {
  CHECK_THROWS_AS(parse_scenario("{not json"), Error);
  try {
    load_scenario("/nonexistent/scenario.json");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("rasterized corridor through aligned doors is free") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  for (double x = 1.0; x <= 10.0; x += 0.01) CHECK(g.at(Vec2{x, 2.0}) == CellState::Free);
  CHECK(g.at(Vec2{4.0, 1.0}) == CellState::Occupied);
  CHECK(g.at(Vec2{2.0, 0.05}) == CellState::Occupied);
}

TEST_CASE("dynamic obstacles obey include flag") {
  Scenario s = fixture3r();
  s.dynamic_obstacles.push_back({{5.5, 1.5, 6.5, 2.5}, true});
  CHECK(rasterize(s, true).at(Vec2{6, 2}) == CellState::Occupied);
  CHECK(rasterize(s, false).at(Vec2{6, 2}) == CellState::Free);
}

TEST_CASE("depth sees through aligned doors") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  DepthParams p;
  p.n_rays = 1;
  const DepthScan scan = simulate_depth(g, {{1, 2}, 0.0}, p);
  REQUIRE(scan.ranges.size() == 1);
  CHECK(scan.bearing(0) == doctest::Approx(0.0));
  CHECK(scan.ranges[0] == doctest::Approx(5.0));
}

TEST_CASE("depth to a wall one metre away") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  DepthParams p;
  p.n_rays = 1;
  const Vec2 o{1.0, 1.1};
  const DepthScan scan = simulate_depth(g, {o, -std::numbers::pi / 2}, p);
  CHECK(std::abs(scan.ranges[0] - 1.0) <= g.cell_size() + 1e-9);
}

TEST_CASE("depth from an occupied pose is an error") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  CHECK_THROWS_AS(simulate_depth(g, {{4.0, 1.0}, 0.0}), Error);
}

TEST_CASE("ray casting agrees with a brute-force march") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  CounterRng rng(11);
  int checked = 0;
  while (checked < 300) {
    const Vec2 o{rng.uniform(0.3, 11.7), rng.uniform(0.3, 3.7)};
    if (g.at(o) != CellState::Free) continue;
    const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double r = cast_ray(g, o, a, 5.0);
    CHECK(std::abs(r - march(g, o, a, 5.0)) <= 0.002);
    if (r < 5.0) {
      const Vec2 hit = o + Vec2{std::cos(a), std::sin(a)} * (r + 1e-4);
      CHECK(g.at(hit) != CellState::Free);
    }
    ++checked;
  }
}

TEST_CASE("unicycle integration") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  RobotState st;
  st.pose = {{1, 2}, 0.0};
  auto r = step_robot(g, st, {0.5, 0.0}, 1.0);
  CHECK_FALSE(r.collision);
  CHECK(r.state.pose.position.x == doctest::Approx(1.5));
  CHECK(r.state.pose.position.y == doctest::Approx(2.0));
  CHECK(r.state.sim_time_s == doctest::Approx(1.0));

  st.params.max_yaw_rate_rps = std::numbers::pi;
  r = step_robot(g, st, {0.0, std::numbers::pi}, 0.5);
  CHECK(r.state.pose.yaw == doctest::Approx(std::numbers::pi / 2));
  CHECK(r.state.pose.position == st.pose.position);
}

TEST_CASE("collision blocks translation but not rotation") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  RobotState st;
  st.pose = {{1.0, 0.42}, -std::numbers::pi / 2};
  const auto r = step_robot(g, st, {0.5, 0.3}, 0.5);
  CHECK(r.collision);
  CHECK(r.state.pose.position == st.pose.position);
  CHECK(r.state.pose.yaw != doctest::Approx(st.pose.yaw));
}

TEST_CASE("commands beyond limits are rejected") {
  const OccupancyGrid g = rasterize(fixture3r(), false);
  RobotState st;
  st.pose = {{1, 2}, 0.0};
  CHECK_THROWS_AS(step_robot(g, st, {0.6, 0.0}), Error);
}

TEST_CASE("robot centre never enters an occupied cell") {
  World w(fixture3r());
  CounterRng rng(5);
  for (int i = 0; i < 3000; ++i) {
    w.step({rng.uniform(0.0, 0.5), rng.uniform(-1.0, 1.0)});
    CHECK(w.grid().at(w.robot().pose.position) == CellState::Free);
  }
}

TEST_CASE("generator is deterministic") {
  GeneratorParams p;
  p.n_rooms = 5;
  p.seed = 7;
  CHECK(dump_scenario(generate_scenario(p)) == dump_scenario(generate_scenario(p)));
}

TEST_CASE("two rooms get exactly one door") {
  GeneratorParams p;
  p.n_rooms = 2;
  CHECK(generate_scenario(p).doors.size() == 1);
}

TEST_CASE("generator rejects bad parameters") {
  GeneratorParams p;
  p.n_rooms = 1;
  CHECK_THROWS_AS(generate_scenario(p), Error);
  p.n_rooms = 4;
  p.room_size_min_m = 1.0;
  p.room_size_max_m = 1.5;
  CHECK_THROWS_AS(generate_scenario(p), Error);
}

TEST_CASE("generated door graphs are connected") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    GeneratorParams p;
    p.n_rooms = 2 + static_cast<int>(seed % 9);
    p.seed = seed;
    const Scenario s = generate_scenario(p);
    CHECK(door_graph_connected(s));
  }
  GeneratorParams p;
  p.n_rooms = 8;
  p.seed = 1;
  const Scenario s = generate_scenario(p);
  CHECK(door_graph_connected(s));
  for (const auto& o : s.objects) {
    const auto& labels = object_labels();
    CHECK(std::find(labels.begin(), labels.end(), o.label) != labels.end());
  }
}

#include <algorithm>

#include "support.hpp"

#include "hiernav/agent.hpp"
#include "hiernav/decision.hpp"
#include "hiernav/errors.hpp"
#include "hiernav/explore.hpp"
#include "hiernav/grid.hpp"
#include "hiernav/metrics.hpp"

using namespace hiernav;
using hiernav::test::fixture;
using hiernav::test::fixture3r;

namespace {

AgentStatus planned() {
  AgentStatus s;
  s.explored = s.has_map = s.has_plan = true;
  s.segment_count = 2;
  s.has_local_plan = true;
  return s;
}

std::size_t first_index(const Trace& t, const std::string& event) {
  const auto& ev = t.events();
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (ev[i].at("event") == event) return i;
  return ev.size();
}

class FixedBackend final : public DecisionBackend {
 public:
  explicit FixedBackend(Action a) : a_(a) {}
  std::string name() const override { return "fixed"; }
  Action decide(const AgentContext&) override { return a_; }

 private:
  Action a_;
};

}  // namespace

TEST_CASE("scripted policy table") {
  AgentStatus s;
  CHECK(scripted_policy(s) == Action::ExploreStep);
  s.explored = true;
  CHECK(scripted_policy(s) == Action::BuildMap);
  s.has_map = true;
  CHECK(scripted_policy(s) == Action::PlanGlobal);

  s = planned();
  CHECK(scripted_policy(s) == Action::ExecuteStep);
  s.conflict = true;
  CHECK(scripted_policy(s) == Action::ReplanLocal);
  s = planned();
  s.local_failures = 1;
  CHECK(scripted_policy(s) == Action::ReplanLocal);
  s.local_failures = 2;
  CHECK(scripted_policy(s) == Action::ReplanGlobal);
  s.global_replans = 3;
  CHECK(scripted_policy(s) == Action::ReportError);
  s = planned();
  s.global_replans = 4;
  CHECK(scripted_policy(s) == Action::ReportError);
  s = planned();
  s.segment_time_s = 61.0;
  CHECK(scripted_policy(s) == Action::ReplanGlobal);
  s = planned();
  s.visit_alert = true;
  CHECK(scripted_policy(s) == Action::ReplanGlobal);
  s = planned();
  s.has_local_plan = false;
  CHECK(scripted_policy(s) == Action::PlanLocal);
  s = planned();
  s.arrived = true;
  CHECK(scripted_policy(s) == Action::Stop);
}

TEST_CASE("action names round trip") {
  for (const auto& n : action_names()) CHECK(to_string(*parse_action(n)) == n);
  CHECK_FALSE(parse_action("FlyAway").has_value());
}

TEST_CASE("status json round trip") {
  AgentStatus s = planned();
  s.position = {1.5, 2.5};
  s.visit_counts = {{3, 2}};
  s.local_failures = 1;
  const AgentStatus r = status_from_json(to_json(s));
  CHECK(to_json(r) == to_json(s));
  CHECK(to_json(s).contains("plan_valid"));
}

TEST_CASE("decode action") {
  CHECK(decode_action(R"({"A":"PlanGlobal"})") == Action::PlanGlobal);
  CHECK_THROWS_AS(decode_action(R"({"A":"FlyAway"})"), Error);
  CHECK_THROWS_AS(decode_action(R"({"B":"Stop"})"), Error);
  CHECK_THROWS_AS(decode_action("not json"), Error);
}

TEST_CASE("context encoding carries the map") {
  const Scenario s = fixture3r();
  const OccupancyGrid g = rasterize(s, false);
  const auto gaps = door_gaps(s);
  const RegionLabeling labeling = segment_regions(g, gaps, s.rooms);
  AgentContext ctx;
  ctx.instruction = s.tasks[0];
  ctx.map = {{"graph", to_json(build_topo_graph(labeling, gaps))}, {"labels", labeling.labels()}};
  const std::string line = encode_context(ctx);
  CHECK(line.find('\n') == std::string::npos);
  const auto j = nlohmann::json::parse(line);
  for (const char* k : {"B", "I", "M", "P", "T", "S", "O"}) CHECK(j.contains(k));
  CHECK(j.at("M").at("graph").at("vertices").size() == 5);
}

TEST_CASE("mock service speaks the protocol") {
  MockDecisionService service;
  service.start(0);
  REQUIRE(service.port() != 0);
  ServiceBackend backend({"127.0.0.1", service.port()});
  AgentContext ctx;
  CHECK(backend.decide(ctx) == Action::ExploreStep);
  ctx.status = planned();
  CHECK(backend.decide(ctx) == Action::ExecuteStep);
  CHECK(service.requests_served() == 2);
  service.stop();
}

TEST_CASE("unreachable service raises a protocol error") {
  MockDecisionService service;
  service.start(0);
  const auto port = service.port();
  service.stop();
  ServiceBackend backend({"127.0.0.1", port}, std::chrono::milliseconds(500));
  CHECK_THROWS_AS(backend.decide({}), Error);
  CHECK_THROWS_AS(parse_endpoint("nohost"), Error);
  CHECK(parse_endpoint("127.0.0.1:7777").port == 7777);
}

TEST_CASE("oracle exploration copies the static grid") {
  World w(fixture3r());
  const ExploreResult r = explore(w);
  CHECK(r.ok);
  CHECK(r.memory == w.static_grid());
}

TEST_CASE("wall following maps the fixture") {
  World w(fixture3r());
  ExploreParams p;
  p.mode = ExploreMode::WallFollow;
  const ExploreResult r = explore(w, p);
  CHECK(r.loop_closed);
  CHECK(r.steps < p.step_budget);
  std::size_t free_truth = 0, free_seen = 0;
  const auto& truth = w.static_grid();
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (truth.cells()[i] == CellState::Free) {
      ++free_truth;
      if (r.memory.cells()[i] == CellState::Free) ++free_seen;
    }
  CHECK(static_cast<double>(free_seen) / static_cast<double>(free_truth) >= 0.9);
  CHECK(r.coverage == doctest::Approx(static_cast<double>(free_seen) / static_cast<double>(free_truth)));
}

TEST_CASE("wall following closes the loop in a single room") {
  Scenario s = fixture3r();
  s.rooms.resize(1);
  s.doors.clear();
  s.objects.clear();
  s.tasks = {Instruction::at({2, 2})};
  World w(s);
  ExploreParams p;
  p.mode = ExploreMode::WallFollow;
  const ExploreResult r = explore(w, p);
  CHECK(r.loop_closed);
  CHECK(r.steps < p.step_budget);
}

TEST_CASE("fixture episode reaches the chair") {
  const Scenario s = fixture3r();
  const EpisodeResult r = run_episode(s, 0);
  CHECK(r.termination == Termination::Arrived);
  CHECK(r.success);
  REQUIRE(r.goal.has_value());
  CHECK(s.find_object("chair_1")->rect.contains(*r.goal, 0.05));
  const double oracle = oracle_shortest(rasterize(s, false), s.start.position, *r.goal);
  CHECK(r.path_length_m >= oracle - 0.2);
  CHECK(r.path_length_m <= 10.8);
  CHECK(r.collisions == 0);
  CHECK(r.global_waypoints.size() == 2);
  CHECK(r.trace.events().back().at("event") == "terminate");
  CHECK(r.trace.events().back().at("code") == "Arrived");
}

TEST_CASE("episodes are deterministic") {
  AgentConfig cfg;
  cfg.record_poses = true;
  cfg.seed = 9;
  const auto a = run_episode(fixture3r(), 0, cfg);
  const auto b = run_episode(fixture3r(), 0, cfg);
  CHECK(a.trace.to_jsonl() == b.trace.to_jsonl());
}

TEST_CASE("blocked door escalates to unreachable") {
  const EpisodeResult r = run_episode(fixture("fixture3r_blocked.json"), 0);
  CHECK(r.termination == Termination::Unreachable);
  CHECK_FALSE(r.success);
  CHECK(r.global_replans >= 1);
  CHECK(r.global_replans <= 3);
  const std::size_t g = first_index(r.trace, "replan_global");
  REQUIRE(g < r.trace.events().size());
  bool trigger = false;
  for (std::size_t i = 0; i < g; ++i) {
    const auto& e = r.trace.events()[i];
    if (e.at("event") == "replan_local" && e.at("ok") == false) trigger = true;
  }
  CHECK(trigger);
}

TEST_CASE("absent label is not found") {
  const EpisodeResult r = run_episode(fixture3r(), 1);
  CHECK(r.termination == Termination::NotFound);
  CHECK(r.path_length_m == doctest::Approx(0.0));
}

TEST_CASE("image and position goals") {
  CHECK(run_episode(fixture3r(), 2).success);
  const EpisodeResult r = run_episode(fixture3r(), 3);
  CHECK(r.success);
  CHECK(distance(*r.goal, {3, 3}) < 0.5);
}

TEST_CASE("ring episode and ablations") {
  const Scenario ring = fixture("ring4.json");
  CHECK(run_episode(ring, 0).success);
  CHECK(run_episode(ring, 1).success);
  AgentConfig cfg;
  cfg.no_global = true;
  const EpisodeResult ng = run_episode(ring, 1, cfg);
  CHECK(first_index(ng.trace, "global_plan") == ng.trace.events().size());
  cfg = {};
  cfg.no_local = true;
  CHECK(run_episode(fixture3r(), 0, cfg).success);
}

TEST_CASE("service backend matches the scripted policy") {
  MockDecisionService service;
  service.start(0);
  ServiceBackend backend({"127.0.0.1", service.port()});
  const auto a = run_episode(fixture3r(), 0, {}, &backend);
  const auto b = run_episode(fixture3r(), 0);
  CHECK(a.trace.to_jsonl() == b.trace.to_jsonl());
  CHECK(service.requests_served() == static_cast<std::size_t>(a.decisions));
  service.stop();
}

TEST_CASE("bad backend answers fall back to the scripted policy") {
  FixedBackend fly(Action::BuildMap);
  const auto r = run_episode(fixture3r(), 0, {}, &fly);
  CHECK(r.success);
  CHECK(r.trace.count("backend_fallback") > 0);
  for (const auto& e : r.trace.events())
    if (e.at("event") == "backend_fallback") CHECK(e.at("reason").get<std::string>().find("inapplicable") != std::string::npos);
}

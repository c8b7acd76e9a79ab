#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hiernav/bench.hpp"
#include "hiernav/errors.hpp"
#include "hiernav/global_planner.hpp"
#include "hiernav/grid.hpp"
#include "hiernav/metrics.hpp"
#include "hiernav/scenario.hpp"
#include "hiernav/semantic_field.hpp"
#include "hiernav/topo_map.hpp"

using namespace hiernav;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Map {
  OccupancyGrid grid;
  RegionLabeling labeling;
  TopoGraph graph;
};

Map build_map(const Scenario& s) {
  Map m;
  m.grid = rasterize(s, false);
  const auto gaps = door_gaps(s);
  m.labeling = segment_regions(m.grid, gaps, s.rooms);
  m.graph = build_topo_graph(m.labeling, gaps);
  return m;
}

double brute_force(const SearchGraph& sg) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<char> on(static_cast<std::size_t>(sg.vertex_count), 0);
  std::function<void(int, double)> dfs = [&](int v, double cost) {
    if (v == sg.goal) {
      best = std::min(best, cost);
      return;
    }
    on[static_cast<std::size_t>(v)] = 1;
    for (const auto& a : sg.adjacency[static_cast<std::size_t>(v)])
      if (!on[static_cast<std::size_t>(a.to)] && std::isfinite(a.w)) dfs(a.to, cost + a.w);
    on[static_cast<std::size_t>(v)] = 0;
  };
  dfs(sg.start, 0.0);
  return best;
}

void criterion_graph_search() {
  int scenarios = 0, queries = 0, mismatches = 0;
  double search_time = 0.0;
  for (std::uint64_t seed = 0; scenarios < 200; ++seed) {
    GeneratorParams p;
    p.n_rooms = 2 + static_cast<int>(seed % 4);
    p.seed = 1000 + seed;
    const Scenario s = generate_scenario(p);
    const Map m = build_map(s);
    if (m.graph.vertices.size() > 12) continue;
    ++scenarios;
    const auto samples = sample_free_points(m.grid, 0.5, seed);
    for (std::size_t k = 0; k < samples.points.size(); k += 7) {
      const Vec2 goal = samples.points[k];
      if (!m.labeling.locate(goal) || !m.labeling.locate(s.start.position)) continue;
      const auto t0 = Clock::now();
      double planned = std::numeric_limits<double>::infinity();
      try {
        planned = plan_global(m.graph, m.labeling, s.start.position, goal).total_cost_m;
      } catch (const Error&) {
      }
      const double oracle = brute_force(build_search_graph(m.graph, m.labeling, s.start.position, goal));
      search_time += seconds_since(t0);
      ++queries;
      if (!(planned == oracle || (std::isinf(planned) && std::isinf(oracle)))) ++mismatches;
    }
  }
  report(1, mismatches == 0 && search_time < 5.0,
         fmt::format("{} scenarios, {} queries, {} mismatches, {:.3f} s", scenarios, queries, mismatches, search_time));
}

const SceneObject* find_target(const Scenario& s, const std::string& label, const std::string& room_label) {
  for (const auto& o : s.objects)
    if (o.label == label && s.find_room(o.room)->label == room_label) return &o;
  return nullptr;
}

void criterion_goal_resolution() {
  int text_total = 0, text_ok = 0, image_total = 0, image_ok = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    GeneratorParams p;
    p.n_rooms = 5 + static_cast<int>(seed % 6);
    p.seed = 2000 + seed;
    const Scenario s = generate_scenario(p);
    const Map m = build_map(s);
    const SemanticField field = SemanticField::from_scenario(s);
    const auto samples = sample_free_points(m.grid, 4.0, seed);
    for (const auto& task : s.tasks) {
      if (task.kind != InstructionKind::Text) continue;
      ++text_total;
      std::optional<int> constraint;
      if (task.region_label) constraint = m.labeling.find_label(*task.region_label);
      try {
        const Vec2 g = resolve_goal(task, field, samples, m.labeling, constraint).point;
        bool ok = false;
        if (task.region_label) {
          const SceneObject* o = find_target(s, task.target_label, *task.region_label);
          ok = o != nullptr && o->rect.contains(g);
        } else {
          for (const auto& o : s.objects) ok = ok || (o.label == task.target_label && o.rect.contains(g));
        }
        text_ok += ok ? 1 : 0;
      } catch (const Error&) {
      }
    }
    for (const auto& o : s.objects) {
      ++image_total;
      try {
        const Vec2 g = resolve_goal(Instruction::image(o.id), field, samples, m.labeling).point;
        image_ok += o.rect.contains(g) ? 1 : 0;
      } catch (const Error&) {
      }
    }
  }
  const double text_rate = static_cast<double>(text_ok) / text_total;
  const double image_rate = static_cast<double>(image_ok) / image_total;
  report(2, text_ok == text_total && image_rate >= 0.95,
         fmt::format("text {}/{} ({:.3f}), image {}/{} ({:.3f})", text_ok, text_total, text_rate, image_ok, image_total, image_rate));
}

BenchConfig bench_config() {
  BenchConfig c;
  c.workers = 1;
  c.keep_traces = true;
  return c;
}

double max_wall(const BenchReport& r) {
  double m = 0.0;
  for (const auto& row : r.rows) m = std::max(m, row.wall_time_s);
  return m;
}

double bucket_spl(const BenchReport& r, int hops) {
  const auto it = r.by_hops.find(hops);
  return it == r.by_hops.end() ? std::numeric_limits<double>::quiet_NaN() : it->second.spl;
}

// Every replan_global needs a trigger since the previous one.
bool escalation_ok(const std::vector<nlohmann::json>& trace, int& checked) {
  bool armed = false;
  for (const auto& e : trace) {
    const std::string ev = e.at("event").get<std::string>();
    if ((ev == "replan_local" && e.at("ok") == false) || ev == "segment_timeout" || ev == "visit_limit") armed = true;
    if (ev == "replan_global") {
      ++checked;
      if (!armed) return false;
      armed = false;
    }
  }
  return true;
}

double waypoint_clearance(const OccupancyGrid& g, Vec2 w) {
  const CellIndex c = g.world_to_cell(w);
  double d = std::numeric_limits<double>::infinity();
  for (int dy = -6; dy <= 6; ++dy)
    for (int dx = -6; dx <= 6; ++dx) {
      const CellIndex n{c.col + dx, c.row + dy};
      if (g.at(n) == CellState::Occupied) d = std::min(d, distance_to_rect(w, g.cell_rect(n)));
    }
  return d;
}

}  // namespace

int main() {
  const auto t_all = Clock::now();
  criterion_graph_search();
  criterion_goal_resolution();

  const std::vector<Scenario> corpus = generate_corpus(100, 5, 10, 0);
  std::vector<const BenchReport*> all_reports;

  BenchConfig full_cfg = bench_config();
  const BenchReport full = run_bench(corpus, full_cfg);
  all_reports.push_back(&full);
  report(3, full.aggregate.sr >= 0.95 && full.aggregate.spl >= 0.80 && max_wall(full) < 1.0,
         fmt::format("{} episodes, SR {:.4f}, SPL {:.4f}, slowest episode {:.3f} s", full.rows.size(), full.aggregate.sr,
                     full.aggregate.spl, max_wall(full)));

  BenchConfig ng_cfg = bench_config();
  ng_cfg.agent.no_global = true;
  const BenchReport no_global = run_bench(corpus, ng_cfg);
  all_reports.push_back(&no_global);
  {
    bool ok = true;
    std::string detail = "no-global/full SPL by hops:";
    for (int h = 1; h <= 4; ++h) {
      const double ng = bucket_spl(no_global, h), fu = bucket_spl(full, h);
      detail += fmt::format(" {}:{:.3f}/{:.3f}", h, ng, fu);
      ok = ok && std::isfinite(ng) && std::isfinite(fu) && ng <= fu;
      if (h > 1) ok = ok && ng < bucket_spl(no_global, h - 1);
    }
    const double decline = bucket_spl(full, 1) - bucket_spl(full, 4);
    ok = ok && decline < 0.15;
    report(4, ok, detail + fmt::format(", full decline {:.3f}", decline));
  }

  const std::vector<Scenario> fifty(corpus.begin(), corpus.begin() + 50);
  std::vector<BenchReport> obstacle_runs;
  obstacle_runs.reserve(8);
  {
    std::vector<double> sr_full, sr_nl;
    for (int k = 0; k <= 3; ++k) {
      BenchConfig c = bench_config();
      c.obstacles = k;
      obstacle_runs.push_back(run_bench(fifty, c));
      sr_full.push_back(obstacle_runs.back().aggregate.sr);
      c.agent.no_local = true;
      obstacle_runs.push_back(run_bench(fifty, c));
      sr_nl.push_back(obstacle_runs.back().aggregate.sr);
    }
    bool ok = true;
    std::string detail = "SR full/no-local by obstacles:";
    for (int k = 0; k <= 3; ++k) {
      detail += fmt::format(" {}:{:.3f}/{:.3f}", k, sr_full[k], sr_nl[k]);
      if (k > 0) ok = ok && sr_full[k] <= sr_full[k - 1] && sr_full[k] >= sr_nl[k];
    }
    ok = ok && sr_full[3] - sr_nl[3] >= 0.2;
    report(5, ok, detail);
  }
  for (const auto& r : obstacle_runs) all_reports.push_back(&r);

  {
    bool ok = true;
    int episodes = 0, checked = 0;
    for (const auto* r : all_reports)
      for (const auto& row : r->rows) {
        ++episodes;
        ok = escalation_ok(row.trace, checked) && ok;
      }
    report(6, ok, fmt::format("{} traces, {} replan_global events checked", episodes, checked));
  }

  {
    const std::vector<EpisodeScore> a{{true, 5.0, 5.0}};
    const std::vector<EpisodeScore> b{{true, 10.0, 5.0}};
    const std::vector<EpisodeScore> c{{false, 3.0, 5.0}, {true, 5.0, 5.0}};
    const SrSpl ra = compute_sr_spl(a), rb = compute_sr_spl(b), rc = compute_sr_spl(c);
    const bool ok = std::abs(ra.sr - 1.0) <= 1e-12 && std::abs(ra.spl - 1.0) <= 1e-12 && std::abs(rb.spl - 0.5) <= 1e-12 &&
                    std::abs(rc.sr - 0.5) <= 1e-12 && std::abs(rc.spl - 0.5) <= 1e-12;
    report(7, ok, fmt::format("SPL {} / {} / {}", ra.spl, rb.spl, rc.spl));
  }

  {
    BenchConfig c = bench_config();
    c.workers = 4;
    const BenchReport again = run_bench(corpus, c);
    const bool ok = report_json_body(again) == report_json_body(full) && report_csv(again) == report_csv(full);
    report(8, ok, fmt::format("{} episodes, reports {}", again.rows.size(), ok ? "identical" : "differ"));
  }

  {
    long waypoints = 0, violations = 0, collisions = 0;
    double min_clear = std::numeric_limits<double>::infinity();
    const double inflation = full_cfg.agent.local.inflation_m;
    for (const BenchReport* r : std::vector<const BenchReport*>{&full, &no_global, &obstacle_runs[0]}) {
      std::size_t i = 0;
      for (const auto& row : r->rows) {
        collisions += row.collisions;
        while (corpus[i].name != row.scenario) ++i;
        const OccupancyGrid g = rasterize(corpus[i], false);
        for (const auto& plan : row.local_waypoints)
          for (const Vec2 w : plan) {
            ++waypoints;
            const double d = waypoint_clearance(g, w);
            min_clear = std::min(min_clear, d);
            if (d < inflation - 1e-6) ++violations;
          }
      }
    }
    report(9, violations == 0 && collisions == 0,
           fmt::format("{} waypoints, {} inside inflation, min clearance {:.3f} m, {} collisions", waypoints, violations, min_clear,
                       collisions));
  }

  std::printf("acceptance: %d failing criteria, %.1f s\n", failures, seconds_since(t_all));
  return failures == 0 ? 0 : 1;
}

#include "hiernav/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <thread>

#include <spdlog/spdlog.h>

#include "hiernav/errors.hpp"
#include "hiernav/grid.hpp"
#include "hiernav/local_planner.hpp"
#include "hiernav/rng.hpp"

namespace hiernav {

namespace {

const SceneObject* task_object(const Scenario& s, const Instruction& task) {
  if (task.kind == InstructionKind::Image) return s.find_object(task.embedding_seed);
  if (task.kind != InstructionKind::Text) return nullptr;
  const Room* region = task.region_label ? s.find_room_by_label(*task.region_label) : nullptr;
  for (const auto& o : s.objects)
    if (o.label == task.target_label && (region == nullptr || o.room == region->id)) return &o;
  return nullptr;
}

std::string num(double v) { return nlohmann::json(v).dump(); }

}  // namespace

int room_hops(const Scenario& s, std::string_view room_a, std::string_view room_b) {
  if (room_a == room_b) return 0;
  std::map<std::string, int, std::less<>> dist{{std::string(room_a), 0}};
  std::deque<std::string> q{std::string(room_a)};
  while (!q.empty()) {
    const std::string r = q.front();
    q.pop_front();
    for (const auto& d : s.doors) {
      for (int side = 0; side < 2; ++side) {
        if (d.connects[static_cast<std::size_t>(side)] != r) continue;
        const std::string& other = d.connects[static_cast<std::size_t>(1 - side)];
        if (dist.contains(other)) continue;
        dist[other] = dist[r] + 1;
        if (other == room_b) return dist[other];
        q.push_back(other);
      }
    }
  }
  return -1;
}

std::optional<std::string> task_room(const Scenario& s, const Instruction& task) {
  if (task.kind == InstructionKind::Text && task.region_label) {
    if (const Room* r = s.find_room_by_label(*task.region_label)) return r->id;
    return std::nullopt;
  }
  if (const SceneObject* o = task_object(s, task)) return o->room;
  if (task.kind == InstructionKind::Position)
    if (const Room* r = s.room_at(task.position)) return r->id;
  return std::nullopt;
}

std::optional<Vec2> task_reference_point(const Scenario& s, const Instruction& task) {
  if (task.kind == InstructionKind::Position) return task.position;
  if (const SceneObject* o = task_object(s, task)) return o->rect.center();
  return std::nullopt;
}

std::vector<std::size_t> select_tasks(const Scenario& s, TaskSelection sel) {
  std::vector<std::size_t> all(s.tasks.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (sel == TaskSelection::All || all.empty()) return all;
  const Room* start = s.room_at(s.start.position);
  std::size_t best = 0;
  int best_hops = -2;
  for (const std::size_t i : all) {
    const auto room = task_room(s, s.tasks[i]);
    const int h = (start != nullptr && room) ? room_hops(s, start->id, *room) : -1;
    if (h > best_hops) {
      best_hops = h;
      best = i;
    }
  }
  return {best};
}

Scenario inject_obstacles(const Scenario& s, std::size_t task, int count, double size_m, std::uint64_t seed) {
  Scenario out = s;
  if (count <= 0) return out;
  const auto ref = task_reference_point(s, s.tasks.at(task));
  if (!ref) return out;
  const OccupancyGrid grid = rasterize(s, false);
  const auto path = grid_shortest_path(grid, s.start.position, *ref, 0.2);
  if (!path) return out;
  std::vector<Vec2> poly{s.start.position};
  for (const auto& c : path->cells) poly.push_back(grid.cell_center(c));
  const double total = polyline_length(poly);
  if (total <= 0.0) return out;
  const auto at_arc = [&](double target) {
    double acc = 0.0;
    for (std::size_t i = 1; i < poly.size(); ++i) {
      const double len = distance(poly[i - 1], poly[i]);
      if (acc + len >= target && len > 0.0) return poly[i - 1] + (poly[i] - poly[i - 1]) * ((target - acc) / len);
      acc += len;
    }
    return poly.back();
  };

  const SceneObject* target_obj = task_object(s, s.tasks[task]);
  const double half = size_m / 2.0;
  std::vector<Vec2> placed;
  CounterRng rng(hash_combine(hash_combine(seed, s.name), static_cast<std::uint64_t>(task)));
  const auto acceptable = [&](Vec2 c) {
    const Room* room = s.room_at(c);
    if (room == nullptr) return false;
    const Rect r{c.x - half, c.y - half, c.x + half, c.y + half};
    const Rect inner{room->rect.x0 + 0.6, room->rect.y0 + 0.6, room->rect.x1 - 0.6, room->rect.y1 - 0.6};
    if (!inner.valid() || !inner.contains(r)) return false;
    for (const auto& d : s.doors)
      if (distance_to_rect(d.position, r) < 1.0) return false;
    if (distance_to_rect(s.start.position, r) < 1.0) return false;
    if (target_obj != nullptr ? distance_to_rect(c, target_obj->rect) < 1.5 : distance(c, *ref) < 1.5) return false;
    for (const Vec2 p : placed)
      if (distance(p, c) < 2.0) return false;
    return true;
  };
  for (int j = 0; j < count; ++j) {
    for (int attempt = 0; attempt < 80; ++attempt) {
      const double frac = attempt == 0 ? static_cast<double>(j + 1) / (count + 1) : rng.uniform(0.1, 0.9);
      Vec2 c = at_arc(frac * total);
      c = {std::round(c.x * 20.0) / 20.0, std::round(c.y * 20.0) / 20.0};
      if (!acceptable(c)) continue;
      placed.push_back(c);
      out.dynamic_obstacles.push_back({{c.x - half, c.y - half, c.x + half, c.y + half}, true});
      break;
    }
  }
  return out;
}

std::vector<Scenario> generate_corpus(std::size_t n, int min_rooms, int max_rooms, std::uint64_t base_seed) {
  if (min_rooms > max_rooms) throw Error(ErrorKind::InvalidArgument, "min_rooms > max_rooms");
  std::vector<Scenario> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    GeneratorParams p;
    p.seed = base_seed + k;
    p.n_rooms = min_rooms + static_cast<int>(k % static_cast<std::size_t>(max_rooms - min_rooms + 1));
    out.push_back(generate_scenario(p));
  }
  return out;
}

nlohmann::json config_echo(const BenchConfig& c) {
  return {{"ablations", {{"no_global", c.agent.no_global}, {"no_local", c.agent.no_local}}},
          {"seed", c.agent.seed},
          {"backend", c.service ? c.service->str() : std::string("scripted")},
          {"obstacles", c.obstacles},
          {"obstacle_seed", c.obstacle_seed},
          {"tasks", c.tasks == TaskSelection::All ? "all" : "farthest"},
          {"explore", to_string(c.agent.explore.mode)}};
}

BenchReport run_bench(const std::vector<Scenario>& scenarios, const BenchConfig& config) {
  struct Job {
    std::size_t scenario;
    std::size_t task;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < scenarios.size(); ++i)
    for (const std::size_t t : select_tasks(scenarios[i], config.tasks)) jobs.push_back({i, t});

  BenchReport report;
  report.config = config_echo(config);
  report.rows.resize(jobs.size());

  const auto run_job = [&](const Job& job, DecisionBackend* backend) {
    const Scenario& base = scenarios[job.scenario];
    const Scenario s = inject_obstacles(base, job.task, config.obstacles, config.obstacle_size_m, config.obstacle_seed);
    BenchRow row;
    row.scenario = base.name;
    row.task = job.task;
    row.obstacles = static_cast<int>(s.dynamic_obstacles.size() - base.dynamic_obstacles.size());
    const Room* start_room = base.room_at(base.start.position);
    const auto goal_room = task_room(base, base.tasks[job.task]);
    row.hops = (start_room != nullptr && goal_room) ? room_hops(base, start_room->id, *goal_room) : -1;

    const auto t0 = std::chrono::steady_clock::now();
    EpisodeResult r;
    try {
      r = run_episode(s, job.task, config.agent, backend);
    } catch (const std::exception& e) {
      spdlog::error("{} task {}: {}", base.name, job.task, e.what());
      r.termination = Termination::ErrorReport;
    }
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    row.success = r.success;
    row.termination = r.termination;
    row.path_length_m = r.path_length_m;
    row.sim_time_s = r.sim_time_s;
    row.local_replans = r.local_replans;
    row.global_replans = r.global_replans;
    row.collisions = r.collisions;
    const auto goal = r.goal ? r.goal : task_reference_point(base, base.tasks[job.task]);
    if (goal) {
      try {
        row.oracle_length_m = oracle_shortest(rasterize(base, false), base.start.position, *goal, config.agent.robot.radius_m);
      } catch (const Error&) {
        row.oracle_length_m = 0.0;
      }
    }
    row.spl_contrib = spl_contribution({row.success, row.path_length_m, row.oracle_length_m});
    if (config.keep_traces) {
      row.trace = r.trace.events();
      row.local_waypoints = r.local_waypoints;
    }
    return row;
  };

  unsigned workers = config.workers != 0 ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    std::unique_ptr<DecisionBackend> backend;
    if (config.service) backend = std::make_unique<ServiceBackend>(*config.service);
    for (std::size_t i = next++; i < jobs.size(); i = next++) report.rows[i] = run_job(jobs[i], backend.get());
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (!report.rows.empty()) {
    std::vector<EpisodeScore> all;
    std::map<int, std::vector<EpisodeScore>> buckets;
    double time = 0.0;
    for (const auto& row : report.rows) {
      const EpisodeScore e{row.success, row.path_length_m, row.oracle_length_m};
      all.push_back(e);
      buckets[row.hops].push_back(e);
      time += row.sim_time_s;
    }
    report.aggregate = compute_sr_spl(all);
    report.mean_time_s = time / static_cast<double>(report.rows.size());
    for (const auto& [h, v] : buckets) {
      report.by_hops[h] = compute_sr_spl(v);
      report.hop_counts[h] = v.size();
    }
  }
  return report;
}

namespace {

nlohmann::json report_document(const BenchReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"scenario", row.scenario},
                    {"task", row.task},
                    {"hops", row.hops},
                    {"obstacles", row.obstacles},
                    {"success", row.success},
                    {"termination", to_string(row.termination)},
                    {"path_length_m", row.path_length_m},
                    {"oracle_length_m", row.oracle_length_m},
                    {"spl_contrib", row.spl_contrib},
                    {"sim_time_s", row.sim_time_s},
                    {"replans", {{"local", row.local_replans}, {"global", row.global_replans}}},
                    {"collisions", row.collisions}});
  nlohmann::json hops = nlohmann::json::object();
  for (const auto& [h, v] : r.by_hops) hops[std::to_string(h)] = {{"n", r.hop_counts.at(h)}, {"SR", v.sr}, {"SPL", v.spl}};
  return {{"aggregates", {{"SR", r.aggregate.sr}, {"SPL", r.aggregate.spl}, {"mean_time_s", r.mean_time_s}, {"episodes", r.rows.size()}}},
          {"by_hops", hops},
          {"config", r.config},
          {"rows", rows}};
}

}  // namespace

std::string report_json_body(const BenchReport& r) { return report_document(r).dump(2) + "\n"; }

std::string report_json(const BenchReport& r, const std::string& timestamp) {
  const std::string body = report_json_body(r);
  return "{\n  \"timestamp\": " + nlohmann::json(timestamp).dump() + ",\n" + body.substr(2);
}

std::string report_csv(const BenchReport& r) {
  std::string out = "scenario,task,hops,obstacles,success,termination,path_length_m,oracle_length_m,spl_contrib,sim_time_s,local_replans,global_replans,collisions\n";
  for (const auto& row : r.rows) {
    out += row.scenario + "," + std::to_string(row.task) + "," + std::to_string(row.hops) + "," + std::to_string(row.obstacles) + "," +
           (row.success ? "1" : "0") + "," + to_string(row.termination) + "," + num(row.path_length_m) + "," + num(row.oracle_length_m) + "," +
           num(row.spl_contrib) + "," + num(row.sim_time_s) + "," + std::to_string(row.local_replans) + "," + std::to_string(row.global_replans) +
           "," + std::to_string(row.collisions) + "\n";
  }
  return out;
}

}  // namespace hiernav

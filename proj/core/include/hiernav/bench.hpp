#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiernav/agent.hpp"
#include "hiernav/decision.hpp"
#include "hiernav/metrics.hpp"
#include "hiernav/scenario.hpp"

namespace hiernav {

enum class TaskSelection { All, Farthest };

struct BenchConfig {
  AgentConfig agent;
  TaskSelection tasks = TaskSelection::All;
  /// Obstacles spawned after mapping along each task's optimal route.
  int obstacles = 0;
  double obstacle_size_m = 0.8;
  std::uint64_t obstacle_seed = 0;
  /// Decision service; scripted policy when empty.
  std::optional<Endpoint> service;
  /// 0 = hardware concurrency.
  unsigned workers = 0;
  /// Keep each episode's trace in the rows (for trace audits).
  bool keep_traces = false;
};

struct BenchRow {
  std::string scenario;
  std::size_t task = 0;
  int hops = 0;
  int obstacles = 0;
  bool success = false;
  Termination termination = Termination::ErrorReport;
  double path_length_m = 0.0;
  double oracle_length_m = 0.0;
  double spl_contrib = 0.0;
  double sim_time_s = 0.0;
  int local_replans = 0;
  int global_replans = 0;
  int collisions = 0;
  double wall_time_s = 0.0;  // not serialized
  std::vector<nlohmann::json> trace;
  std::vector<std::vector<Vec2>> local_waypoints;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  SrSpl aggregate;
  double mean_time_s = 0.0;
  std::map<int, SrSpl> by_hops;
  std::map<int, std::size_t> hop_counts;
  nlohmann::json config;
};

/// Door-graph hop count between two rooms (BFS); -1 when disconnected.
int room_hops(const Scenario& s, std::string_view room_a, std::string_view room_b);

/// Room that a task points at: its region label, else the room of its object or point.
std::optional<std::string> task_room(const Scenario& s, const Instruction& task);

/// Ground-truth goal point for oracle lengths when the agent found none.
std::optional<Vec2> task_reference_point(const Scenario& s, const Instruction& task);

/// Task indices chosen by the selection rule.
std::vector<std::size_t> select_tasks(const Scenario& s, TaskSelection sel);

/// Copy of `s` with up to `count` square obstacles (spawned after mapping)
/// placed along the optimal route of the task, away from doors, walls, the
/// start, the target object and each other.
Scenario inject_obstacles(const Scenario& s, std::size_t task, int count, double size_m, std::uint64_t seed);

/// Seeded corpus: scenario k uses seed base_seed + k and a room count in
/// [min_rooms, max_rooms].
std::vector<Scenario> generate_corpus(std::size_t n, int min_rooms, int max_rooms, std::uint64_t base_seed);

/// Runs every selected episode (parallel by index; results in input order).
BenchReport run_bench(const std::vector<Scenario>& scenarios, const BenchConfig& config);

nlohmann::json config_echo(const BenchConfig& config);

/// Report JSON; the timestamp sits alone on the second line.
std::string report_json(const BenchReport& r, const std::string& timestamp);
/// Same document without the timestamp line.
std::string report_json_body(const BenchReport& r);
std::string report_csv(const BenchReport& r);

}  // namespace hiernav

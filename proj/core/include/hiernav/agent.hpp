#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiernav/decision.hpp"
#include "hiernav/explore.hpp"
#include "hiernav/global_planner.hpp"
#include "hiernav/local_planner.hpp"
#include "hiernav/scenario.hpp"
#include "hiernav/semantic_field.hpp"
#include "hiernav/sim.hpp"
#include "hiernav/trace.hpp"

namespace hiernav {

struct AgentConfig {
  std::uint64_t seed = 0;
  bool no_global = false;
  bool no_local = false;
  ExploreParams explore;
  EmbeddingConfig embedding;
  GoalParams goal;
  double sample_density = 4.0;
  LocalParams local;
  DepthParams depth;
  RobotParams robot;

  double arrival_radius_m = 0.5;
  /// Distance to p_end at which the policy stops.
  double goal_tolerance_m = 0.15;
  double success_radius_m = 1.0;
  double segment_timeout_s = 60.0;
  int visit_limit = 3;
  int max_global_replans = 3;
  int step_budget = 20000;
  double conflict_lookahead_m = 2.0;
  /// p_end snaps to a cell with this clearance within goal_snap_m.
  double goal_clearance_m = 0.35;
  double goal_snap_m = 1.0;
  /// Partial plans are renewed when less than this much path remains.
  double replan_horizon_m = 1.0;
  /// Collisions per segment before a local replan is declared failed.
  int max_bumps = 3;
  std::size_t scan_memory = 4;
  bool record_poses = false;
  std::string background = "Indoor robot navigating a multi-room floor to a described target.";
};

enum class Termination { Arrived, ErrorReport, Timeout, Unreachable, NotFound };

const char* to_string(Termination t);

struct EpisodeResult {
  bool success = false;
  Termination termination = Termination::ErrorReport;
  double path_length_m = 0.0;
  double sim_time_s = 0.0;
  int local_replans = 0;
  int global_replans = 0;
  int collisions = 0;
  int decisions = 0;
  std::optional<Vec2> goal;
  std::vector<Vec2> trajectory;
  std::vector<Vec2> global_waypoints;
  std::vector<std::vector<Vec2>> local_waypoints;
  std::vector<Rect> obstacles;
  Trace trace;
};

/// Full loop: explore, build map, resolve the goal, plan globally, then plan
/// and execute local segments until a terminal action. Failures become
/// termination codes. `backend` defaults to the scripted policy.
EpisodeResult run_episode(const Scenario& scenario, std::size_t task_index, const AgentConfig& config = {},
                          DecisionBackend* backend = nullptr);

}  // namespace hiernav

#include "hiernav/agent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include <spdlog/spdlog.h>

#include "hiernav/errors.hpp"
#include "hiernav/metrics.hpp"
#include "hiernav/topo_map.hpp"

namespace hiernav {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Arrived: return "Arrived";
    case Termination::ErrorReport: return "ErrorReport";
    case Termination::Timeout: return "Timeout";
    case Termination::Unreachable: return "Unreachable";
    case Termination::NotFound: return "NotFound";
  }
  return "?";
}

namespace {

class Episode {
 public:
  Episode(const Scenario& scenario, std::size_t task_index, const AgentConfig& cfg, DecisionBackend* backend)
      : cfg_(cfg), world_(scenario, cfg.robot), explorer_(world_, explore_params()), backend_(backend) {
    if (task_index >= scenario.tasks.size())
      throw Error(ErrorKind::InvalidArgument, "task index " + std::to_string(task_index) + " out of range");
    instruction_ = scenario.tasks[task_index];
    status_.segment_timeout_s = cfg.segment_timeout_s;
    status_.max_global_replans = cfg.max_global_replans;
  }

  EpisodeResult run() {
    while (!done_) {
      if (result_.decisions >= cfg_.step_budget) {
        terminate(Termination::Timeout, false);
        break;
      }
      refresh_status();
      const Action a = decide();
      ++result_.decisions;
      last_action_ = a;
      execute(a);
    }
    result_.local_replans = status_.local_replans;
    result_.global_replans = status_.global_replans;
    result_.sim_time_s = sim_time_;
    return std::move(result_);
  }

 private:
  ExploreParams explore_params() const {
    ExploreParams p = cfg_.explore;
    p.depth = cfg_.depth;
    return p;
  }

  Vec2 pos() const { return world_.robot().pose.position; }

  void refresh_status() {
    status_.position = pos();
    status_.yaw = world_.robot().pose.yaw;
    status_.arrived = status_.has_plan && goal_ && distance(pos(), *goal_) <= cfg_.goal_tolerance_m;
    status_.local_plan_done = status_.has_local_plan && local_plan_done();
  }

  bool local_plan_done() const {
    if (follower_.done()) return true;
    return partial_plan_ && follower_.remaining_m(pos()) < std::min(cfg_.replan_horizon_m, 0.5 * plan_length_);
  }

  Action decide() {
    const Action scripted = scripted_policy(status_);
    if (backend_ == nullptr) return scripted;
    AgentContext ctx;
    ctx.status = status_;
    ctx.last_action = last_action_;
    if (backend_->needs_full_context()) {
      ctx.background = cfg_.background;
      ctx.instruction = instruction_;
      ctx.map = map_token_;
      ctx.plan_history = plan_history_;
      ctx.trajectory.assign(recent_poses_.begin(), recent_poses_.end());
    }
    std::string reason;
    try {
      const Action a = backend_->decide(ctx);
      if (action_applicable(a, status_)) return a;
      reason = std::string("inapplicable action ") + to_string(a);
    } catch (const Error& e) {
      reason = e.what();
    }
    trace("backend_fallback", {{"reason", reason}, {"action", to_string(scripted)}});
    spdlog::debug("backend fallback: {}", reason);
    return scripted;
  }

  void trace(std::string_view event, nlohmann::json fields = nlohmann::json::object()) {
    result_.trace.add(sim_time_, event, std::move(fields));
  }

  void terminate(Termination code, bool success) {
    done_ = true;
    result_.termination = code;
    result_.success = success;
    trace("terminate", {{"code", to_string(code)}, {"success", success}});
  }

  void execute(Action a) {
    switch (a) {
      case Action::ExploreStep: return explore_step();
      case Action::BuildMap: return build_map();
      case Action::PlanGlobal: return plan_global_action();
      case Action::PlanLocal: return plan_local_action(false);
      case Action::ReplanLocal: return plan_local_action(true);
      case Action::ExecuteStep: return execute_step();
      case Action::ReplanGlobal: return replan_global();
      case Action::ReportError: return terminate(Termination::ErrorReport, false);
      case Action::Stop: return stop();
    }
  }

  void explore_step() {
    if (!explorer_.step()) return;
    const ExploreResult r = explorer_.result();
    trace("explore", {{"mode", to_string(cfg_.explore.mode)}, {"steps", r.steps}, {"coverage", r.coverage}, {"loop_closed", r.loop_closed}});
    if (!r.ok) return terminate(Termination::ErrorReport, false);
    memory_ = r.memory;
    status_.explored = true;
    // Navigation starts from the scenario start pose.
    world_.set_robot(RobotState{world_.scenario().start, cfg_.robot, 0.0});
    result_.trajectory.push_back(pos());
  }

  void build_map() {
    const Scenario& s = world_.scenario();
    const auto gaps = door_gaps(s);
    labeling_ = segment_regions(memory_, gaps, s.rooms);
    graph_ = build_topo_graph(labeling_, gaps);
    field_.emplace(SemanticField::from_scenario(s, cfg_.embedding));
    samples_ = sample_free_points(memory_, cfg_.sample_density, cfg_.seed);
    clearance_ = clearance_map(memory_, cfg_.goal_clearance_m + 0.1);
    live_ = memory_;
    status_.has_map = true;
    refresh_map_token();
    trace("map_built", {{"regions", labeling_.region_count()}, {"entrances", graph_.vertices.size() - static_cast<std::size_t>(graph_.region_vertex_count())},
                        {"samples", samples_.points.size()}});
    for (const Rect& r : world_.spawn_post_mapping_obstacles()) {
      result_.obstacles.push_back(r);
      trace("obstacle_spawn", {{"rect", rect_json(r)}});
    }
  }

  void refresh_map_token() {
    if (backend_ == nullptr || !backend_->needs_full_context()) return;
    map_token_ = {{"graph", to_json(graph_)}, {"labels", field_->labels()}};
  }

  void plan_global_action() {
    std::optional<int> constraint;
    if (instruction_.kind == InstructionKind::Text && instruction_.region_label) {
      constraint = labeling_.find_label(*instruction_.region_label);
      if (!constraint) {
        trace("goal_error", {{"reason", "unknown region '" + *instruction_.region_label + "'"}});
        return terminate(Termination::NotFound, false);
      }
    }
    try {
      const ResolvedGoal g = resolve_goal(instruction_, *field_, samples_, labeling_, constraint, cfg_.goal);
      goal_ = snap_to_clearance(memory_, clearance_, g.point, cfg_.goal_clearance_m, cfg_.goal_snap_m);
      if (!labeling_.locate(*goal_)) throw Error(ErrorKind::NotFound, "goal outside every region");
      trace("goal", {{"point", point_json(*goal_)}, {"similarity", g.similarity}});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotFound && e.kind() != ErrorKind::InvalidArgument) throw;
      trace("goal_error", {{"reason", e.what()}});
      return terminate(Termination::NotFound, false);
    }
    result_.goal = goal_;
    if (!make_global_plan()) return;
    status_.has_plan = true;
  }

  std::optional<int> anchor_region() const {
    if (const auto r = labeling_.locate(pos())) return r;
    return std::nullopt;
  }

  /// Fills targets/segments; false (and terminated) when unreachable.
  bool make_global_plan() {
    targets_.clear();
    target_entrances_.clear();
    if (cfg_.no_global) {
      targets_.push_back(*goal_);
      target_entrances_.push_back(-1);
    } else {
      Vec2 from = pos();
      if (!anchor_region()) {
        const CellIndex c = labeling_.grid().world_to_cell(from);
        for (int r = 1; r <= 5 && !labeling_.locate(from); ++r)
          for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
              const Vec2 p = labeling_.grid().cell_center({c.col + dx, c.row + dy});
              if (labeling_.locate(p) && !labeling_.locate(from)) from = p;
            }
      }
      try {
        plan_ = plan_global(graph_, labeling_, from, *goal_);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Unreachable && e.kind() != ErrorKind::InvalidArgument) throw;
        trace("global_plan_failed", {{"reason", e.what()}});
        terminate(Termination::Unreachable, false);
        return false;
      }
      trace("global_plan", {{"waypoints", points_json(plan_.waypoints)}, {"cost_m", plan_.total_cost_m}, {"entrances", plan_.entrance_ids}});
      plan_history_.push_back({{"kind", "global"}, {"waypoints", points_json(plan_.waypoints)}, {"cost_m", plan_.total_cost_m}});
      targets_ = plan_.waypoints;
      target_entrances_ = plan_.entrance_ids;
      targets_.push_back(*goal_);
      target_entrances_.push_back(-1);
      result_.global_waypoints = plan_.waypoints;
    }
    status_.segment = 0;
    status_.segment_count = static_cast<int>(targets_.size());
    reset_segment();
    return true;
  }

  void reset_segment() {
    status_.segment_time_s = 0.0;
    status_.has_local_plan = false;
    status_.local_plan_done = false;
    status_.local_failures = 0;
    status_.conflict = false;
    timeout_reported_ = false;
    bumps_ = 0;
  }

  Vec2 segment_target() const { return targets_.at(static_cast<std::size_t>(status_.segment)); }

  void plan_local_action(bool replan) {
    const auto fail = [&](const std::string& reason) {
      status_.has_local_plan = false;
      status_.conflict = false;
      if (replan) {
        status_.local_failures = 2;
        ++status_.local_replans;
        trace("replan_local", {{"ok", false}, {"segment", status_.segment}, {"reason", reason}});
      } else {
        status_.local_failures = 1;
        trace("local_blocked", {{"segment", status_.segment}, {"reason", reason}});
      }
    };
    if (replan && bumps_ > cfg_.max_bumps) return fail("collision limit");

    const Vec2 target = segment_target();
    LocalPlan plan;
    try {
      if (cfg_.no_local) {
        plan = point_nav_plan(target);
      } else {
        std::vector<DepthScan> scans(recent_scans_.begin(), recent_scans_.end());
        scans.push_back(world_.scan(cfg_.depth));
        const LocalCostmap map = build_local_costmap(scans, live_, world_.robot().pose, cfg_.local);
        const ProjectedWaypoint proj = project_waypoint(target, world_.robot().pose, cfg_.local.window_side_m);
        plan = plan_local(map, pos(), pos() + proj.offset, cfg_.local, proj.clamped ? std::optional<Vec2>(target) : std::nullopt);
        partial_plan_ = proj.clamped || !plan.reaches_target;
      }
      if (plan.length_m < 0.05 && distance(pos(), target) > (is_final_segment() ? cfg_.goal_tolerance_m : cfg_.arrival_radius_m))
        throw Error(ErrorKind::LocalBlocked, "no progress");
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::LocalBlocked && e.kind() != ErrorKind::InvalidArgument) throw;
      return fail(e.what());
    }

    follower_ = PathFollower(plan.trajectory);
    plan_length_ = plan.length_m;
    status_.has_local_plan = true;
    status_.local_plan_done = false;
    status_.local_failures = 0;
    status_.conflict = false;
    trace("local_plan", {{"segment", status_.segment}, {"waypoints", points_json(plan.waypoints)}});
    result_.local_waypoints.push_back(plan.waypoints);
    plan_history_.push_back({{"kind", "local"}, {"segment", status_.segment}, {"length_m", plan.length_m}});
    if (plan_history_.size() > 20) plan_history_.erase(plan_history_.begin());
    if (replan) {
      ++status_.local_replans;
      trace("replan_local", {{"ok", true}, {"segment", status_.segment}});
    }
  }

  bool is_final_segment() const { return status_.segment + 1 >= status_.segment_count; }

  /// Point-goal navigation on the remembered grid without sensing.
  LocalPlan point_nav_plan(Vec2 target) {
    const auto path = grid_shortest_path(live_, pos(), target, cfg_.local.inflation_m, cfg_.local.inflation_m);
    if (!path) throw Error(ErrorKind::LocalBlocked, "no path on memory");
    LocalPlan plan;
    plan.target = target;
    plan.cells = path->cells;
    plan.trajectory.push_back(pos());
    const auto& cells = path->cells;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const bool last = i + 1 == cells.size();
      if (!last) {
        const CellIndex a = cells[i - 1], b = cells[i], c = cells[i + 1];
        if (b.col - a.col == c.col - b.col && b.row - a.row == c.row - b.row) continue;
      }
      plan.trajectory.push_back(last ? target : live_.cell_center(cells[i]));
    }
    if (cells.size() == 1) plan.trajectory.push_back(target);
    plan.raw_length_m = path->length_m;
    plan.length_m = polyline_length(plan.trajectory);
    plan.waypoints = resample_polyline(plan.trajectory, cfg_.local.waypoint_spacing_m);
    partial_plan_ = false;
    return plan;
  }

  void execute_step() {
    const RobotState before = world_.robot();
    const VelocityCmd cmd = follower_.command(before);
    const StepResult r = world_.step(cmd);
    sim_time_ += kFrameDt;
    status_.segment_time_s += kFrameDt;
    const double moved = distance(before.pose.position, r.state.pose.position);
    result_.path_length_m += moved;
    if (moved > 0.0) result_.trajectory.push_back(pos());
    recent_poses_.push_back({sim_time_, r.state.pose});
    if (recent_poses_.size() > kTrajectoryTokens) recent_poses_.pop_front();
    if (cfg_.record_poses) trace("pose", {{"position", point_json(pos())}, {"yaw", r.state.pose.yaw}});

    if (r.collision) on_collision(before, cmd);
    update_visits();
    if (!done_ && status_.segment + 1 < status_.segment_count && distance(pos(), segment_target()) <= cfg_.arrival_radius_m) {
      trace("waypoint_reached", {{"segment", status_.segment}, {"entrance", target_entrances_[static_cast<std::size_t>(status_.segment)]}});
      ++status_.segment;
      reset_segment();
    }
    if (!cfg_.no_local) {
      const DepthScan scan = world_.scan(cfg_.depth);
      const auto cells = detect_conflict(scan, live_, cfg_.conflict_lookahead_m);
      recent_scans_.push_back(scan);
      if (recent_scans_.size() > cfg_.scan_memory) recent_scans_.pop_front();
      if (!cells.empty()) {
        for (const CellIndex c : cells) live_.set(c, CellState::Occupied);
        status_.conflict = true;
        trace("conflict", {{"cells", cells.size()}});
      }
    }
    if (status_.segment_timed_out() && !timeout_reported_) {
      timeout_reported_ = true;
      trace("segment_timeout", {{"segment", status_.segment}, {"elapsed_s", status_.segment_time_s}});
    }
  }

  void on_collision(const RobotState& before, VelocityCmd cmd) {
    ++result_.collisions;
    ++bumps_;
    const double yaw = before.pose.yaw + cmd.yaw_rate_rps * kFrameDt / 2.0;
    const Vec2 attempted = before.pose.position + Vec2{std::cos(yaw), std::sin(yaw)} * (cmd.v_mps * kFrameDt);
    // Contact cells: truly occupied cells touching the attempted disc.
    const OccupancyGrid& truth = world_.grid();
    const double rad = cfg_.robot.radius_m;
    const CellIndex lo = truth.world_to_cell(attempted - Vec2{rad, rad});
    const CellIndex hi = truth.world_to_cell(attempted + Vec2{rad, rad});
    int marked = 0;
    for (int row = lo.row; row <= hi.row; ++row)
      for (int col = lo.col; col <= hi.col; ++col) {
        const CellIndex c{col, row};
        if (truth.at(c) != CellState::Occupied || distance_to_rect(attempted, truth.cell_rect(c)) >= rad) continue;
        if (live_.in_bounds(c) && live_.at(c) != CellState::Occupied) {
          live_.set(c, CellState::Occupied);
          ++marked;
        }
      }
    status_.conflict = true;
    trace("collision", {{"cells", marked}});
  }

  void update_visits() {
    if (!status_.has_plan) return;
    for (const auto& v : graph_.vertices) {
      if (v.kind != VertexKind::Entrance) continue;
      const double d = distance(pos(), v.position);
      bool& in = near_entrance_[v.id];
      if (!in && d <= cfg_.arrival_radius_m) {
        in = true;
        const int n = ++status_.visit_counts[v.id];
        if (n == cfg_.visit_limit) {
          status_.visit_alert = true;
          trace("visit_limit", {{"vertex", v.id}, {"count", n}});
        }
      } else if (in && d > cfg_.arrival_radius_m + 0.3) {
        in = false;
      }
    }
  }

  void replan_global() {
    std::string trigger = "local_blocked";
    if (status_.local_failures < 2) trigger = status_.segment_timed_out() ? "segment_timeout" : "visit_limit";
    ++status_.global_replans;
    nlohmann::json penalized = nullptr;
    const int entrance = target_entrances_.empty() ? -1 : target_entrances_[static_cast<std::size_t>(status_.segment)];
    if (!cfg_.no_global && trigger != "visit_limit" && entrance >= 0) {
      graph_ = penalize_edge(graph_, entrance);
      refresh_map_token();
      penalized = entrance;
    }
    trace("replan_global", {{"trigger", trigger}, {"penalized", penalized}});
    status_.visit_alert = false;
    if (cfg_.no_global) {
      reset_segment();
      return;
    }
    make_global_plan();
  }

  void stop() {
    bool success = goal_ && distance(pos(), *goal_) <= cfg_.success_radius_m;
    if (success && instruction_.kind == InstructionKind::Text && instruction_.region_label) {
      const auto r = labeling_.locate(pos());
      success = r && labeling_.label(*r) == *instruction_.region_label;
    }
    terminate(Termination::Arrived, success);
  }

  AgentConfig cfg_;
  World world_;
  Explorer explorer_;
  DecisionBackend* backend_;
  Instruction instruction_;
  AgentStatus status_;
  std::optional<Action> last_action_;
  EpisodeResult result_;
  bool done_ = false;
  double sim_time_ = 0.0;

  OccupancyGrid memory_;
  OccupancyGrid live_;
  RegionLabeling labeling_;
  TopoGraph graph_;
  std::optional<SemanticField> field_;
  SamplePointSet samples_;
  std::vector<double> clearance_;
  nlohmann::json map_token_;

  std::optional<Vec2> goal_;
  GlobalPlan plan_;
  std::vector<Vec2> targets_;
  std::vector<int> target_entrances_;
  PathFollower follower_;
  bool partial_plan_ = false;
  double plan_length_ = 0.0;
  bool timeout_reported_ = false;
  int bumps_ = 0;
  std::map<int, bool> near_entrance_;
  std::deque<DepthScan> recent_scans_;
  std::deque<TimedPose> recent_poses_;
  std::vector<nlohmann::json> plan_history_;
};

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, std::size_t task_index, const AgentConfig& config, DecisionBackend* backend) {
  Episode e(scenario, task_index, config, backend);
  return e.run();
}

}  // namespace hiernav

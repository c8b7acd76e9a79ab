#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiernav/geometry.hpp"
#include "hiernav/scenario.hpp"

namespace hiernav {

enum class Action { ExploreStep, BuildMap, PlanGlobal, PlanLocal, ExecuteStep, ReplanLocal, ReplanGlobal, ReportError, Stop };

const char* to_string(Action a);
std::optional<Action> parse_action(std::string_view name);
const std::vector<std::string>& action_names();

/// Status token S: everything the policy looks at.
struct AgentStatus {
  Vec2 position;
  double yaw = 0.0;
  bool explored = false;
  bool has_map = false;
  bool has_plan = false;
  bool arrived = false;
  int segment = 0;
  int segment_count = 0;
  bool has_local_plan = false;
  bool local_plan_done = false;
  /// 1 after a failed PlanLocal, 2 after a failed ReplanLocal.
  int local_failures = 0;
  bool conflict = false;
  double segment_time_s = 0.0;
  double segment_timeout_s = 60.0;
  bool visit_alert = false;
  std::map<int, int> visit_counts;
  int local_replans = 0;
  int global_replans = 0;
  int max_global_replans = 3;

  bool segment_timed_out() const { return segment_time_s > segment_timeout_s; }
  bool needs_global_replan() const { return local_failures >= 2 || segment_timed_out() || visit_alert; }
};

nlohmann::json to_json(const AgentStatus& s);
AgentStatus status_from_json(const nlohmann::json& j);

/// Deterministic reference policy.
Action scripted_policy(const AgentStatus& s);
/// Whether the action can be executed in this state.
bool action_applicable(Action a, const AgentStatus& s);

struct TimedPose {
  double t = 0.0;
  Pose2 pose;
};

/// Context tokens {B, I, M, P, T, S, O, A}.
struct AgentContext {
  std::string background;
  Instruction instruction;
  nlohmann::json map;  // {"graph": ..., "labels": [...]}
  std::vector<nlohmann::json> plan_history;
  std::vector<TimedPose> trajectory;
  AgentStatus status;
  std::vector<std::string> options = action_names();
  std::optional<Action> last_action;
};

inline constexpr std::size_t kTrajectoryTokens = 50;

/// Single-line JSON request with keys B, I, M, P, T (last 50 poses), S, O.
std::string encode_context(const AgentContext& ctx);
/// Parses `{"A":"<action>"}`; throws Protocol on anything else.
Action decode_action(std::string_view response);

class DecisionBackend {
 public:
  virtual ~DecisionBackend() = default;
  virtual std::string name() const = 0;
  /// Whether decide() reads more than the status token.
  virtual bool needs_full_context() const { return false; }
  /// May throw Error(Protocol | Io); the caller falls back to the scripted policy.
  virtual Action decide(const AgentContext& ctx) = 0;
};

class ScriptedBackend final : public DecisionBackend {
 public:
  std::string name() const override { return "scripted"; }
  Action decide(const AgentContext& ctx) override { return scripted_policy(ctx.status); }
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// "host:port"; throws InvalidArgument.
Endpoint parse_endpoint(std::string_view s);

/// Line-delimited JSON over TCP; one persistent connection, re-opened after errors.
class ServiceBackend final : public DecisionBackend {
 public:
  explicit ServiceBackend(Endpoint endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(10));
  ~ServiceBackend() override;
  ServiceBackend(const ServiceBackend&) = delete;
  ServiceBackend& operator=(const ServiceBackend&) = delete;

  std::string name() const override { return endpoint_.str(); }
  bool needs_full_context() const override { return true; }
  Action decide(const AgentContext& ctx) override;

 private:
  void connect();
  void close();

  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
  std::string buffer_;
};

/// Echo service for protocol tests: answers every request with the scripted
/// policy applied to its decoded status token.
class MockDecisionService {
 public:
  MockDecisionService() = default;
  ~MockDecisionService();
  MockDecisionService(const MockDecisionService&) = delete;
  MockDecisionService& operator=(const MockDecisionService&) = delete;

  /// Binds 127.0.0.1:port (0 picks a free port) and starts serving.
  void start(std::uint16_t port = 0);
  void stop();
  std::uint16_t port() const { return port_; }
  std::size_t requests_served() const { return served_.load(); }

  /// Reply for a single request line.
  static std::string respond(std::string_view request_line);

 private:
  void accept_loop();
  void serve(int fd);

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> served_{0};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
};

}  // namespace hiernav

#include "hiernav/decision.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>

#include "hiernav/errors.hpp"

namespace hiernav {

namespace {

constexpr std::array<Action, 9> kActions{Action::ExploreStep, Action::BuildMap,     Action::PlanGlobal,
                                         Action::PlanLocal,   Action::ExecuteStep,  Action::ReplanLocal,
                                         Action::ReplanGlobal, Action::ReportError, Action::Stop};

nlohmann::json pose_json(const Pose2& p) { return {{"position", {p.position.x, p.position.y}}, {"yaw", p.yaw}}; }

bool wait_fd(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd p{fd, events, 0};
  int rc;
  do {
    rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  } while (rc < 0 && errno == EINTR);
  return rc > 0;
}

void send_all(int fd, std::string_view data, std::chrono::milliseconds timeout) {
  while (!data.empty()) {
    if (!wait_fd(fd, POLLOUT, timeout)) throw Error(ErrorKind::Io, "send timed out");
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorKind::Io, std::string("send failed: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

/// Reads one '\n'-terminated line; `buffer` keeps bytes past the newline.
std::optional<std::string> read_line(int fd, std::string& buffer, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (const auto nl = buffer.find('\n'); nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || !wait_fd(fd, POLLIN, left)) throw Error(ErrorKind::Io, "receive timed out");
    std::array<char, 4096> chunk{};
    const ssize_t n = ::recv(fd, chunk.data(), chunk.size(), 0);
    if (n == 0) return std::nullopt;
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorKind::Io, std::string("receive failed: ") + std::strerror(errno));
    }
    buffer.append(chunk.data(), static_cast<std::size_t>(n));
  }
}

}  // namespace

const char* to_string(Action a) {
  switch (a) {
    case Action::ExploreStep: return "ExploreStep";
    case Action::BuildMap: return "BuildMap";
    case Action::PlanGlobal: return "PlanGlobal";
    case Action::PlanLocal: return "PlanLocal";
    case Action::ExecuteStep: return "ExecuteStep";
    case Action::ReplanLocal: return "ReplanLocal";
    case Action::ReplanGlobal: return "ReplanGlobal";
    case Action::ReportError: return "ReportError";
    case Action::Stop: return "Stop";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view name) {
  for (const Action a : kActions)
    if (name == to_string(a)) return a;
  return std::nullopt;
}

const std::vector<std::string>& action_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const Action a : kActions) v.emplace_back(to_string(a));
    return v;
  }();
  return names;
}

nlohmann::json to_json(const AgentStatus& s) {
  nlohmann::json visits = nlohmann::json::object();
  for (const auto& [v, n] : s.visit_counts) visits[std::to_string(v)] = n;
  return {{"position", {s.position.x, s.position.y}},
          {"yaw", s.yaw},
          {"explored", s.explored},
          {"has_map", s.has_map},
          {"plan_valid", s.has_plan},
          {"arrived", s.arrived},
          {"segment", s.segment},
          {"segment_count", s.segment_count},
          {"has_local_plan", s.has_local_plan},
          {"local_plan_done", s.local_plan_done},
          {"local_failures", s.local_failures},
          {"conflict", s.conflict},
          {"segment_time_s", s.segment_time_s},
          {"segment_timeout_s", s.segment_timeout_s},
          {"visit_alert", s.visit_alert},
          {"visit_counts", visits},
          {"local_replans", s.local_replans},
          {"global_replans", s.global_replans},
          {"max_global_replans", s.max_global_replans}};
}

AgentStatus status_from_json(const nlohmann::json& j) {
  try {
    AgentStatus s;
    s.position = {j.at("position").at(0).get<double>(), j.at("position").at(1).get<double>()};
    s.yaw = j.at("yaw").get<double>();
    s.explored = j.at("explored").get<bool>();
    s.has_map = j.at("has_map").get<bool>();
    s.has_plan = j.at("plan_valid").get<bool>();
    s.arrived = j.at("arrived").get<bool>();
    s.segment = j.at("segment").get<int>();
    s.segment_count = j.at("segment_count").get<int>();
    s.has_local_plan = j.at("has_local_plan").get<bool>();
    s.local_plan_done = j.at("local_plan_done").get<bool>();
    s.local_failures = j.at("local_failures").get<int>();
    s.conflict = j.at("conflict").get<bool>();
    s.segment_time_s = j.at("segment_time_s").get<double>();
    s.segment_timeout_s = j.at("segment_timeout_s").get<double>();
    s.visit_alert = j.at("visit_alert").get<bool>();
    for (const auto& [k, v] : j.at("visit_counts").items()) s.visit_counts[std::stoi(k)] = v.get<int>();
    s.local_replans = j.at("local_replans").get<int>();
    s.global_replans = j.at("global_replans").get<int>();
    s.max_global_replans = j.at("max_global_replans").get<int>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Protocol, std::string("bad status token: ") + e.what());
  }
}

Action scripted_policy(const AgentStatus& s) {
  if (!s.explored) return Action::ExploreStep;
  if (!s.has_map) return Action::BuildMap;
  if (!s.has_plan) return Action::PlanGlobal;
  if (s.arrived) return Action::Stop;
  if (s.global_replans > s.max_global_replans) return Action::ReportError;
  if (s.needs_global_replan()) return s.global_replans >= s.max_global_replans ? Action::ReportError : Action::ReplanGlobal;
  if (s.conflict || s.local_failures == 1) return Action::ReplanLocal;
  if (!s.has_local_plan || s.local_plan_done) return Action::PlanLocal;
  return Action::ExecuteStep;
}

bool action_applicable(Action a, const AgentStatus& s) {
  switch (a) {
    case Action::ExploreStep: return !s.explored;
    case Action::BuildMap: return s.explored && !s.has_map;
    case Action::PlanGlobal: return s.has_map;
    case Action::PlanLocal:
    case Action::ReplanLocal:
    case Action::ReplanGlobal: return s.has_plan;
    case Action::ExecuteStep: return s.has_plan && s.has_local_plan && !s.local_plan_done;
    case Action::ReportError:
    case Action::Stop: return true;
  }
  return false;
}

std::string encode_context(const AgentContext& ctx) {
  nlohmann::json traj = nlohmann::json::array();
  const std::size_t first = ctx.trajectory.size() > kTrajectoryTokens ? ctx.trajectory.size() - kTrajectoryTokens : 0;
  for (std::size_t i = first; i < ctx.trajectory.size(); ++i) {
    nlohmann::json p = pose_json(ctx.trajectory[i].pose);
    p["t"] = ctx.trajectory[i].t;
    traj.push_back(std::move(p));
  }
  nlohmann::json req{{"B", ctx.background},
                     {"I", to_json(ctx.instruction)},
                     {"M", ctx.map.is_null() ? nlohmann::json::object() : ctx.map},
                     {"P", ctx.plan_history},
                     {"T", std::move(traj)},
                     {"S", to_json(ctx.status)},
                     {"O", ctx.options}};
  return req.dump();
}

Action decode_action(std::string_view response) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(response);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Protocol, std::string("malformed response: ") + e.what());
  }
  if (!j.is_object() || j.size() != 1 || !j.contains("A") || !j["A"].is_string())
    throw Error(ErrorKind::Protocol, "response must be {\"A\":\"<action>\"}");
  const auto a = parse_action(j["A"].get<std::string>());
  if (!a) throw Error(ErrorKind::Protocol, "unknown action '" + j["A"].get<std::string>() + "'");
  return *a;
}

Endpoint parse_endpoint(std::string_view s) {
  const auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == s.size())
    throw Error(ErrorKind::InvalidArgument, "expected host:port, got '" + std::string(s) + "'");
  Endpoint e;
  e.host = std::string(s.substr(0, colon));
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(std::string(s.substr(colon + 1)), &used);
    if (used != s.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "bad port in '" + std::string(s) + "'");
  }
  if (port <= 0 || port > 65535) throw Error(ErrorKind::InvalidArgument, "port out of range in '" + std::string(s) + "'");
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

ServiceBackend::ServiceBackend(Endpoint endpoint, std::chrono::milliseconds timeout) : endpoint_(std::move(endpoint)), timeout_(timeout) {}

ServiceBackend::~ServiceBackend() { close(); }

void ServiceBackend::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

void ServiceBackend::connect() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(endpoint_.port);
  if (::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
    throw Error(ErrorKind::Io, "cannot resolve " + endpoint_.str());
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw Error(ErrorKind::Io, "socket() failed");
  }
  ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK);
  int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0 && errno == EINPROGRESS) {
    if (!wait_fd(fd, POLLOUT, timeout_)) {
      ::close(fd);
      throw Error(ErrorKind::Io, "connect to " + endpoint_.str() + " timed out");
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    rc = err == 0 ? 0 : -1;
  }
  if (rc < 0) {
    ::close(fd);
    throw Error(ErrorKind::Io, "cannot connect to " + endpoint_.str());
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  fd_ = fd;
}

Action ServiceBackend::decide(const AgentContext& ctx) {
  try {
    if (fd_ < 0) connect();
    send_all(fd_, encode_context(ctx) + "\n", timeout_);
    const auto line = read_line(fd_, buffer_, timeout_);
    if (!line) throw Error(ErrorKind::Io, "service closed the connection");
    return decode_action(*line);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) close();
    throw;
  }
}

MockDecisionService::~MockDecisionService() { stop(); }

void MockDecisionService::start(std::uint16_t port) {
  if (running_) return;
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorKind::Io, "socket() failed");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 16) < 0) {
    ::close(fd);
    throw Error(ErrorKind::Io, "cannot listen on port " + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  listen_fd_ = fd;
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void MockDecisionService::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
}

void MockDecisionService::accept_loop() {
  while (running_) {
    if (!wait_fd(listen_fd_, POLLIN, std::chrono::milliseconds(50))) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(mu_);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void MockDecisionService::serve(int fd) {
  std::string buffer;
  try {
    while (running_) {
      if (buffer.find('\n') == std::string::npos && !wait_fd(fd, POLLIN, std::chrono::milliseconds(50))) continue;
      const auto line = read_line(fd, buffer, std::chrono::seconds(10));
      if (!line) break;
      const std::string reply = respond(*line) + "\n";
      ++served_;
      send_all(fd, reply, std::chrono::seconds(10));
    }
  } catch (const Error&) {
  }
  ::close(fd);
}

std::string MockDecisionService::respond(std::string_view request_line) {
  try {
    const auto req = nlohmann::json::parse(request_line);
    return nlohmann::json{{"A", to_string(scripted_policy(status_from_json(req.at("S"))))}}.dump();
  } catch (const std::exception& e) {
    return nlohmann::json{{"error", e.what()}}.dump();
  }
}

}  // namespace hiernav

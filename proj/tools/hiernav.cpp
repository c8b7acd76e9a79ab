#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hiernav/agent.hpp"
#include "hiernav/bench.hpp"
#include "hiernav/decision.hpp"
#include "hiernav/errors.hpp"
#include "hiernav/scenario.hpp"
#include "hiernav/svg.hpp"

namespace fs = std::filesystem;
using namespace hiernav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

volatile std::sig_atomic_t g_stop = 0;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("hiernav");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("HIERNAV_LOG");
  const std::string level = env != nullptr ? env : "error";
  if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else
    spdlog::set_level(spdlog::level::err);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f << text;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunArgs {
  std::string scenario;
  std::size_t task = 0;
  std::uint64_t seed = 0;
  std::string trace;
  std::string svg;
  bool no_global = false;
  bool no_local = false;
  std::string backend = "scripted";
  std::string explore = "oracle";
};

struct GenArgs {
  int rooms = 0;
  std::uint64_t seed = 0;
  std::string out;
};

struct BenchArgs {
  std::vector<std::string> scenarios;
  std::size_t generate = 0;
  int min_rooms = 5;
  int max_rooms = 10;
  std::uint64_t corpus_seed = 0;
  std::vector<std::string> ablate;
  std::string backend = "scripted";
  int obstacles = 0;
  std::string tasks = "all";
  std::uint64_t seed = 0;
  std::string report = "report.json";
  std::string csv;
  unsigned workers = 0;
  std::string explore = "oracle";
};

std::unique_ptr<DecisionBackend> make_backend(const std::string& endpoint) {
  if (endpoint == "scripted") return nullptr;
  return std::make_unique<ServiceBackend>(parse_endpoint(endpoint));
}

int cmd_run(const RunArgs& a) {
  Scenario s;
  AgentConfig cfg;
  std::unique_ptr<DecisionBackend> backend;
  try {
    s = load_scenario(a.scenario);
    if (a.task >= s.tasks.size()) throw Error(ErrorKind::InvalidArgument, fmt::format("task {} out of range ({} tasks)", a.task, s.tasks.size()));
    cfg.seed = a.seed;
    cfg.no_global = a.no_global;
    cfg.no_local = a.no_local;
    cfg.explore.mode = parse_explore_mode(a.explore);
    cfg.record_poses = !a.trace.empty();
    backend = make_backend(a.backend);
  } catch (const Error& e) {
    std::cerr << "hiernav run: " << e.what() << "\n";
    return kExitConfig;
  }

  const EpisodeResult r = run_episode(s, a.task, cfg, backend.get());
  if (!a.trace.empty()) r.trace.write(a.trace);
  if (!a.svg.empty()) write_file(a.svg, render_svg(s, r));
  std::cout << fmt::format("termination={} success={} path_length_m={:.3f} sim_time_s={:.3f} replans_local={} replans_global={}\n",
                           to_string(r.termination), r.success, r.path_length_m, r.sim_time_s, r.local_replans, r.global_replans);
  return r.termination == Termination::Arrived ? kExitOk : kExitFailure;
}

int cmd_gen(const GenArgs& a) {
  GeneratorParams p;
  p.n_rooms = a.rooms;
  p.seed = a.seed;
  Scenario s;
  try {
    s = generate_scenario(p);
    save_scenario(s, a.out);
  } catch (const Error& e) {
    std::cerr << "hiernav gen: " << e.what() << "\n";
    return kExitConfig;
  }
  std::cout << fmt::format("rooms={} doors={} seed={}\n", s.rooms.size(), s.doors.size(), a.seed);
  return kExitOk;
}

std::vector<Scenario> load_scenarios(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> dir;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".json") dir.push_back(e.path());
      std::sort(dir.begin(), dir.end());
      files.insert(files.end(), dir.begin(), dir.end());
    } else {
      files.emplace_back(in);
    }
  }
  std::vector<Scenario> out;
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

int cmd_bench(const BenchArgs& a) {
  BenchConfig cfg;
  std::vector<Scenario> scenarios;
  try {
    for (const auto& ab : a.ablate) {
      if (ab == "no-global")
        cfg.agent.no_global = true;
      else if (ab == "no-local")
        cfg.agent.no_local = true;
      else
        throw Error(ErrorKind::InvalidArgument, "unknown ablation '" + ab + "'");
    }
    if (a.backend != "scripted") cfg.service = parse_endpoint(a.backend);
    if (a.tasks != "all" && a.tasks != "farthest") throw Error(ErrorKind::InvalidArgument, "--tasks must be all or farthest");
    cfg.tasks = a.tasks == "all" ? TaskSelection::All : TaskSelection::Farthest;
    cfg.obstacles = a.obstacles;
    cfg.obstacle_seed = a.seed;
    cfg.agent.seed = a.seed;
    cfg.agent.explore.mode = parse_explore_mode(a.explore);
    cfg.workers = a.workers;
    scenarios = load_scenarios(a.scenarios);
    if (a.generate > 0) {
      auto gen = generate_corpus(a.generate, a.min_rooms, a.max_rooms, a.corpus_seed);
      scenarios.insert(scenarios.end(), gen.begin(), gen.end());
    }
    if (scenarios.empty()) throw Error(ErrorKind::InvalidArgument, "no scenarios (use --scenarios or --generate)");
  } catch (const Error& e) {
    std::cerr << "hiernav bench: " << e.what() << "\n";
    return kExitConfig;
  }

  const BenchReport report = run_bench(scenarios, cfg);
  if (!a.report.empty()) write_file(a.report, report_json(report, utc_timestamp()));
  if (!a.csv.empty()) write_file(a.csv, report_csv(report));
  std::cout << "SR=" << nlohmann::json(report.aggregate.sr).dump() << " SPL=" << nlohmann::json(report.aggregate.spl).dump() << "\n";
  return kExitOk;
}

int cmd_mock_backend(std::uint16_t port) {
  MockDecisionService service;
  try {
    service.start(port);
  } catch (const Error& e) {
    std::cerr << "hiernav mock-backend: " << e.what() << "\n";
    return kExitConfig;
  }
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  std::cout << "listening on 127.0.0.1:" << service.port() << std::endl;
  while (g_stop == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  spdlog::info("served {} requests", service.requests_served());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Hierarchical layout-aware object navigation"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one navigation episode");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--task", run.task, "Task index");
  run_cmd->add_option("--seed", run.seed, "Seed");
  run_cmd->add_option("--trace", run.trace, "Trace JSONL output");
  run_cmd->add_option("--svg", run.svg, "SVG plot output");
  run_cmd->add_flag("--no-global", run.no_global, "Disable global planning");
  run_cmd->add_flag("--no-local", run.no_local, "Disable sensing-based local planning");
  run_cmd->add_option("--backend", run.backend, "scripted or host:port");
  run_cmd->add_option("--explore", run.explore, "oracle or wallfollow");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a scenario");
  gen_cmd->add_option("--rooms", gen.rooms, "Number of rooms")->required();
  gen_cmd->add_option("--seed", gen.seed, "Seed");
  gen_cmd->add_option("--out", gen.out, "Output JSON")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark a scenario set");
  bench_cmd->add_option("--scenarios", bench.scenarios, "Scenario files or directories");
  bench_cmd->add_option("--generate", bench.generate, "Also generate this many scenarios");
  bench_cmd->add_option("--min-rooms", bench.min_rooms, "Generated room count lower bound");
  bench_cmd->add_option("--max-rooms", bench.max_rooms, "Generated room count upper bound");
  bench_cmd->add_option("--corpus-seed", bench.corpus_seed, "Seed of the first generated scenario");
  bench_cmd->add_option("--ablate", bench.ablate, "no-global and/or no-local");
  bench_cmd->add_option("--backend", bench.backend, "scripted or host:port");
  bench_cmd->add_option("--obstacles", bench.obstacles, "Obstacles spawned per episode");
  bench_cmd->add_option("--tasks", bench.tasks, "all or farthest");
  bench_cmd->add_option("--seed", bench.seed, "Seed");
  bench_cmd->add_option("--report", bench.report, "report.json path");
  bench_cmd->add_option("--csv", bench.csv, "report.csv path");
  bench_cmd->add_option("--workers", bench.workers, "Worker threads (0 = all cores)");
  bench_cmd->add_option("--explore", bench.explore, "oracle or wallfollow");

  std::uint16_t mock_port = 7777;
  auto* mock_cmd = app.add_subcommand("mock-backend", "Serve the scripted policy over the decision protocol");
  mock_cmd->add_option("--port", mock_port, "TCP port on 127.0.0.1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*gen_cmd) return cmd_gen(gen);
    if (*bench_cmd) return cmd_bench(bench);
    if (*mock_cmd) return cmd_mock_backend(mock_port);
  } catch (const std::exception& e) {
    std::cerr << "hiernav: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}

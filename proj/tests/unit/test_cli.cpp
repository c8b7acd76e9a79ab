#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

#include "hiernav/decision.hpp"
#include "hiernav/scenario.hpp"
#include "hiernav/trace.hpp"

namespace fs = std::filesystem;
using namespace hiernav;
using hiernav::test::fixture_path;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "hiernav_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(HIERNAV_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST_CASE("run reaches the chair and writes a trace") {
  const fs::path trace = scratch() / "t.jsonl";
  const fs::path svg = scratch() / "t.svg";
  const Outcome o = cli("run --scenario " + fixture_path("fixture3r.json") + " --task 0 --seed 1 --trace " + trace.string() + " --svg " + svg.string());
  CHECK(o.code == 0);
  CHECK(o.out.find("termination=Arrived") != std::string::npos);
  const auto events = parse_jsonl(slurp(trace));
  REQUIRE_FALSE(events.empty());
  CHECK(events.back().at("event") == "terminate");
  CHECK(events.back().at("code") == "Arrived");
  CHECK(events.back().at("success") == true);
  CHECK(slurp(svg).find("<svg") != std::string::npos);
}

TEST_CASE("run without global planning emits no global plan") {
  const fs::path trace = scratch() / "ng.jsonl";
  const Outcome o = cli("run --scenario " + fixture_path("ring4.json") + " --task 1 --no-global --trace " + trace.string());
  CHECK((o.code == 0 || o.code == 1));
  for (const auto& e : parse_jsonl(slurp(trace))) CHECK(e.at("event") != "global_plan");
}

TEST_CASE("config errors exit with code 2") {
  Outcome o = cli("run --scenario /nonexistent/s.json");
  CHECK(o.code == 2);
  CHECK_FALSE(o.err.empty());
  o = cli("run --scenario " + fixture_path("fixture3r.json") + " --task 17");
  CHECK(o.code == 2);
  o = cli("run --scenario " + fixture_path("fixture3r.json") + " --explore sideways");
  CHECK(o.code == 2);
  o = cli("frobnicate");
  CHECK(o.code == 2);
  o = cli("gen --rooms 1 --out " + (scratch() / "x.json").string());
  CHECK(o.code == 2);
  CHECK(o.err.find("n_rooms") != std::string::npos);
}

TEST_CASE("absent target exits with failure") {
  CHECK(cli("run --scenario " + fixture_path("fixture3r.json") + " --task 1").code == 1);
}

TEST_CASE("gen is deterministic and loadable") {
  const fs::path a = scratch() / "a.json";
  const fs::path b = scratch() / "b.json";
  CHECK(cli("gen --rooms 6 --seed 7 --out " + a.string()).code == 0);
  CHECK(cli("gen --rooms 6 --seed 7 --out " + b.string()).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(load_scenario(a).rooms.size() == 6);
}

TEST_CASE("bench stdout matches the report") {
  const fs::path report = scratch() / "report.json";
  const fs::path csv = scratch() / "report.csv";
  const Outcome o = cli("bench --scenarios " + std::string(HIERNAV_FIXTURE_DIR) + " --report " + report.string() + " --csv " + csv.string());
  REQUIRE(o.code == 0);
  const auto j = nlohmann::json::parse(slurp(report));
  const std::string expect =
      "SR=" + j.at("aggregates").at("SR").dump() + " SPL=" + j.at("aggregates").at("SPL").dump() + "\n";
  CHECK(o.out == expect);
  CHECK(slurp(csv).find("scenario,") == 0);
}

TEST_CASE("bench echoes ablations") {
  const fs::path report = scratch() / "ablate.json";
  const Outcome o = cli("bench --scenarios " + fixture_path("ring4.json") + " --ablate no-global --report " + report.string());
  REQUIRE(o.code == 0);
  const auto j = nlohmann::json::parse(slurp(report));
  CHECK(j.at("config").at("ablations").at("no_global") == true);
  CHECK(cli("bench --scenarios " + fixture_path("ring4.json") + " --ablate no-brain").code == 2);
}

TEST_CASE("service backend gives the same success rate") {
  MockDecisionService service;
  service.start(0);
  const std::string scenarios = "bench --generate 3 --min-rooms 5 --max-rooms 6 --workers 1";
  const Outcome scripted = cli(scenarios + " --report " + (scratch() / "s.json").string());
  const Outcome remote =
      cli(scenarios + " --backend 127.0.0.1:" + std::to_string(service.port()) + " --report " + (scratch() / "r.json").string());
  service.stop();
  REQUIRE(scripted.code == 0);
  REQUIRE(remote.code == 0);
  CHECK(scripted.out == remote.out);
  CHECK(service.requests_served() > 0);
}

#include "hiernav/trace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hiernav/errors.hpp"

namespace hiernav {

void Trace::add(double t, std::string_view event, nlohmann::json fields) {
  fields["t"] = t;
  fields["event"] = std::string(event);
  events_.push_back(std::move(fields));
}

std::size_t Trace::count(std::string_view event) const {
  return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(), [&](const nlohmann::json& e) { return e["event"] == event; }));
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const auto& e : events_) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

void Trace::write(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f << to_jsonl();
}

nlohmann::json point_json(Vec2 p) { return {p.x, p.y}; }

nlohmann::json points_json(const std::vector<Vec2>& pts) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : pts) a.push_back(point_json(p));
  return a;
}

nlohmann::json rect_json(const Rect& r) { return {r.x0, r.y0, r.x1, r.y1}; }

std::vector<nlohmann::json> parse_jsonl(std::string_view text) {
  std::vector<nlohmann::json> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hiernav

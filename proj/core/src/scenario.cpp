#include "hiernav/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hiernav/errors.hpp"

namespace hiernav {

using nlohmann::json;

namespace {

constexpr double kEps = 1e-6;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::Validation, what); }

Rect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorKind::Parse, "rect must be [x0,y0,x1,y1]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json rect_to_json(const Rect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

Vec2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw Error(ErrorKind::Parse, "point must be [x,y] or [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json point_to_json(Vec2 p) { return json::array({p.x, p.y}); }

/// Segment shared by two rectangles' boundaries, if they touch along an edge.
std::optional<std::pair<Vec2, Vec2>> shared_edge(const Rect& a, const Rect& b) {
  const auto vertical = [&](double x) -> std::optional<std::pair<Vec2, Vec2>> {
    const double lo = std::max(a.y0, b.y0);
    const double hi = std::min(a.y1, b.y1);
    if (hi - lo <= kEps) return std::nullopt;
    return std::pair{Vec2{x, lo}, Vec2{x, hi}};
  };
  const auto horizontal = [&](double y) -> std::optional<std::pair<Vec2, Vec2>> {
    const double lo = std::max(a.x0, b.x0);
    const double hi = std::min(a.x1, b.x1);
    if (hi - lo <= kEps) return std::nullopt;
    return std::pair{Vec2{lo, y}, Vec2{hi, y}};
  };
  if (std::abs(a.x1 - b.x0) < kEps) return vertical(a.x1);
  if (std::abs(b.x1 - a.x0) < kEps) return vertical(a.x0);
  if (std::abs(a.y1 - b.y0) < kEps) return horizontal(a.y1);
  if (std::abs(b.y1 - a.y0) < kEps) return horizontal(a.y0);
  return std::nullopt;
}

void validate_instruction(const Instruction& i, std::size_t index) {
  const std::string where = "task " + std::to_string(index);
  switch (i.kind) {
    case InstructionKind::Text:
      if (i.target_label.empty()) invalid(where + ": text instruction without target_label");
      if (!i.embedding_seed.empty()) invalid(where + ": text instruction carries an image payload");
      break;
    case InstructionKind::Image:
      if (i.embedding_seed.empty()) invalid(where + ": image instruction without embedding_seed");
      if (!i.target_label.empty() || i.region_label) invalid(where + ": image instruction carries a text payload");
      break;
    case InstructionKind::Position:
      if (!std::isfinite(i.position.x) || !std::isfinite(i.position.y)) invalid(where + ": non-finite position");
      if (!i.target_label.empty() || !i.embedding_seed.empty()) invalid(where + ": position instruction carries another payload");
      break;
  }
}

}  // namespace

Instruction Instruction::text(std::string target, std::optional<std::string> region) {
  Instruction i;
  i.kind = InstructionKind::Text;
  i.target_label = std::move(target);
  i.region_label = std::move(region);
  return i;
}

Instruction Instruction::image(std::string object_id) {
  Instruction i;
  i.kind = InstructionKind::Image;
  i.embedding_seed = std::move(object_id);
  return i;
}

Instruction Instruction::at(Vec2 p) {
  Instruction i;
  i.kind = InstructionKind::Position;
  i.position = p;
  return i;
}

json to_json(const Instruction& i) {
  switch (i.kind) {
    case InstructionKind::Text: {
      json j = {{"kind", "text"}, {"target_label", i.target_label}};
      if (i.region_label) j["region_label"] = *i.region_label;
      return j;
    }
    case InstructionKind::Image:
      return {{"kind", "image"}, {"embedding_seed", i.embedding_seed}};
    case InstructionKind::Position:
      // z is carried as a constant 0 to keep the 3D point interface.
      return {{"kind", "position"}, {"position", json::array({i.position.x, i.position.y, 0.0})}};
  }
  return {};
}

Instruction instruction_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const int payloads = int(j.contains("target_label")) + int(j.contains("embedding_seed")) + int(j.contains("position"));
  if (payloads != 1) throw Error(ErrorKind::Validation, "instruction must carry exactly one payload");
  if (kind == "text") {
    std::optional<std::string> region;
    if (j.contains("region_label") && !j["region_label"].is_null()) region = j["region_label"].get<std::string>();
    return Instruction::text(j.at("target_label").get<std::string>(), region);
  }
  if (kind == "image") return Instruction::image(j.at("embedding_seed").get<std::string>());
  if (kind == "position") return Instruction::at(point_from_json(j.at("position")));
  throw Error(ErrorKind::Parse, "unknown instruction kind '" + kind + "'");
}

std::string describe(const Instruction& i) {
  std::ostringstream os;
  switch (i.kind) {
    case InstructionKind::Text:
      os << "text:" << i.target_label;
      if (i.region_label) os << "@" << *i.region_label;
      break;
    case InstructionKind::Image:
      os << "image:" << i.embedding_seed;
      break;
    case InstructionKind::Position:
      os << "position:(" << i.position.x << "," << i.position.y << ")";
      break;
  }
  return os.str();
}

const Room* Scenario::find_room(std::string_view id) const {
  for (const auto& r : rooms)
    if (r.id == id) return &r;
  return nullptr;
}

const Room* Scenario::find_room_by_label(std::string_view label) const {
  for (const auto& r : rooms)
    if (r.label == label) return &r;
  return nullptr;
}

const SceneObject* Scenario::find_object(std::string_view id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const Room* Scenario::room_at(Vec2 p) const {
  for (const auto& r : rooms)
    if (r.rect.strictly_contains(p)) return &r;
  for (const auto& r : rooms)
    if (r.rect.contains(p)) return &r;
  return nullptr;
}

void validate(const Scenario& s) {
  if (!(s.cell_size_m > 0.0)) invalid("cell_size_m must be positive");
  if (!(s.bounds_m.x > 0.0 && s.bounds_m.y > 0.0)) invalid("bounds_m must be positive");
  if (s.rooms.empty()) invalid("no rooms");

  const Rect bounds{0.0, 0.0, s.bounds_m.x, s.bounds_m.y};
  std::set<std::string> ids;
  for (const auto& r : s.rooms) {
    if (r.id.empty()) invalid("room with empty id");
    if (!ids.insert(r.id).second) invalid("duplicate id '" + r.id + "'");
    if (!r.rect.valid()) invalid("room '" + r.id + "' has an empty rectangle");
    if (!bounds.contains(r.rect, kEps)) invalid("room '" + r.id + "' lies outside bounds_m");
  }
  for (std::size_t a = 0; a < s.rooms.size(); ++a)
    for (std::size_t b = a + 1; b < s.rooms.size(); ++b)
      if (s.rooms[a].rect.overlaps(s.rooms[b].rect, kEps))
        invalid("rooms '" + s.rooms[a].id + "' and '" + s.rooms[b].id + "' overlap");

  for (const auto& d : s.doors) {
    if (!ids.insert(d.id).second) invalid("duplicate id '" + d.id + "'");
    const Room* a = s.find_room(d.connects[0]);
    const Room* b = s.find_room(d.connects[1]);
    if (a == nullptr || b == nullptr) invalid("door '" + d.id + "' connects an unknown room");
    if (a == b) invalid("door '" + d.id + "' connects a room to itself");
    if (!(d.width_m >= 0.0)) invalid("door '" + d.id + "' has negative width");
    const auto edge = shared_edge(a->rect, b->rect);
    if (!edge || distance_to_segment(d.position, edge->first, edge->second) > kEps)
      invalid("door '" + d.id + "' is not on the shared boundary of '" + a->id + "' and '" + b->id + "'");
  }

  for (const auto& o : s.objects) {
    if (!ids.insert(o.id).second) invalid("duplicate id '" + o.id + "'");
    const Room* r = s.find_room(o.room);
    if (r == nullptr) invalid("object '" + o.id + "' references unknown room '" + o.room + "'");
    if (!o.rect.valid()) invalid("object '" + o.id + "' has an empty rectangle");
    if (!r->rect.contains(o.rect, kEps)) invalid("object '" + o.id + "' lies outside its room '" + o.room + "'");
  }

  for (std::size_t k = 0; k < s.dynamic_obstacles.size(); ++k)
    if (!s.dynamic_obstacles[k].rect.valid()) invalid("dynamic obstacle " + std::to_string(k) + " has an empty rectangle");

  const Vec2 p = s.start.position;
  const Room* start_room = nullptr;
  for (const auto& r : s.rooms)
    if (r.rect.strictly_contains(p)) start_room = &r;
  if (start_room == nullptr) invalid("start position lies outside every room");
  const Rect& rr = start_room->rect;
  const double wall = s.cell_size_m;
  if (p.x - rr.x0 <= wall || rr.x1 - p.x <= wall || p.y - rr.y0 <= wall || rr.y1 - p.y <= wall)
    invalid("start position lies in a wall of room '" + start_room->id + "'");
  for (const auto& o : s.objects)
    if (o.blocking && o.rect.contains(p)) invalid("start position lies inside blocking object '" + o.id + "'");

  for (std::size_t k = 0; k < s.tasks.size(); ++k) validate_instruction(s.tasks[k], k);
}

Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    s.name = j.value("name", std::string{});
    s.cell_size_m = j.value("cell_size_m", 0.1);
    const auto& b = j.at("bounds_m");
    if (!b.is_array() || b.size() != 2) throw Error(ErrorKind::Parse, "bounds_m must be [w,h]");
    s.bounds_m = {b[0].get<double>(), b[1].get<double>()};
    for (const auto& r : j.at("rooms"))
      s.rooms.push_back({r.at("id").get<std::string>(), r.at("label").get<std::string>(), rect_from_json(r.at("rect"))});
    for (const auto& d : j.value("doors", json::array())) {
      const auto& c = d.at("connects");
      if (!c.is_array() || c.size() != 2) throw Error(ErrorKind::Parse, "door connects must name two rooms");
      s.doors.push_back({d.at("id").get<std::string>(),
                         {c[0].get<std::string>(), c[1].get<std::string>()},
                         point_from_json(d.at("position")),
                         d.at("width_m").get<double>()});
    }
    for (const auto& o : j.value("objects", json::array()))
      s.objects.push_back({o.at("id").get<std::string>(), o.at("label").get<std::string>(),
                           o.at("room").get<std::string>(), rect_from_json(o.at("rect")),
                           o.value("blocking", false)});
    for (const auto& o : j.value("dynamic_obstacles", json::array()))
      s.dynamic_obstacles.push_back({rect_from_json(o.at("rect")), o.value("spawn_after_mapping", true)});
    const auto& st = j.at("start");
    s.start = {point_from_json(st.at("position")), st.value("yaw_rad", 0.0)};
    for (const auto& t : j.value("tasks", json::array())) s.tasks.push_back(instruction_from_json(t));
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("scenario schema: ") + e.what());
  }
}

json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["cell_size_m"] = s.cell_size_m;
  j["bounds_m"] = json::array({s.bounds_m.x, s.bounds_m.y});
  j["rooms"] = json::array();
  for (const auto& r : s.rooms) j["rooms"].push_back({{"id", r.id}, {"label", r.label}, {"rect", rect_to_json(r.rect)}});
  j["doors"] = json::array();
  for (const auto& d : s.doors)
    j["doors"].push_back({{"id", d.id},
                          {"connects", json::array({d.connects[0], d.connects[1]})},
                          {"position", point_to_json(d.position)},
                          {"width_m", d.width_m}});
  j["objects"] = json::array();
  for (const auto& o : s.objects)
    j["objects"].push_back({{"id", o.id}, {"label", o.label}, {"room", o.room}, {"rect", rect_to_json(o.rect)}, {"blocking", o.blocking}});
  j["dynamic_obstacles"] = json::array();
  for (const auto& o : s.dynamic_obstacles)
    j["dynamic_obstacles"].push_back({{"rect", rect_to_json(o.rect)}, {"spawn_after_mapping", o.spawn_after_mapping}});
  j["start"] = {{"position", point_to_json(s.start.position)}, {"yaw_rad", s.start.yaw}};
  j["tasks"] = json::array();
  for (const auto& t : s.tasks) j["tasks"].push_back(to_json(t));
  return j;
}

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("malformed scenario JSON: ") + e.what());
  }
  Scenario s = scenario_from_json(j);
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string dump_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << dump_scenario(s);
}

}  // namespace hiernav

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "hiernav/errors.hpp"
#include "hiernav/rng.hpp"
#include "hiernav/scenario.hpp"

namespace hiernav {

namespace {

const std::vector<std::string>& room_labels() {
  static const std::vector<std::string> labels = {
      "living room", "kitchen", "bedroom", "bathroom", "office",  "hall",   "dining room", "study",
      "laundry room", "garage", "nursery", "library",  "pantry",  "den",    "foyer",       "gym"};
  return labels;
}

/// Rounds to the 0.1 m lattice so walls and door gaps align with cells.
double quantize(double v) { return std::round(v * 10.0) / 10.0; }

struct Cell {
  int col = 0;
  int row = 0;
  auto operator<=>(const Cell&) const = default;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(b)] = a;
    return true;
  }
};

std::string slug(std::string s) {
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

}  // namespace

const std::vector<std::string>& object_labels() {
  static const std::vector<std::string> labels = {"chair", "couch", "potted plant", "bed", "toilet", "tv"};
  return labels;
}

Scenario generate_scenario(const GeneratorParams& p) {
  if (p.n_rooms < 2) throw Error(ErrorKind::InvalidArgument, "n_rooms >= 2 required");
  const double min_room = 4.0 * 2.0 * p.robot_radius_m;
  if (p.room_size_min_m < min_room)
    throw Error(ErrorKind::InvalidArgument, "room size below 4x robot diameter (" + std::to_string(min_room) + " m)");
  if (p.room_size_max_m < p.room_size_min_m) throw Error(ErrorKind::InvalidArgument, "room_size_max_m < room_size_min_m");
  if (p.object_size_m + 1.0 > p.room_size_min_m)
    throw Error(ErrorKind::InvalidArgument, "object does not fit inside the smallest room");

  CounterRng rng(hash_combine(p.seed, "scenario-generator"));

  // Grow a connected polyomino of room cells.
  std::vector<Cell> cells{{0, 0}};
  std::set<Cell> used{{0, 0}};
  while (static_cast<int>(cells.size()) < p.n_rooms) {
    std::set<Cell> frontier;
    for (const auto& c : cells)
      for (const Cell n : {Cell{c.col + 1, c.row}, Cell{c.col - 1, c.row}, Cell{c.col, c.row + 1}, Cell{c.col, c.row - 1}})
        if (!used.contains(n)) frontier.insert(n);
    auto it = frontier.begin();
    std::advance(it, static_cast<long>(rng.below(frontier.size())));
    cells.push_back(*it);
    used.insert(*it);
  }

  int min_col = 0, max_col = 0, min_row = 0, max_row = 0;
  for (const auto& c : cells) {
    min_col = std::min(min_col, c.col);
    max_col = std::max(max_col, c.col);
    min_row = std::min(min_row, c.row);
    max_row = std::max(max_row, c.row);
  }
  const int n_cols = max_col - min_col + 1;
  const int n_rows = max_row - min_row + 1;
  std::vector<double> col_x{0.0};
  for (int c = 0; c < n_cols; ++c) col_x.push_back(col_x.back() + quantize(rng.uniform(p.room_size_min_m, p.room_size_max_m)));
  std::vector<double> row_y{0.0};
  for (int r = 0; r < n_rows; ++r) row_y.push_back(row_y.back() + quantize(rng.uniform(p.room_size_min_m, p.room_size_max_m)));

  Scenario s;
  s.name = "gen_n" + std::to_string(p.n_rooms) + "_s" + std::to_string(p.seed);
  s.cell_size_m = 0.1;
  s.bounds_m = {col_x.back(), row_y.back()};

  std::vector<std::string> labels = room_labels();
  for (std::size_t k = labels.size(); k > 1; --k) std::swap(labels[k - 1], labels[rng.below(k)]);

  std::map<Cell, int> index_of;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    Cell c{cells[k].col - min_col, cells[k].row - min_row};
    index_of[c] = static_cast<int>(k);
    const std::string label = k < labels.size() ? labels[k] : "room " + std::to_string(k);
    s.rooms.push_back({"r" + std::to_string(k), label,
                       {col_x[static_cast<std::size_t>(c.col)], row_y[static_cast<std::size_t>(c.row)],
                        col_x[static_cast<std::size_t>(c.col + 1)], row_y[static_cast<std::size_t>(c.row + 1)]}});
  }

  // Adjacent pairs in a fixed order, then shuffled for the random spanning tree.
  std::vector<std::pair<int, int>> adjacent;
  for (const auto& [c, k] : index_of) {
    for (const Cell n : {Cell{c.col + 1, c.row}, Cell{c.col, c.row + 1}}) {
      const auto it = index_of.find(n);
      if (it != index_of.end()) adjacent.emplace_back(k, it->second);
    }
  }
  for (std::size_t k = adjacent.size(); k > 1; --k) std::swap(adjacent[k - 1], adjacent[rng.below(k)]);

  UnionFind uf(p.n_rooms);
  std::vector<std::pair<int, int>> door_pairs;
  std::vector<std::pair<int, int>> spare;
  for (const auto& e : adjacent) {
    if (uf.unite(e.first, e.second)) door_pairs.push_back(e);
    else spare.push_back(e);
  }
  for (const auto& e : spare)
    if (rng.bernoulli(p.extra_door_prob)) door_pairs.push_back(e);

  const double jamb_clearance = 0.8;
  for (const auto& [a, b] : door_pairs) {
    const Rect& ra = s.rooms[static_cast<std::size_t>(a)].rect;
    const Rect& rb = s.rooms[static_cast<std::size_t>(b)].rect;
    Door d;
    d.id = "d" + std::to_string(s.doors.size());
    d.connects = {s.rooms[static_cast<std::size_t>(a)].id, s.rooms[static_cast<std::size_t>(b)].id};
    d.width_m = p.door_width_m;
    if (std::abs(ra.x1 - rb.x0) < 1e-9 || std::abs(rb.x1 - ra.x0) < 1e-9) {
      const double x = std::abs(ra.x1 - rb.x0) < 1e-9 ? ra.x1 : ra.x0;
      const double lo = std::max(ra.y0, rb.y0) + jamb_clearance;
      const double hi = std::min(ra.y1, rb.y1) - jamb_clearance;
      d.position = {x, quantize(rng.uniform(lo, hi))};
    } else {
      const double y = std::abs(ra.y1 - rb.y0) < 1e-9 ? ra.y1 : ra.y0;
      const double lo = std::max(ra.x0, rb.x0) + jamb_clearance;
      const double hi = std::min(ra.x1, rb.x1) - jamb_clearance;
      d.position = {quantize(rng.uniform(lo, hi)), y};
    }
    s.doors.push_back(d);
  }

  // One target object per room; non-blocking footprint the robot can drive onto.
  const auto& olabels = object_labels();
  const double half = p.object_size_m / 2.0;
  for (std::size_t k = 0; k < s.rooms.size(); ++k) {
    const Room& room = s.rooms[k];
    const std::string& label = olabels[rng.below(olabels.size())];
    const double margin = half + 0.5;
    const Vec2 c{quantize(rng.uniform(room.rect.x0 + margin, room.rect.x1 - margin)),
                 quantize(rng.uniform(room.rect.y0 + margin, room.rect.y1 - margin))};
    s.objects.push_back({slug(label) + "_" + std::to_string(k), label, room.id, {c.x - half, c.y - half, c.x + half, c.y + half}, false});
  }

  // Start in the first room, off its object.
  const Room& start_room = s.rooms.front();
  const Rect& target = s.objects.front().rect;
  for (int attempt = 0;; ++attempt) {
    const Vec2 q{rng.uniform(start_room.rect.x0 + 0.6, start_room.rect.x1 - 0.6),
                 rng.uniform(start_room.rect.y0 + 0.6, start_room.rect.y1 - 0.6)};
    if (distance_to_rect(q, target) > 0.3 || attempt > 64) {
      s.start = {{quantize(q.x) + 0.05, quantize(q.y) + 0.05}, wrap_angle(rng.uniform(-std::numbers::pi, std::numbers::pi))};
      break;
    }
  }

  for (std::size_t k = 1; k < s.rooms.size(); ++k) s.tasks.push_back(Instruction::text(s.objects[k].label, s.rooms[k].label));

  validate(s);
  return s;
}

}  // namespace hiernav

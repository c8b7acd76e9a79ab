#include "hiernav/explore.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "hiernav/errors.hpp"

namespace hiernav {

namespace {

// East, north, west, south; "left" of direction d is (d + 1) % 4.
constexpr std::array<std::pair<int, int>, 4> kDirs{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

int quantize_heading(double yaw) {
  const double q = std::round(wrap_angle(yaw) / (std::numbers::pi / 2.0));
  return ((static_cast<int>(q) % 4) + 4) % 4;
}

}  // namespace

const char* to_string(ExploreMode m) { return m == ExploreMode::Oracle ? "oracle" : "wallfollow"; }

ExploreMode parse_explore_mode(std::string_view s) {
  if (s == "oracle") return ExploreMode::Oracle;
  if (s == "wallfollow" || s == "wall-follow") return ExploreMode::WallFollow;
  throw Error(ErrorKind::InvalidArgument, "unknown exploration mode '" + std::string(s) + "'");
}

void integrate_scan(OccupancyGrid& memory, const DepthScan& scan) {
  const double step = memory.cell_size() / 4.0;
  for (std::size_t k = 0; k < scan.ranges.size(); ++k) {
    const double a = scan.bearing(k);
    const Vec2 dir{std::cos(a), std::sin(a)};
    const double r = scan.ranges[k];
    for (double t = 0.0; t < r - 1e-6; t += step) {
      const CellIndex c = memory.world_to_cell(scan.pose.position + dir * t);
      if (!memory.in_bounds(c)) break;
      if (memory.at(c) == CellState::Unknown) memory.set(c, CellState::Free);
    }
    if (scan.is_hit(k)) {
      const CellIndex hit = memory.world_to_cell(scan.pose.position + dir * (r + 1e-4));
      if (memory.in_bounds(hit)) memory.set(hit, CellState::Occupied);
    }
  }
}

double coverage(const OccupancyGrid& memory, const OccupancyGrid& truth) {
  std::size_t free = 0, seen = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth.cells()[i] != CellState::Free) continue;
    ++free;
    if (memory.cells()[i] == CellState::Free) ++seen;
  }
  return free == 0 ? 0.0 : static_cast<double>(seen) / static_cast<double>(free);
}

Explorer::Explorer(World& world, ExploreParams params) : world_(world), params_(params) {
  const OccupancyGrid& g = world_.static_grid();
  memory_ = OccupancyGrid(g.cell_size(), g.width(), g.height(), g.origin(), CellState::Unknown);
  trajectory_.push_back(world_.robot().pose.position);
}

void Explorer::plan_contour() {
  planned_ = true;
  const OccupancyGrid& g = world_.static_grid();
  const auto clear = clearance_map(g, params_.lattice_clearance_m + g.cell_size(), true);
  const auto ok = [&](CellIndex c) {
    return g.in_bounds(c) && g.at(c) == CellState::Free && clear[g.index(c)] >= params_.lattice_clearance_m;
  };

  // Nearest lattice cell to the start (breadth-first over Free cells).
  CellIndex cur = g.world_to_cell(world_.robot().pose.position);
  if (!ok(cur)) {
    std::vector<std::uint8_t> seen(g.size(), 0);
    std::deque<CellIndex> q{cur};
    seen[g.index(cur)] = 1;
    bool found = false;
    while (!q.empty() && !found) {
      const CellIndex c = q.front();
      q.pop_front();
      for (const auto& [dx, dy] : kDirs) {
        const CellIndex n{c.col + dx, c.row + dy};
        if (!g.in_bounds(n) || seen[g.index(n)] != 0 || g.at(n) != CellState::Free) continue;
        seen[g.index(n)] = 1;
        if (ok(n)) {
          cur = n;
          found = true;
          break;
        }
        q.push_back(n);
      }
    }
    if (!found) return;
  }

  std::vector<CellIndex> cells{cur};
  int dir = quantize_heading(world_.robot().pose.yaw);
  const auto ahead = [&](CellIndex c, int d) { return CellIndex{c.col + kDirs[static_cast<std::size_t>(d)].first, c.row + kDirs[static_cast<std::size_t>(d)].second}; };
  while (ok(ahead(cur, dir))) {
    cur = ahead(cur, dir);
    cells.push_back(cur);
  }
  dir = (dir + 3) % 4;  // wall now on the left

  const CellIndex first_cell = cur;
  const int first_dir = dir;
  const std::size_t cap = 4 * g.size();
  for (std::size_t it = 0; it < cap; ++it) {
    bool moved = false;
    for (const int turn : {1, 0, 3, 2}) {
      const int nd = (dir + turn) % 4;
      if (ok(ahead(cur, nd))) {
        dir = nd;
        cur = ahead(cur, nd);
        cells.push_back(cur);
        moved = true;
        break;
      }
    }
    if (!moved || (cur == first_cell && dir == first_dir)) break;
  }

  // Keep only the corners of the lattice walk.
  std::vector<Vec2> path{world_.robot().pose.position};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const bool last = i + 1 == cells.size();
    if (i > 0 && !last) {
      const CellIndex a = cells[i - 1], b = cells[i], c = cells[i + 1];
      if (b.col - a.col == c.col - b.col && b.row - a.row == c.row - b.row) continue;
    }
    path.push_back(g.cell_center(cells[i]));
  }
  follower_ = PathFollower(std::move(path));
}

bool Explorer::step() {
  if (finished_) return true;
  if (params_.mode == ExploreMode::Oracle) {
    memory_ = world_.static_grid();
    finished_ = true;
    loop_closed_ = true;
    return true;
  }
  if (!planned_) plan_contour();
  if (follower_.done()) {
    loop_closed_ = planned_ && !follower_.path().empty();
    finished_ = true;
    return true;
  }
  const Vec2 before = world_.robot().pose.position;
  world_.step(follower_.command(world_.robot()));
  ++steps_;
  const Vec2 after = world_.robot().pose.position;
  path_length_ += distance(before, after);
  if (!(after == before)) trajectory_.push_back(after);
  integrate_scan(memory_, world_.scan(params_.depth, world_.robot().pose.yaw + params_.camera_offset_rad));
  if (steps_ >= params_.step_budget) finished_ = true;
  return finished_;
}

ExploreResult Explorer::result() const {
  ExploreResult r;
  r.memory = memory_;
  r.loop_closed = loop_closed_;
  r.steps = steps_;
  r.path_length_m = path_length_;
  r.coverage = coverage(memory_, world_.static_grid());
  r.trajectory = trajectory_;
  r.ok = loop_closed_ || r.coverage >= params_.min_coverage;
  return r;
}

ExploreResult explore(World& world, const ExploreParams& params) {
  Explorer e(world, params);
  while (!e.step()) {
  }
  return e.result();
}

}  // namespace hiernav

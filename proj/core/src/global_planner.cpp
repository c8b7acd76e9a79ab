#include "hiernav/global_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "hiernav/errors.hpp"
#include "hiernav/rng.hpp"

namespace hiernav {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SamplePointSet sample_free_points(const OccupancyGrid& grid, double density, std::uint64_t seed) {
  if (!(density > 0.0)) throw Error(ErrorKind::InvalidArgument, "density must be positive");
  const double c = grid.cell_size();
  const std::size_t n_free = grid.count(CellState::Free);
  if (n_free == 0) throw Error(ErrorKind::InvalidArgument, "no free space to sample");
  const auto total = static_cast<std::size_t>(std::floor(density * static_cast<double>(n_free) * c * c + 1e-9));
  if (total == 0) throw Error(ErrorKind::InvalidArgument, "no samples");

  const int k = std::max(1, static_cast<int>(std::lround(1.0 / std::sqrt(density) / c)));
  const int bw = (grid.width() + k - 1) / k;
  const int bh = (grid.height() + k - 1) / k;
  std::vector<std::vector<CellIndex>> blocks(static_cast<std::size_t>(bw) * static_cast<std::size_t>(bh));
  for (int r = 0; r < grid.height(); ++r)
    for (int col = 0; col < grid.width(); ++col)
      if (grid.at(CellIndex{col, r}) == CellState::Free)
        blocks[static_cast<std::size_t>(r / k) * static_cast<std::size_t>(bw) + static_cast<std::size_t>(col / k)].push_back({col, r});

  // Largest-remainder allocation of `total` points proportional to free cells.
  CounterRng rng(hash_combine(seed, "free-point-sampler"));
  const double per_cell = static_cast<double>(total) / static_cast<double>(n_free);
  std::vector<std::size_t> alloc(blocks.size(), 0);
  struct Rem {
    double frac;
    double tie;
    std::size_t block;
  };
  std::vector<Rem> rems;
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) continue;
    const double share = per_cell * static_cast<double>(blocks[b].size());
    alloc[b] = static_cast<std::size_t>(std::floor(share));
    assigned += alloc[b];
    rems.push_back({share - std::floor(share), rng.uniform(), b});
  }
  std::sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) {
    if (a.frac != b.frac) return a.frac > b.frac;
    if (a.tie != b.tie) return a.tie < b.tie;
    return a.block < b.block;
  });
  for (std::size_t i = 0; assigned < total && i < rems.size(); ++i, ++assigned) ++alloc[rems[i].block];

  SamplePointSet out{{}, density, seed};
  out.points.reserve(total);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t j = 0; j < alloc[b]; ++j) {
      const CellIndex cell = blocks[b][rng.below(blocks[b].size())];
      const Rect r = grid.cell_rect(cell);
      out.points.push_back({r.x0 + rng.uniform() * c, r.y0 + rng.uniform() * c});
    }
  return out;
}

ResolvedGoal resolve_goal(const Instruction& instr, const SemanticField& field, const SamplePointSet& samples,
                          const RegionLabeling& labeling, std::optional<int> region_constraint, const GoalParams& params) {
  const EncodedInstruction enc = encode_instruction(instr, field);
  if (const Vec2* p = std::get_if<Vec2>(&enc)) return {*p, std::nullopt, 1.0};
  if (samples.points.empty()) throw Error(ErrorKind::InvalidArgument, "no samples");

  const auto& q = std::get<QueryEmbedding>(enc);
  std::optional<std::size_t> best;
  double best_sim = -kInf;
  for (std::size_t i = 0; i < samples.points.size(); ++i) {
    if (region_constraint && labeling.locate(samples.points[i]) != region_constraint) continue;
    const double s = combined_similarity(q, field.query(samples.points[i]), params.w_v);
    if (s > best_sim) {
      best_sim = s;
      best = i;
    }
  }
  if (!best) throw Error(ErrorKind::NotFound, "region constraint excludes all samples");
  if (best_sim < params.tau_sim) throw Error(ErrorKind::NotFound, "target not found");
  return {samples.points[*best], best, best_sim};
}

Vec2 snap_to_clearance(const OccupancyGrid& grid, std::span<const double> clearance, Vec2 p, double min_clearance, double max_dist) {
  const CellIndex center = grid.world_to_cell(p);
  const int reach = static_cast<int>(std::ceil(max_dist / grid.cell_size()));
  std::optional<CellIndex> best;
  double best_d = kInf;
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx) {
      const CellIndex c{center.col + dx, center.row + dy};
      if (!grid.in_bounds(c) || grid.at(c) != CellState::Free || clearance[grid.index(c)] < min_clearance) continue;
      const double d = distance(grid.cell_center(c), p);
      if (d <= max_dist && d < best_d) {
        best_d = d;
        best = c;
      }
    }
  if (!best) throw Error(ErrorKind::NotFound, "no navigable cell near the goal");
  return grid.cell_center(*best);
}

SearchGraph build_search_graph(const TopoGraph& g, const RegionLabeling& labeling, Vec2 p_start, Vec2 p_end) {
  const auto rs = labeling.locate(p_start);
  const auto re = labeling.locate(p_end);
  if (!rs || !re) throw Error(ErrorKind::InvalidArgument, "plan endpoint lies outside every region");
  const OccupancyGrid& grid = labeling.grid();

  SearchGraph sg;
  const int n = static_cast<int>(g.vertices.size());
  sg.vertex_count = n + 2;
  sg.start = n;
  sg.goal = n + 1;
  sg.adjacency.resize(static_cast<std::size_t>(sg.vertex_count));
  const auto link = [&](int a, int b, double w) {
    if (!std::isfinite(w)) return;
    sg.adjacency[static_cast<std::size_t>(a)].push_back({b, w});
    sg.adjacency[static_cast<std::size_t>(b)].push_back({a, w});
  };
  for (const auto& e : g.edges) link(e.a, e.b, e.weight_m);

  const auto attach = [&](int virtual_id, int region, Vec2 p) {
    const auto entrances = g.entrances_of(region);
    std::vector<CellIndex> targets;
    for (const int e : entrances) targets.push_back(grid.world_to_cell(g.vertex(e).position));
    const auto d = region_geodesic(labeling, region, grid.world_to_cell(p), targets);
    for (std::size_t k = 0; k < entrances.size(); ++k) link(virtual_id, entrances[k], d[k]);
  };
  attach(sg.start, *rs, p_start);
  attach(sg.goal, *re, p_end);
  if (*rs == *re) {
    const std::array<CellIndex, 1> target{grid.world_to_cell(p_end)};
    link(sg.start, sg.goal, region_geodesic(labeling, *rs, grid.world_to_cell(p_start), target)[0]);
  }
  return sg;
}

GlobalPlan plan_global(const TopoGraph& g, const RegionLabeling& labeling, Vec2 p_start, Vec2 p_end) {
  const SearchGraph sg = build_search_graph(g, labeling, p_start, p_end);
  GlobalPlan plan;
  plan.p_start = p_start;
  plan.p_end = p_end;
  plan.start_region = *labeling.locate(p_start);
  plan.end_region = *labeling.locate(p_end);

  if (plan.start_region == plan.end_region)
    for (const auto& arc : sg.adjacency[static_cast<std::size_t>(sg.start)])
      if (arc.to == sg.goal) {
        plan.total_cost_m = arc.w;
        return plan;
      }

  const auto n = static_cast<std::size_t>(sg.vertex_count);
  std::vector<double> dist(n, kInf);
  std::vector<int> parent(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[static_cast<std::size_t>(sg.start)] = 0.0;
  open.emplace(0.0, sg.start);
  while (!open.empty()) {
    const auto [d, v] = open.top();
    open.pop();
    if (d > dist[static_cast<std::size_t>(v)]) continue;
    if (v == sg.goal) break;
    for (const auto& arc : sg.adjacency[static_cast<std::size_t>(v)]) {
      const double nd = d + arc.w;
      if (nd < dist[static_cast<std::size_t>(arc.to)]) {
        dist[static_cast<std::size_t>(arc.to)] = nd;
        parent[static_cast<std::size_t>(arc.to)] = v;
        open.emplace(nd, arc.to);
      }
    }
  }
  if (!std::isfinite(dist[static_cast<std::size_t>(sg.goal)])) throw Error(ErrorKind::Unreachable, "goal region unreachable");

  std::vector<int> path;
  for (int v = parent[static_cast<std::size_t>(sg.goal)]; v != -1 && v != sg.start; v = parent[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  for (const int v : path)
    if (v < static_cast<int>(g.vertices.size()) && g.vertex(v).kind == VertexKind::Entrance) {
      plan.entrance_ids.push_back(v);
      plan.waypoints.push_back(g.vertex(v).position);
    }
  plan.total_cost_m = dist[static_cast<std::size_t>(sg.goal)];
  return plan;
}

TopoGraph penalize_edge(const TopoGraph& g, int entrance_id) {
  if (entrance_id < 0 || entrance_id >= static_cast<int>(g.vertices.size()) || g.vertex(entrance_id).kind != VertexKind::Entrance)
    throw Error(ErrorKind::InvalidArgument, "no entrance vertex " + std::to_string(entrance_id));
  TopoGraph out = g;
  for (auto& e : out.edges)
    if (e.a == entrance_id || e.b == entrance_id) e.weight_m = kInf;
  return out;
}

}  // namespace hiernav

#pragma once

#include <string>

#include "hiernav/agent.hpp"
#include "hiernav/scenario.hpp"
#include "hiernav/topo_map.hpp"

namespace hiernav {

/// Top-down plot: rooms, objects, obstacles, graph vertices, planned
/// waypoints, the executed trajectory (one polyline) and the goal.
std::string render_svg(const Scenario& s, const TopoGraph& graph, const EpisodeResult& r);

/// Builds the ground-truth graph for `s` and renders it with the episode.
std::string render_svg(const Scenario& s, const EpisodeResult& r);

}  // namespace hiernav

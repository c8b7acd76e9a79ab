#include "hiernav/svg.hpp"

#include <fmt/format.h>

#include "hiernav/grid.hpp"

namespace hiernav {

namespace {

constexpr double kScale = 50.0;  // px per meter

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string rect(const Rect& r, const char* cls) {
  return fmt::format("<rect class=\"{}\" x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\"/>\n", cls, r.x0, r.y0, r.width(), r.height());
}

}  // namespace

std::string render_svg(const Scenario& s, const TopoGraph& graph, const EpisodeResult& r) {
  const double w = s.bounds_m.x;
  const double h = s.bounds_m.y;
  std::string out = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.3f} {:.3f}\">\n"
      "<style>.room{{fill:#f4f4f0;stroke:#333;stroke-width:0.05}}.object{{fill:#c9e4c5;stroke:#5a8f52;stroke-width:0.02}}"
      ".obstacle{{fill:#d9534f;opacity:0.8}}.region{{fill:#1f77b4}}.entrance{{fill:#ff7f0e}}.waypoint{{fill:none;stroke:#ff7f0e;stroke-width:0.04}}"
      ".local{{fill:#9467bd}}.trajectory{{fill:none;stroke:#2ca02c;stroke-width:0.05}}.goal{{fill:none;stroke:#d62728;stroke-width:0.06}}"
      "text{{font-size:0.3px;font-family:sans-serif}}</style>\n"
      "<g transform=\"translate(0 {:.3f}) scale(1 -1)\">\n",
      w * kScale, h * kScale, w, h, h);

  for (const auto& room : s.rooms) out += rect(room.rect, "room");
  for (const auto& o : s.objects) out += rect(o.rect, "object");
  for (const auto& o : s.dynamic_obstacles) out += rect(o.rect, "obstacle");
  for (const auto& v : graph.vertices)
    out += fmt::format("<circle class=\"{}\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{}\"/>\n", v.kind == VertexKind::Region ? "region" : "entrance",
                       v.position.x, v.position.y, v.kind == VertexKind::Region ? 0.15 : 0.1);
  for (const auto& p : r.global_waypoints)
    out += fmt::format("<circle class=\"waypoint\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"0.25\"/>\n", p.x, p.y);
  for (const auto& plan : r.local_waypoints)
    for (const auto& p : plan) out += fmt::format("<circle class=\"local\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"0.04\"/>\n", p.x, p.y);
  if (!r.trajectory.empty()) {
    out += "<polyline class=\"trajectory\" points=\"";
    for (std::size_t i = 0; i < r.trajectory.size(); ++i)
      out += fmt::format("{}{:.3f},{:.3f}", i == 0 ? "" : " ", r.trajectory[i].x, r.trajectory[i].y);
    out += "\"/>\n";
  }
  if (r.goal) out += fmt::format("<circle class=\"goal\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"0.3\"/>\n", r.goal->x, r.goal->y);
  out += "</g>\n";
  for (const auto& room : s.rooms) {
    const Vec2 c = room.rect.center();
    out += fmt::format("<text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"middle\">{}</text>\n", c.x, h - c.y, escape(room.label));
  }
  out += "</svg>\n";
  return out;
}

std::string render_svg(const Scenario& s, const EpisodeResult& r) {
  const OccupancyGrid grid = rasterize(s, false);
  const auto gaps = door_gaps(s);
  return render_svg(s, build_topo_graph(segment_regions(grid, gaps, s.rooms), gaps), r);
}

}  // namespace hiernav

#include "tubeplan/svg.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace tubeplan {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void append_polygon(std::ostream& os, const ConvexPolygon& poly,
                    const char* style) {
  os << "  <polygon points=\"";
  for (size_t i = 0; i < poly.vertices.size(); ++i) {
    if (i) os << ' ';
    os << fmt(poly.vertices[i].x()) << ',' << fmt(poly.vertices[i].y());
  }
  os << "\" " << style << "/>\n";
}

void append_polyline(std::ostream& os, const std::vector<Vec2>& pts,
                     const std::string& style) {
  if (pts.size() < 2) return;
  os << "  <polyline points=\"";
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i) os << ' ';
    os << fmt(pts[i].x()) << ',' << fmt(pts[i].y());
  }
  os << "\" fill=\"none\" " << style << "/>\n";
}

std::vector<Vec2> plan_polyline(const Plan& plan) {
  std::vector<Vec2> pts;
  if (!plan.states.empty()) {
    // Thin the stored samples to roughly one point per second.
    const size_t stride =
        std::max<size_t>(1, static_cast<size_t>(std::llround(1.0 / plan.dt)));
    for (size_t k = 0; k < plan.states.size(); k += stride) {
      pts.push_back(plan.states[k].pose.head<2>());
    }
    pts.push_back(plan.states.back().pose.head<2>());
  } else if (!plan.segments.empty()) {
    for (double t = 0.0; t <= plan.duration; t += 1.0) {
      pts.push_back(eval_plan(plan, t).state.pose.head<2>());
    }
  }
  return pts;
}

}  // namespace

std::string render_scenario_svg(const Scenario& sc,
                                const std::vector<ConvexPolygon>& inflated,
                                const Plan* plan, double tube_radius,
                                const std::vector<Vec2>* actual) {
  const double x0 = sc.workspace[0].lo, x1 = sc.workspace[0].hi;
  const double y0 = sc.workspace[1].lo, y1 = sc.workspace[1].hi;
  const double margin = 0.03 * std::max(x1 - x0, y1 - y0);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\""
     << fmt(x0 - margin) << ' ' << fmt(-(y1 + margin)) << ' '
     << fmt(x1 - x0 + 2 * margin) << ' ' << fmt(y1 - y0 + 2 * margin)
     << "\">\n";
  // World coordinates have y pointing up; SVG's point down. Mirroring keeps
  // every coordinate below literal.
  os << "<g transform=\"scale(1,-1)\">\n";

  os << "  <rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\""
     << fmt(x1 - x0) << "\" height=\"" << fmt(y1 - y0)
     << "\" fill=\"#f8fafc\" stroke=\"#475569\" stroke-width=\"2\"/>\n";

  for (const ConvexPolygon& ob : inflated) {
    append_polygon(os, ob,
                   "fill=\"none\" stroke=\"#94a3b8\" stroke-width=\"1.5\" "
                   "stroke-dasharray=\"8 6\"");
  }
  for (const ConvexPolygon& ob : sc.obstacles) {
    append_polygon(os, ob, "fill=\"#64748b\" stroke=\"#334155\" "
                           "stroke-width=\"1.5\"");
  }

  if (plan != nullptr) {
    const std::vector<Vec2> route = plan_polyline(*plan);
    if (tube_radius > 0.0) {
      append_polyline(os, route,
                      "stroke=\"#3b82f6\" stroke-opacity=\"0.25\" "
                      "stroke-width=\"" +
                          fmt(2.0 * tube_radius) +
                          "\" stroke-linecap=\"round\" "
                          "stroke-linejoin=\"round\"");
    }
    append_polyline(os, route, "stroke=\"#1d4ed8\" stroke-width=\"2.5\"");
  }
  if (actual != nullptr) {
    append_polyline(os, *actual, "stroke=\"#dc2626\" stroke-width=\"1.5\"");
  }

  os << "  <circle cx=\"" << fmt(sc.start.pose[0]) << "\" cy=\""
     << fmt(sc.start.pose[1])
     << "\" r=\"8\" fill=\"#16a34a\" stroke=\"#14532d\" stroke-width=\"2\"/>\n";
  os << "  <circle cx=\"" << fmt(sc.goal.pose[0]) << "\" cy=\""
     << fmt(sc.goal.pose[1])
     << "\" r=\"8\" fill=\"#f59e0b\" stroke=\"#78350f\" stroke-width=\"2\"/>\n";

  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace tubeplan

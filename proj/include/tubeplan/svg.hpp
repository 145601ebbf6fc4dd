#pragma once

#include <string>
#include <vector>

#include "tubeplan/planner.hpp"

namespace tubeplan {

// Renders a scenario to a self-contained SVG document: workspace frame,
// obstacles (with their inflated outlines), the planned route drawn inside
// its tube band, and optionally the simulated vehicle path. `plan` and
// `actual` may be null/empty; `inflated` should correspond to the inflation
// the plan was computed with so the picture shows the margins the planner
// actually enforced.
std::string render_scenario_svg(const Scenario& sc,
                                const std::vector<ConvexPolygon>& inflated,
                                const Plan* plan, double tube_radius,
                                const std::vector<Vec2>* actual = nullptr);

}  // namespace tubeplan

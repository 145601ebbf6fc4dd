#pragma once

#include <vector>

#include "tubeplan/errors.hpp"
#include "tubeplan/types.hpp"

namespace tubeplan {

// Convex obstacle footprint. Vertices are listed counter-clockwise; validate()
// rejects anything that is not strictly convex (collinear triples included),
// so every edge normal is well defined.
struct ConvexPolygon {
  std::vector<Vec2> vertices;

  void validate() const;

  // Signed-area shoelace formula; positive for counter-clockwise order.
  double area() const;

  // True when p lies inside or on the boundary (within tol, in meters).
  bool contains(const Vec2& p, double tol = 0.0) const;

  // Euclidean distance from p to the polygon (zero inside).
  double distance(const Vec2& p) const;

  // True when the closed segment [a, b] touches the polygon, boundary
  // contact included.
  bool intersects_segment(const Vec2& a, const Vec2& b) const;
};

// Outer approximation of the Minkowski sum of the polygon with a disc of
// radius r: edges are offset outward by r and each vertex arc is replaced by
// a circumscribed tangent polyline. The result always CONTAINS the exact sum
// (no undershoot: a safety margin may only grow), and the default arc step
// keeps the area overshoot below 1.5% of the disc area pi r^2.
//
// max_step is the largest arc angle covered by one tangent segment; the
// default 2*pi/16 bounds the per-arc overshoot factor at
// tan(step/2)/(step/2) - 1 = 1.3%.
ConvexPolygon dilate(const ConvexPolygon& poly, double r,
                     double max_step = 2.0 * M_PI / 16.0);

}  // namespace tubeplan

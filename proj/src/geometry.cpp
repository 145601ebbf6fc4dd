#include "tubeplan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tubeplan {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Distance from p to the closed segment [a, b].
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

int orientation_sign(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

// Closed-segment intersection test, collinear overlap included.
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                        const Vec2& d) {
  const int o1 = orientation_sign(a, b, c);
  const int o2 = orientation_sign(a, b, d);
  const int o3 = orientation_sign(c, d, a);
  const int o4 = orientation_sign(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

void ConvexPolygon::validate() const {
  const size_t n = vertices.size();
  if (n < 3) {
    throw ConfigError("polygon must have at least 3 vertices, got " +
                      std::to_string(n));
  }
  double scale = 0.0;
  for (const Vec2& v : vertices) {
    if (!v.allFinite()) throw ConfigError("polygon has a non-finite vertex");
    scale = std::max(scale, v.cwiseAbs().maxCoeff());
  }
  // Strict convexity: every consecutive vertex triple turns left. The
  // tolerance scales with the coordinate magnitude so large workspaces do not
  // reject legitimate polygons through rounding alone.
  const double tol = 1e-12 * std::max(1.0, scale * scale);
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    const Vec2& c = vertices[(i + 2) % n];
    if (cross(b - a, c - b) <= tol) {
      std::ostringstream os;
      os << "polygon is not strictly convex counter-clockwise at vertex "
         << (i + 1) % n;
      throw ConfigError(os.str());
    }
  }
}

double ConvexPolygon::area() const {
  double twice = 0.0;
  const size_t n = vertices.size();
  for (size_t i = 0; i < n; ++i) {
    twice += cross(vertices[i], vertices[(i + 1) % n]);
  }
  return 0.5 * twice;
}

bool ConvexPolygon::contains(const Vec2& p, double tol) const {
  const size_t n = vertices.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    const Vec2 edge = b - a;
    // Signed distance of p left of the edge line; negative means outside.
    const double s = cross(edge, p - a) / edge.norm();
    if (s < -tol) return false;
  }
  return true;
}

double ConvexPolygon::distance(const Vec2& p) const {
  if (contains(p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const size_t n = vertices.size();
  for (size_t i = 0; i < n; ++i) {
    best = std::min(best,
                    point_segment_distance(p, vertices[i], vertices[(i + 1) % n]));
  }
  return best;
}

bool ConvexPolygon::intersects_segment(const Vec2& a, const Vec2& b) const {
  // A segment meets a convex region iff an endpoint is inside or it crosses
  // the boundary.
  if (contains(a) || contains(b)) return true;
  const size_t n = vertices.size();
  for (size_t i = 0; i < n; ++i) {
    if (segments_intersect(a, b, vertices[i], vertices[(i + 1) % n])) return true;
  }
  return false;
}

ConvexPolygon dilate(const ConvexPolygon& poly, double r, double max_step) {
  poly.validate();
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ConfigError("dilation radius must be finite and non-negative");
  }
  if (!(max_step > 0.0) || !(max_step < M_PI)) {
    throw ConfigError("dilation arc step must lie in (0, pi)");
  }
  if (r == 0.0) return poly;

  const size_t n = poly.vertices.size();
  ConvexPolygon out;
  out.vertices.reserve(3 * n);

  for (size_t i = 0; i < n; ++i) {
    const Vec2& prev = poly.vertices[(i + n - 1) % n];
    const Vec2& v = poly.vertices[i];
    const Vec2& next = poly.vertices[(i + 1) % n];

    // Outward (right-hand) unit normals of the incoming and outgoing edges.
    const Vec2 din = (v - prev).normalized();
    const Vec2 dout = (next - v).normalized();
    const Vec2 nin(din.y(), -din.x());
    const Vec2 nout(dout.y(), -dout.x());

    const double a0 = std::atan2(nin.y(), nin.x());
    double turn = std::atan2(cross(nin, nout), nin.dot(nout));
    if (turn < 0.0) turn += 2.0 * M_PI;  // CCW polygons always turn left

    // The circumscribed outline is the intersection of tangent half-planes:
    // its vertices are the apex points where consecutive tangent lines meet,
    // at radius r / cos(step/2) -- outside the true arc, so the approximation
    // never undershoots. The tangent points themselves are interior to the
    // outline's edges (the straight run from the last apex of one corner to
    // the first apex of the next passes through both edge-offset tangent
    // points), so only apexes are emitted.
    const int k = std::max(1, static_cast<int>(std::ceil(turn / max_step)));
    const double step = turn / k;
    const double apex_r = r / std::cos(0.5 * step);
    for (int j = 0; j < k; ++j) {
      const double ang = a0 + (j + 0.5) * step;
      out.vertices.push_back(v + apex_r * Vec2(std::cos(ang), std::sin(ang)));
    }
  }

  // Drop near-duplicate consecutive points (tiny turns produce coincident
  // offsets) so the result stays strictly convex.
  ConvexPolygon clean;
  clean.vertices.reserve(out.vertices.size());
  const double dedupe = 1e-9 * std::max(1.0, r);
  for (const Vec2& p : out.vertices) {
    if (clean.vertices.empty() ||
        (p - clean.vertices.back()).norm() > dedupe) {
      clean.vertices.push_back(p);
    }
  }
  while (clean.vertices.size() > 1 &&
         (clean.vertices.front() - clean.vertices.back()).norm() <= dedupe) {
    clean.vertices.pop_back();
  }
  clean.validate();
  return clean;
}

}  // namespace tubeplan

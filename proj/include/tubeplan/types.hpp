#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>

namespace tubeplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Generalized world-frame state of a planar vessel.
// pose = (x1, x2, heading) in (m, m, rad); heading is stored unwrapped.
// vel  = d(pose)/dt in the world frame, (m/s, m/s, rad/s).
struct State {
  Vec3 pose = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
};

constexpr double kMetersPerSecondPerKnot = 0.5144;

inline double knots(double v) { return v * kMetersPerSecondPerKnot; }

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

// Smallest-magnitude signed difference a-b on the circle.
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool contains_strict(double v) const { return v > lo && v < hi; }
};

// Axis-aligned box over the three generalized coordinates. Axis 2 is the
// heading/yaw axis and gets circular treatment where noted.
struct Box3 {
  std::array<Interval, 3> axes{};

  const Interval& operator[](int i) const { return axes[static_cast<size_t>(i)]; }
  Interval& operator[](int i) { return axes[static_cast<size_t>(i)]; }

  bool contains(const Vec3& v) const {
    return axes[0].contains(v[0]) && axes[1].contains(v[1]) && axes[2].contains(v[2]);
  }
};

// A heading interval spanning the full circle is treated as unconstrained.
inline bool heading_unconstrained(const Interval& iv) {
  return iv.width() >= 2.0 * M_PI - 1e-12;
}

// Membership test that is circle-aware on the heading axis.
inline bool pose_box_contains(const Box3& box, const Vec3& pose) {
  if (!box[0].contains(pose[0]) || !box[1].contains(pose[1])) return false;
  if (heading_unconstrained(box[2])) return true;
  return box[2].contains(wrap_angle(pose[2]));
}

inline bool finite(const Vec3& v) { return v.allFinite(); }
inline bool finite(const Mat3& m) { return m.allFinite(); }

}  // namespace tubeplan

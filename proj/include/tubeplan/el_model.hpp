#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "tubeplan/errors.hpp"
#include "tubeplan/types.hpp"

namespace tubeplan {

// Fully actuated 3-DOF surface vessel in body coordinates q = (surge, sway, yaw rate):
//
//   M qdot + C(q) q + F(q) q = tau + d,      xdot = J(x3) q
//
// with M symmetric positive definite, C(q) the rigid-body Coriolis pattern
// derived from M, and F(q) = F_lin + diag(F_quad .* |q|) hydrodynamic damping.
// The planner and controller work in the equivalent world-frame form
//
//   xddot = Phi(x, xdot) + Theta(x) (tau + d),   Theta(x) = Mstar(x)^-1 J(x)^-T
//
// obtained by the standard kinematic transformation (starred matrices).
struct ELModel {
  Mat3 inertia = Mat3::Identity();        // M  [kg, kg, kg m^2 scales]
  Vec3 coriolis_coeffs = Vec3::Zero();    // (c_v, c_r, c_u); see coriolis()
  Mat3 drag_linear = Mat3::Zero();        // F_lin
  Vec3 drag_quadratic = Vec3::Zero();     // diagonal quadratic drag gains
  std::string name;                       // parameter source tag

  // Cached at load/validate time.
  Mat3 inertia_inv = Mat3::Identity();
  double inertia_norm = 1.0;       // ||M||_2      (= sup ||Theta^-1||)
  double inertia_inv_norm = 1.0;   // ||M^-1||_2   (= sup ||Theta||)

  // Rigid-body Coriolis matrix
  //   C(q) = [ 0        0        -c_v q2 - c_r q3
  //            0        0         c_u q1
  //            c_v q2 + c_r q3   -c_u q1            0 ]
  // (skew-symmetric). For C derived from M: c_v = M22, c_r = (M23+M32)/2, c_u = M11.
  Mat3 coriolis(const Vec3& q) const;

  // F(q) = F_lin + diag(F_quad[i] * |q[i]|).
  Mat3 drag(const Vec3& q) const;

  // Checks SPD inertia and recomputes the cached inverse and norms.
  // Throws ModelValidityError on violation.
  void validate_and_cache();
};

// Planar yaw rotation embedded in 3x3: rotates (x1, x2), leaves yaw untouched.
Mat3 rotation(double heading);

// d/dt J(x3) = (dJ/dx3) * yaw_rate.
Mat3 rotation_rate(double heading, double yaw_rate);

// Drift acceleration of the transformed dynamics: xddot at tau = d = 0.
// Built from the starred matrices Mstar = J^-T M J^-1,
// Vmstar = J^-T (C(q) - M J^-1 Jdot) J^-1, Fstar = J^-T F(q) J^-1.
Vec3 phi(const ELModel& m, const Vec3& pose, const Vec3& vel);

// Input map Theta(x) = Mstar^-1 J^-T. Satisfies Theta(x) = J(x) M^-1 for the
// orthogonal J used here; that identity is kept as a test cross-check.
Mat3 theta(const ELModel& m, const Vec3& pose);

// Theta(x)^-1, computed directly as M J(x)^T.
Mat3 theta_inverse(const ELModel& m, const Vec3& pose);

// xddot = Phi(x, xdot) + Theta(x) (tau + d).
Vec3 forward_dynamics(const ELModel& m, const Vec3& pose, const Vec3& vel,
                      const Vec3& tau, const Vec3& disturbance);

// Transformed input realizing a desired world acceleration: v = accel - Phi.
Vec3 transformed_input(const ELModel& m, const Vec3& pose, const Vec3& vel,
                       const Vec3& accel);

// Computed-torque inverse dynamics: tau = Theta^-1 (accel - Phi).
Vec3 inverse_dynamics(const ELModel& m, const Vec3& pose, const Vec3& vel,
                      const Vec3& accel);

// World acceleration as a function of time and state, for integration.
using AccelFn = std::function<Vec3(double t, const State&)>;

// One classical RK4 step of the second-order system posedd = accel(t, state).
// Throws IntegrationError if the state leaves the finite range.
State integrate_step(const State& s, const AccelFn& accel, double t, double dt);

// ---- model file I/O ----------------------------------------------------
// Format: {"name": str, "M": [[..3x3..]], "Vm_coeffs": [c_v, c_r, c_u],
//          "F_coeffs": {"linear": [[..3x3..]], "quadratic": [f1, f2, f3]}}

ELModel load_model(const std::filesystem::path& path);
void save_model(const ELModel& m, const std::filesystem::path& path);

// Canonical serialization (sorted keys, shortest round-trip floats); the
// provenance hash is FNV-1a 64 over these bytes.
std::string model_canonical_json(const ELModel& m);
std::string model_hash(const ELModel& m);

}  // namespace tubeplan

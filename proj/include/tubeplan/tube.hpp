#pragma once

#include <string>

#include "tubeplan/el_model.hpp"
#include "tubeplan/errors.hpp"
#include "tubeplan/types.hpp"

namespace tubeplan {

// Feedback gains of the world-frame tracking law
//   vtilde = -(Phi(x, xdot) - Phi(xbar, xbardot)) - k1 k2 xtilde - (k1 + k2) xtildedot
// The ultimate-bound analysis requires k1 k2 > Gamma with all three positive.
struct Gains {
  double k1 = 0.0;
  double k2 = 0.0;
  double gamma = 0.0;

  // Throws GainConditionError when the inequality k1*k2 > Gamma (or positivity)
  // fails; the message names the violated condition.
  void validate() const;
};

// Admissible disturbance set { d : ||W^(1/2) d|| <= 1 } with diagonal W^(1/2).
// Entry i is the inverse of the ellipsoid semi-axis along generalized axis i.
struct DisturbanceEllipsoid {
  Vec3 w_sqrt_diag = Vec3::Ones();

  void validate() const;
  bool admissible(const Vec3& d, double tol = 0.0) const;
  // Largest force magnitude in the set: sup ||d||_2 = max_i 1 / w_sqrt_diag[i].
  double sup_norm() const;
};

double disturbance_sup(const DisturbanceEllipsoid& e);

// Ultimate-bound coefficients of the closed-loop error dynamics. The error
// enters a ball of radius C1*D in position, C2*D in the filtered variable
// r = xtildedot + k1 xtilde, and C3*D = (k1 C1 + C2) D in velocity, where
// D bounds the disturbance acceleration ||Theta(x) d||.
struct BoundCoeffs {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

BoundCoeffs ultimate_bound_coeffs(const Gains& g);

// Deterministic sampling plan for bounding the drift Jacobians over the
// operating boxes. Pure grids (no RNG) so tube reports hash reproducibly.
struct GEstimationConfig {
  int heading_samples = 48;      // heading grid resolution
  int velocity_samples = 5;      // per-axis grid resolution (endpoints included)
  double fd_step = 1e-5;         // central-difference step scale
  double safety = 1.1;           // multiplies the sampled maxima
};

struct DriftBounds {
  double g1 = 0.0;  // sup ||dPhi/dx||
  double g2 = 0.0;  // sup ||dPhi/dxdot||
};

// Samples ||dPhi/dx|| and ||dPhi/dxdot|| over heading x velocity-box grids.
// Phi does not depend on x1, x2, so the pose sweep reduces to the heading axis.
// Throws ModelValidityError if any sampled partial is non-finite.
DriftBounds estimate_g1_g2(const ELModel& m, const Box3& workspace,
                           const Box3& velocity_box,
                           const GEstimationConfig& cfg = {});

// Tube certificate: every quantity needed to tighten constraints and certify
// closed-loop containment.
struct TubeSpec {
  Gains gains;
  double d_bar = 0.0;          // sup ||d||
  double theta_sup = 0.0;      // mu_theta  = ||M^-1|| >= sup ||Theta(x)||
  double theta_inv_sup = 0.0;  // mu_Theta  = ||M||    >= sup ||Theta(x)^-1||
  double accel_bound = 0.0;    // D = mu_theta * d_bar
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double r_pos = 0.0;          // C1 * D  position tube radius
  double r_filt = 0.0;         // C2 * D  filtered-error radius
  double r_vel = 0.0;          // k1 * r_pos + r_filt (= C3 * D)
  double g1 = 0.0, g2 = 0.0;
  double rho_ctrl = 0.0;       // feedback-effort radius rho_v
};

// Report serialization with pinned keys:
// {k1, k2, Gamma, mu_theta, mu_Theta, d_bar, D, C1, C2, C3, r_x, r_v, rho_v, g1, g2}
std::string tube_report_json(const TubeSpec& t);
std::string tube_hash(const TubeSpec& t);
TubeSpec tube_from_report(const std::string& text);

TubeSpec compute_tube(const Gains& gains, const ELModel& m,
                      const DisturbanceEllipsoid& e, const Box3& workspace,
                      const Box3& velocity_box, const GEstimationConfig& cfg = {});

// Tracking feedback. err holds (xtilde, xtildedot); nominal holds (xbar, xbardot).
Vec3 feedback_control(const State& err, const State& nominal, const Gains& g,
                      const ELModel& m);

// V = r^T r + Gamma xtilde^T xtilde with r = xtildedot + k1 xtilde.
double lyapunov_value(const Vec3& xtilde, const Vec3& xtilde_dot, const Gains& g);

// Upper bound on Vdot given the realized disturbance acceleration
// d_effect = Theta(x) d:
//   Vdot <= -(k2 - Gamma/k1) ||r||^2 - Gamma k1 ||xtilde||^2 + ||d_effect||^2 / k2.
// Using the pointwise ||d_effect|| instead of the global D tightens the bound;
// the same completing-the-square derivation applies verbatim.
double lyapunov_rate(const Vec3& xtilde, const Vec3& xtilde_dot, const Vec3& d_effect,
                     const Gains& g);

// Operating boxes and their tube-tightened counterparts.
struct ConstraintSets {
  Box3 pose;
  Box3 velocity;
  Box3 torque;
  Box3 pose_tight;
  Box3 velocity_tight;
  Box3 torque_tight;
};

// Erodes the pose box by r_pos, the velocity box by r_vel, and the torque box
// by mu_Theta * rho_v per axis. A heading interval covering the full circle is
// left untouched (the circle has no boundary to erode). Throws TighteningError
// naming the first axis whose interval collapses.
ConstraintSets tighten(const Box3& pose_box, const Box3& velocity_box,
                       const Box3& torque_box, const TubeSpec& tube);

}  // namespace tubeplan

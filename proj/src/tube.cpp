#include "tubeplan/tube.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <vector>

#include "tubeplan/io.hpp"

namespace tubeplan {

void Gains::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(gamma > 0.0)) {
    std::ostringstream os;
    os << "gain condition violated: k1, k2, Gamma must be positive"
       << " (k1=" << k1 << ", k2=" << k2 << ", Gamma=" << gamma << ")";
    throw GainConditionError(os.str());
  }
  if (!(k1 * k2 > gamma)) {
    std::ostringstream os;
    os << "gain condition violated: require k1*k2 > Gamma, got k1*k2=" << k1 * k2
       << " <= Gamma=" << gamma;
    throw GainConditionError(os.str());
  }
}

void DisturbanceEllipsoid::validate() const {
  if (!finite(w_sqrt_diag) || (w_sqrt_diag.array() <= 0.0).any()) {
    throw ConfigError("disturbance ellipsoid: W_sqrt diagonal must be positive");
  }
}

bool DisturbanceEllipsoid::admissible(const Vec3& d, double tol) const {
  return (w_sqrt_diag.asDiagonal() * d).norm() <= 1.0 + tol;
}

double DisturbanceEllipsoid::sup_norm() const {
  return (1.0 / w_sqrt_diag.array()).maxCoeff();
}

double disturbance_sup(const DisturbanceEllipsoid& e) { return e.sup_norm(); }

BoundCoeffs ultimate_bound_coeffs(const Gains& g) {
  g.validate();
  BoundCoeffs b;
  b.c1 = 1.0 / std::sqrt(g.gamma * g.k1 * g.k2);
  b.c2 = std::sqrt(g.k1 / (g.k1 * g.k2 * g.k2 - g.k2 * g.gamma));
  b.c3 = g.k1 * b.c1 + b.c2;
  return b;
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  if (n <= 1 || hi <= lo) {
    v.push_back(0.5 * (lo + hi));
    return v;
  }
  v.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    v.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  }
  return v;
}

double spectral_norm(const Mat3& m) {
  return m.jacobiSvd().singularValues()[0];
}

}  // namespace

DriftBounds estimate_g1_g2(const ELModel& m, const Box3& workspace,
                           const Box3& velocity_box, const GEstimationConfig& cfg) {
  // Phi(x, xdot) depends on the pose only through the heading, so
  // dPhi/dx = [0 | 0 | dPhi/dx3] and ||dPhi/dx|| = ||dPhi/dx3||_2.
  std::vector<double> headings;
  if (heading_unconstrained(workspace[2])) {
    const int n = std::max(4, cfg.heading_samples);
    for (int i = 0; i < n; ++i) headings.push_back(-M_PI + 2.0 * M_PI * i / n);
  } else {
    headings = linspace(workspace[2].lo, workspace[2].hi, cfg.heading_samples);
  }

  const int nv = std::max(2, cfg.velocity_samples);
  const auto vx = linspace(velocity_box[0].lo, velocity_box[0].hi, nv);
  const auto vy = linspace(velocity_box[1].lo, velocity_box[1].hi, nv);
  const auto vr = linspace(velocity_box[2].lo, velocity_box[2].hi, nv);

  const double h_theta = cfg.fd_step;
  const auto vel_step = [&](int axis) {
    const double w = velocity_box[axis].width();
    return cfg.fd_step * std::max(1.0, w);
  };

  DriftBounds out;
  const Vec3 pos(0.0, 0.0, 0.0);  // x1, x2 do not enter Phi
  for (const double th : headings) {
    for (const double a : vx) {
      for (const double b : vy) {
        for (const double c : vr) {
          const Vec3 vel(a, b, c);
          const Vec3 pose(pos[0], pos[1], th);

          // dPhi/dx3, central difference.
          const Vec3 dth = (phi(m, Vec3(0, 0, th + h_theta), vel) -
                            phi(m, Vec3(0, 0, th - h_theta), vel)) /
                           (2.0 * h_theta);

          // dPhi/dxdot, column by column.
          Mat3 jac;
          for (int axis = 0; axis < 3; ++axis) {
            const double h = vel_step(axis);
            Vec3 vp = vel, vn = vel;
            vp[axis] += h;
            vn[axis] -= h;
            jac.col(axis) = (phi(m, pose, vp) - phi(m, pose, vn)) / (2.0 * h);
          }

          if (!finite(dth) || !finite(jac)) {
            throw ModelValidityError(
                "drift-bound sampling produced non-finite partial derivatives");
          }
          out.g1 = std::max(out.g1, dth.norm());
          out.g2 = std::max(out.g2, spectral_norm(jac));
        }
      }
    }
  }
  out.g1 *= cfg.safety;
  out.g2 *= cfg.safety;
  return out;
}

TubeSpec compute_tube(const Gains& gains, const ELModel& m,
                      const DisturbanceEllipsoid& e, const Box3& workspace,
                      const Box3& velocity_box, const GEstimationConfig& cfg) {
  gains.validate();
  e.validate();

  TubeSpec t;
  t.gains = gains;
  t.d_bar = e.sup_norm();
  t.theta_sup = m.inertia_inv_norm;
  t.theta_inv_sup = m.inertia_norm;
  t.accel_bound = t.theta_sup * t.d_bar;

  const BoundCoeffs b = ultimate_bound_coeffs(gains);
  t.c1 = b.c1;
  t.c2 = b.c2;
  t.c3 = b.c3;
  t.r_pos = t.c1 * t.accel_bound;
  t.r_filt = t.c2 * t.accel_bound;
  t.r_vel = gains.k1 * t.r_pos + t.r_filt;  // equals c3 * accel_bound

  const DriftBounds g = estimate_g1_g2(m, workspace, velocity_box, cfg);
  t.g1 = g.g1;
  t.g2 = g.g2;
  t.rho_ctrl = (t.g1 + gains.k1 * gains.k2) * t.r_pos +
               (t.g2 + gains.k1 + gains.k2) * t.r_vel;
  return t;
}

std::string tube_report_json(const TubeSpec& t) {
  json j;
  j["k1"] = t.gains.k1;
  j["k2"] = t.gains.k2;
  j["Gamma"] = t.gains.gamma;
  j["mu_theta"] = t.theta_sup;
  j["mu_Theta"] = t.theta_inv_sup;
  j["d_bar"] = t.d_bar;
  j["D"] = t.accel_bound;
  j["C1"] = t.c1;
  j["C2"] = t.c2;
  j["C3"] = t.c3;
  j["r_x"] = t.r_pos;
  j["r_v"] = t.r_vel;
  j["rho_v"] = t.rho_ctrl;
  j["g1"] = t.g1;
  j["g2"] = t.g2;
  return j.dump(2) + "\n";
}

std::string tube_hash(const TubeSpec& t) {
  return hash_hex(fnv1a64(tube_report_json(t)));
}

TubeSpec tube_from_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("tube report parse error: ") + e.what());
  }
  const std::string ctx = "tube report";
  TubeSpec t;
  try {
    t.gains.k1 = require_key(j, "k1", ctx).get<double>();
    t.gains.k2 = require_key(j, "k2", ctx).get<double>();
    t.gains.gamma = require_key(j, "Gamma", ctx).get<double>();
    t.theta_sup = require_key(j, "mu_theta", ctx).get<double>();
    t.theta_inv_sup = require_key(j, "mu_Theta", ctx).get<double>();
    t.d_bar = require_key(j, "d_bar", ctx).get<double>();
    t.accel_bound = require_key(j, "D", ctx).get<double>();
    t.c1 = require_key(j, "C1", ctx).get<double>();
    t.c2 = require_key(j, "C2", ctx).get<double>();
    t.c3 = require_key(j, "C3", ctx).get<double>();
    t.r_pos = require_key(j, "r_x", ctx).get<double>();
    t.r_vel = require_key(j, "r_v", ctx).get<double>();
    t.rho_ctrl = require_key(j, "rho_v", ctx).get<double>();
    t.g1 = require_key(j, "g1", ctx).get<double>();
    t.g2 = require_key(j, "g2", ctx).get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("tube report: ") + e.what());
  }
  t.r_filt = t.c2 * t.accel_bound;
  return t;
}

Vec3 feedback_control(const State& err, const State& nominal, const Gains& g,
                      const ELModel& m) {
  const Vec3 phi_actual = phi(m, nominal.pose + err.pose, nominal.vel + err.vel);
  const Vec3 phi_nominal = phi(m, nominal.pose, nominal.vel);
  return -(phi_actual - phi_nominal) - g.k1 * g.k2 * err.pose -
         (g.k1 + g.k2) * err.vel;
}

double lyapunov_value(const Vec3& xtilde, const Vec3& xtilde_dot, const Gains& g) {
  const Vec3 r = xtilde_dot + g.k1 * xtilde;
  return r.squaredNorm() + g.gamma * xtilde.squaredNorm();
}

double lyapunov_rate(const Vec3& xtilde, const Vec3& xtilde_dot, const Vec3& d_effect,
                     const Gains& g) {
  const Vec3 r = xtilde_dot + g.k1 * xtilde;
  return -(g.k2 - g.gamma / g.k1) * r.squaredNorm() -
         g.gamma * g.k1 * xtilde.squaredNorm() + d_effect.squaredNorm() / g.k2;
}

namespace {

Interval erode(const Interval& iv, double r, const char* axis_name) {
  const Interval out{iv.lo + r, iv.hi - r};
  if (!(out.lo < out.hi)) {
    std::ostringstream os;
    os << "constraint tightening infeasible: " << axis_name << " interval ["
       << iv.lo << ", " << iv.hi << "] collapses under erosion radius " << r;
    throw TighteningError(os.str());
  }
  return out;
}

}  // namespace

ConstraintSets tighten(const Box3& pose_box, const Box3& velocity_box,
                       const Box3& torque_box, const TubeSpec& tube) {
  ConstraintSets s;
  s.pose = pose_box;
  s.velocity = velocity_box;
  s.torque = torque_box;

  s.pose_tight[0] = erode(pose_box[0], tube.r_pos, "workspace x1");
  s.pose_tight[1] = erode(pose_box[1], tube.r_pos, "workspace x2");
  if (heading_unconstrained(pose_box[2])) {
    s.pose_tight[2] = pose_box[2];  // full circle: nothing to erode
  } else {
    s.pose_tight[2] = erode(pose_box[2], tube.r_pos, "workspace heading");
  }

  static const char* vel_names[3] = {"velocity x1", "velocity x2", "yaw rate"};
  for (int i = 0; i < 3; ++i) {
    s.velocity_tight[i] = erode(velocity_box[i], tube.r_vel, vel_names[i]);
  }

  const double tau_erosion = tube.theta_inv_sup * tube.rho_ctrl;
  static const char* tau_names[3] = {"surge torque", "sway torque", "yaw torque"};
  for (int i = 0; i < 3; ++i) {
    s.torque_tight[i] = erode(torque_box[i], tau_erosion, tau_names[i]);
  }
  return s;
}

}  // namespace tubeplan

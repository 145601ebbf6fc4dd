#include "tubeplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "tubeplan/io.hpp"

namespace tubeplan {

DisturbanceKind parse_disturbance_kind(const std::string& name) {
  if (name == "constant") return DisturbanceKind::kConstantWorst;
  if (name == "rotating") return DisturbanceKind::kRotatingExtreme;
  if (name == "noise") return DisturbanceKind::kFilteredNoise;
  throw ConfigError("unknown disturbance profile '" + name +
                    "' (expected constant, rotating, or noise)");
}

DisturbanceFn make_disturbance(const DisturbanceProfile& profile,
                               const DisturbanceEllipsoid& ell, double horizon,
                               double knot_dt) {
  ell.validate();
  if (!(horizon >= 0.0) || !(knot_dt > 0.0)) {
    throw ConfigError("disturbance horizon/knot spacing must be positive");
  }
  const Vec3 semi = ell.w_sqrt_diag.cwiseInverse();  // ellipsoid semi-axes
  const double scale = profile.scale;

  switch (profile.kind) {
    case DisturbanceKind::kConstantWorst: {
      // The hardest constant push: full magnitude along the largest
      // semi-axis. Seed-independent by design.
      int axis = 0;
      semi.maxCoeff(&axis);
      Vec3 d = Vec3::Zero();
      d[axis] = semi[axis] * scale;
      return [d](double) { return d; };
    }
    case DisturbanceKind::kRotatingExtreme: {
      // Direction sweeps all three components slowly; the weighted norm is
      // exactly 1 at every instant, so the boundary is attained throughout.
      const double omega = 2.0 * M_PI / profile.period;
      return [semi, omega, scale](double t) {
        Vec3 u(std::cos(omega * t), std::sin(omega * t),
               std::sin(0.37 * omega * t));
        u /= u.norm();  // planar part has unit norm, so u never vanishes
        return (scale * semi.cwiseProduct(u)).eval();
      };
    }
    case DisturbanceKind::kFilteredNoise: {
      // First-order low-pass (Ornstein-Uhlenbeck) knots, each clipped into
      // the unit ball before scaling by the semi-axes. Linear interpolation
      // keeps every intermediate instant inside the ellipsoid by convexity.
      const auto n_knots =
          static_cast<size_t>(std::ceil(horizon / knot_dt)) + 2;
      std::mt19937_64 rng(profile.seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      const double rho = std::exp(-knot_dt / profile.correlation_time);
      const double sigma = std::sqrt(1.0 - rho * rho);

      std::vector<Vec3> knots(n_knots);
      Vec3 u(gauss(rng), gauss(rng), gauss(rng));  // stationary start
      for (size_t k = 0; k < n_knots; ++k) {
        knots[k] = semi.cwiseProduct(u / std::max(1.0, u.norm()));
        u = rho * u + sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
      }
      const double t_max = knot_dt * static_cast<double>(n_knots - 1);
      return [knots = std::move(knots), knot_dt, t_max, scale](double t) {
        t = std::clamp(t, 0.0, t_max);
        const double s = t / knot_dt;
        const auto k = std::min(static_cast<size_t>(s), knots.size() - 2);
        const double a = s - static_cast<double>(k);
        return (scale * ((1.0 - a) * knots[k] + a * knots[k + 1])).eval();
      };
    }
  }
  throw ConfigError("unhandled disturbance kind");
}

namespace {

// Feedback + feedforward torque at state s tracking the plan at time t.
Vec3 tracking_torque(const ELModel& m, const Gains& gains, const Plan& plan,
                     double t, const State& s) {
  const ReferencePoint ref = eval_plan(plan, t);
  const State err{s.pose - ref.state.pose, s.vel - ref.state.vel};
  const Vec3 vtilde = feedback_control(err, ref.state, gains, m);
  const Vec3 vbar = ref.accel - phi(m, ref.state.pose, ref.state.vel);
  return theta_inverse(m, s.pose) * (vbar + vtilde);
}

}  // namespace

RunLog run_closed_loop(const Plan& plan, const Scenario& sc,
                       const DisturbanceFn& dfn, double dt) {
  if (!(dt > 0.0)) throw ConfigError("simulation dt must be positive");
  const auto steps = static_cast<long>(std::llround(plan.duration / dt));
  if (std::abs(static_cast<double>(steps) * dt - plan.duration) > 1e-9) {
    std::ostringstream os;
    os << "plan duration " << plan.duration
       << " s is not an integer multiple of dt " << dt;
    throw ConfigError(os.str());
  }

  const ELModel& m = sc.model;
  const Gains& gains = sc.gains;
  const AccelFn accel = [&](double t, const State& s) {
    return forward_dynamics(m, s.pose, s.vel,
                            tracking_torque(m, gains, plan, t, s), dfn(t));
  };

  RunLog log;
  log.dt = dt;
  log.records.reserve(static_cast<size_t>(steps) + 1);

  State x = eval_plan(plan, 0.0).state;  // start exactly on the reference
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    RunRecord rec;
    rec.t = t;
    rec.nominal = eval_plan(plan, t).state;
    rec.actual = x;
    rec.tau = tracking_torque(m, gains, plan, t, x);
    rec.d = dfn(t);
    const Vec3 ep = x.pose - rec.nominal.pose;
    const Vec3 ev = x.vel - rec.nominal.vel;
    rec.lyapunov = lyapunov_value(ep, ev, gains);
    log.records.push_back(rec);

    log.max_err_pos = std::max(log.max_err_pos, ep.norm());
    log.max_err_vel = std::max(log.max_err_vel, ev.norm());
    log.max_disturbance_wnorm =
        std::max(log.max_disturbance_wnorm,
                 sc.disturbance.w_sqrt_diag.cwiseProduct(rec.d).norm());
    if (k == steps) {
      log.terminal_err_pos = ep.norm();
      log.terminal_err_vel = ev.norm();
    }

    if (k < steps) x = integrate_step(x, accel, t, dt);
  }
  return log;
}

Certification certify(const RunLog& log, const Scenario& sc,
                      const TubeSpec& tube) {
  if (log.records.empty()) throw ConfigError("cannot certify an empty run");

  Certification c;
  c.max_err_pos = log.max_err_pos;
  c.max_err_vel = log.max_err_vel;
  c.terminal_err_pos = log.terminal_err_pos;
  c.r_pos = tube.r_pos;
  c.r_vel = tube.r_vel;
  c.required_clearance = sc.footprint_radius;
  c.max_disturbance_wnorm = log.max_disturbance_wnorm;

  std::ostringstream os;
  os.precision(6);

  // (1) Admissibility first: if the disturbance left the ellipsoid, every
  // other failure is attributed to that, not to the controller.
  if (log.max_disturbance_wnorm > 1.0 + 1e-9) {
    os << "disturbance exceeds the admissible set (peak weighted norm "
       << log.max_disturbance_wnorm
       << " > 1); containment guarantees are void";
    c.failures.push_back(os.str());
    os.str("");
  }

  // (2) Tube containment, with a hair of slack for arithmetic noise.
  if (log.max_err_pos > tube.r_pos * (1.0 + 1e-6)) {
    os << "tracking error left the tube: max ||xtilde|| = " << log.max_err_pos
       << " exceeds the certified radius " << tube.r_pos;
    c.failures.push_back(os.str());
    os.str("");
  }
  if (log.max_err_vel > tube.r_vel * (1.0 + 1e-6)) {
    os << "velocity error left the tube: max ||xtildedot|| = "
       << log.max_err_vel << " exceeds the certified radius " << tube.r_vel;
    c.failures.push_back(os.str());
    os.str("");
  }
  if (log.terminal_err_pos > tube.r_pos * (1.0 + 1e-6)) {
    os << "terminal error " << log.terminal_err_pos
       << " exceeds the certified radius " << tube.r_pos;
    c.failures.push_back(os.str());
    os.str("");
  }

  // (3) The actual vehicle must clear the *original* obstacles by the hull
  // footprint and stay inside the original workspace and velocity envelope.
  c.min_clearance = std::numeric_limits<double>::infinity();
  for (const RunRecord& rec : log.records) {
    for (const ConvexPolygon& ob : sc.obstacles) {
      c.min_clearance =
          std::min(c.min_clearance, ob.distance(rec.actual.pose.head<2>()));
    }
  }
  if (c.min_clearance < sc.footprint_radius - 1e-9) {
    os << "hull collision: clearance " << c.min_clearance
       << " m is below the footprint radius " << sc.footprint_radius << " m";
    c.failures.push_back(os.str());
    os.str("");
  }

  Box3 ws = sc.workspace;
  for (int i = 0; i < 2; ++i) {
    ws[i] = Interval{ws[i].lo + sc.footprint_radius - 1e-9,
                     ws[i].hi - sc.footprint_radius + 1e-9};
  }
  long outside_ws = 0;
  long outside_vel = 0;
  for (const RunRecord& rec : log.records) {
    if (!pose_box_contains(ws, rec.actual.pose)) ++outside_ws;
    for (int i = 0; i < 3; ++i) {
      const Interval& iv = sc.velocity_box[i];
      if (rec.actual.vel[i] < iv.lo - 1e-9 || rec.actual.vel[i] > iv.hi + 1e-9) {
        ++outside_vel;
        break;
      }
    }
  }
  if (outside_ws > 0) {
    os << "vehicle left the workspace (hull margin) on " << outside_ws
       << " of " << log.records.size() << " samples";
    c.failures.push_back(os.str());
    os.str("");
  }
  if (outside_vel > 0) {
    os << "vehicle velocity left the operating envelope on " << outside_vel
       << " of " << log.records.size() << " samples";
    c.failures.push_back(os.str());
    os.str("");
  }

  // (4) Energy decrease: wherever the certified rate bound is strictly
  // negative at both ends of a step, V must not grow across it.
  const ELModel& m = sc.model;
  for (size_t k = 0; k + 1 < log.records.size(); ++k) {
    const auto rate_at = [&](const RunRecord& rec) {
      const Vec3 ep = rec.actual.pose - rec.nominal.pose;
      const Vec3 ev = rec.actual.vel - rec.nominal.vel;
      const Vec3 d_eff = theta(m, rec.actual.pose) * rec.d;
      return lyapunov_rate(ep, ev, d_eff, sc.gains);
    };
    if (rate_at(log.records[k]) < 0.0 && rate_at(log.records[k + 1]) < 0.0) {
      const double v0 = log.records[k].lyapunov;
      const double v1 = log.records[k + 1].lyapunov;
      if (v1 - v0 > 1e-6 * v0 + 1e-12) ++c.lyapunov_violations;
    }
  }
  if (c.lyapunov_violations > 0) {
    os << "Lyapunov function increased on " << c.lyapunov_violations
       << " steps where its certified rate bound was strictly negative";
    c.failures.push_back(os.str());
    os.str("");
  }

  // (5) Commanded torque inside the original actuator box.
  for (const RunRecord& rec : log.records) {
    for (int i = 0; i < 3; ++i) {
      const Interval& iv = sc.torque_box[i];
      const double tol = 1e-9 * std::max({1.0, std::abs(iv.lo), std::abs(iv.hi)});
      if (rec.tau[i] < iv.lo - tol || rec.tau[i] > iv.hi + tol) {
        ++c.torque_violations;
        break;
      }
    }
  }
  if (c.torque_violations > 0) {
    os << "commanded torque left the actuator box on " << c.torque_violations
       << " of " << log.records.size() << " samples";
    c.failures.push_back(os.str());
    os.str("");
  }

  c.pass = c.failures.empty();
  return c;
}

json certification_json(const Certification& c) {
  json j;
  j["pass"] = c.pass;
  j["failures"] = c.failures;
  j["max_err_pos"] = c.max_err_pos;
  j["max_err_vel"] = c.max_err_vel;
  j["terminal_err_pos"] = c.terminal_err_pos;
  j["r_pos"] = c.r_pos;
  j["r_vel"] = c.r_vel;
  if (std::isfinite(c.min_clearance)) j["min_clearance"] = c.min_clearance;
  j["required_clearance"] = c.required_clearance;
  j["lyapunov_violations"] = c.lyapunov_violations;
  j["torque_violations"] = c.torque_violations;
  j["max_disturbance_wnorm"] = c.max_disturbance_wnorm;
  return j;
}

void write_run_csv(const RunLog& log, const std::filesystem::path& path) {
  std::string out =
      "t,x1_ref,x2_ref,x3_ref,xd1_ref,xd2_ref,xd3_ref,"
      "x1,x2,x3,xd1,xd2,xd3,tau1,tau2,tau3,d1,d2,d3,V\n";
  char line[1024];
  for (const RunRecord& r : log.records) {
    std::snprintf(line, sizeof(line),
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  r.t, r.nominal.pose[0], r.nominal.pose[1], r.nominal.pose[2],
                  r.nominal.vel[0], r.nominal.vel[1], r.nominal.vel[2],
                  r.actual.pose[0], r.actual.pose[1], r.actual.pose[2],
                  r.actual.vel[0], r.actual.vel[1], r.actual.vel[2], r.tau[0],
                  r.tau[1], r.tau[2], r.d[0], r.d[1], r.d[2], r.lyapunov);
    out += line;
  }
  write_text_file(path, out);
}

double closed_loop_equivalence_gap(const Plan& plan, const Scenario& sc,
                                   const DisturbanceFn& dfn, double dt,
                                   double horizon) {
  const ELModel& m = sc.model;
  const Gains& g = sc.gains;

  const AccelFn plant_accel = [&](double t, const State& s) {
    return forward_dynamics(m, s.pose, s.vel,
                            tracking_torque(m, g, plan, t, s), dfn(t));
  };
  // The same closed loop in error coordinates: a linear spring-damper driven
  // by the transformed disturbance.
  const AccelFn error_accel = [&](double t, const State& e) {
    const ReferencePoint ref = eval_plan(plan, t);
    return (-g.k1 * g.k2 * e.pose - (g.k1 + g.k2) * e.vel +
            theta(m, ref.state.pose + e.pose) * dfn(t))
        .eval();
  };

  State x = eval_plan(plan, 0.0).state;
  State e{Vec3::Zero(), Vec3::Zero()};
  const auto steps = static_cast<long>(std::llround(horizon / dt));
  double gap = 0.0;
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    x = integrate_step(x, plant_accel, t, dt);
    e = integrate_step(e, error_accel, t, dt);
    const ReferencePoint ref = eval_plan(plan, (k + 1) * dt);
    gap = std::max(gap, ((x.pose - ref.state.pose) - e.pose).norm());
    gap = std::max(gap, ((x.vel - ref.state.vel) - e.vel).norm());
  }
  return gap;
}

}  // namespace tubeplan

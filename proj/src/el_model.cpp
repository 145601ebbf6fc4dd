#include "tubeplan/el_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "tubeplan/io.hpp"

namespace tubeplan {

Mat3 ELModel::coriolis(const Vec3& q) const {
  const double cv = coriolis_coeffs[0];
  const double cr = coriolis_coeffs[1];
  const double cu = coriolis_coeffs[2];
  const double a = cv * q[1] + cr * q[2];
  const double b = cu * q[0];
  Mat3 c;
  c << 0.0, 0.0, -a,
       0.0, 0.0, b,
       a, -b, 0.0;
  return c;
}

Mat3 ELModel::drag(const Vec3& q) const {
  Mat3 f = drag_linear;
  f(0, 0) += drag_quadratic[0] * std::abs(q[0]);
  f(1, 1) += drag_quadratic[1] * std::abs(q[1]);
  f(2, 2) += drag_quadratic[2] * std::abs(q[2]);
  return f;
}

void ELModel::validate_and_cache() {
  if (!finite(inertia) || !finite(drag_linear) || !finite(coriolis_coeffs) ||
      !finite(drag_quadratic)) {
    throw ModelValidityError("model '" + name + "': non-finite parameter");
  }
  if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw ModelValidityError("model '" + name + "': inertia matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
  const Vec3 ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) {
    std::ostringstream os;
    os << "model '" << name << "': inertia matrix is not positive definite"
       << " (min eigenvalue " << ev.minCoeff() << ")";
    throw ModelValidityError(os.str());
  }
  if ((drag_quadratic.array() < 0.0).any()) {
    throw ModelValidityError("model '" + name + "': quadratic drag gains must be >= 0");
  }
  inertia_inv = inertia.inverse();
  inertia_norm = ev.maxCoeff();
  inertia_inv_norm = 1.0 / ev.minCoeff();
}

Mat3 rotation(double heading) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  Mat3 j;
  j << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return j;
}

Mat3 rotation_rate(double heading, double yaw_rate) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  Mat3 dj;
  dj << -s, -c, 0.0,
        c, -s, 0.0,
        0.0, 0.0, 0.0;
  return dj * yaw_rate;
}

Vec3 phi(const ELModel& m, const Vec3& pose, const Vec3& vel) {
  const Mat3 j = rotation(pose[2]);
  const Mat3 jinv = j.transpose();  // J is orthogonal
  const Vec3 q = jinv * vel;        // body velocities

  const Mat3 jdot = rotation_rate(pose[2], vel[2]);
  const Mat3 mstar = j * m.inertia * jinv;
  const Mat3 vmstar = j * (m.coriolis(q) - m.inertia * jinv * jdot) * jinv;
  const Mat3 fstar = j * m.drag(q) * jinv;

  // G == 0 for a surface vessel (no gravity/buoyancy terms in the plane).
  return -(mstar.llt().solve((vmstar + fstar) * vel));
}

Mat3 theta(const ELModel& m, const Vec3& pose) {
  const Mat3 j = rotation(pose[2]);
  const Mat3 jinv = j.transpose();
  const Mat3 mstar = j * m.inertia * jinv;
  return mstar.llt().solve(j);  // Mstar^-1 J^-T, with J^-T = J
}

Mat3 theta_inverse(const ELModel& m, const Vec3& pose) {
  return m.inertia * rotation(pose[2]).transpose();
}

Vec3 forward_dynamics(const ELModel& m, const Vec3& pose, const Vec3& vel,
                      const Vec3& tau, const Vec3& disturbance) {
  return phi(m, pose, vel) + theta(m, pose) * (tau + disturbance);
}

Vec3 transformed_input(const ELModel& m, const Vec3& pose, const Vec3& vel,
                       const Vec3& accel) {
  return accel - phi(m, pose, vel);
}

Vec3 inverse_dynamics(const ELModel& m, const Vec3& pose, const Vec3& vel,
                      const Vec3& accel) {
  return theta_inverse(m, pose) * transformed_input(m, pose, vel, accel);
}

State integrate_step(const State& s, const AccelFn& accel, double t, double dt) {
  // Classical RK4 on y = (pose, vel), ydot = (vel, accel(t, y)).
  const auto f = [&accel](double tt, const State& y) -> State {
    State d;
    d.pose = y.vel;
    d.vel = accel(tt, y);
    return d;
  };
  const auto axpy = [](const State& y, const State& d, double h) -> State {
    State r;
    r.pose = y.pose + h * d.pose;
    r.vel = y.vel + h * d.vel;
    return r;
  };

  const State k1 = f(t, s);
  const State k2 = f(t + 0.5 * dt, axpy(s, k1, 0.5 * dt));
  const State k3 = f(t + 0.5 * dt, axpy(s, k2, 0.5 * dt));
  const State k4 = f(t + dt, axpy(s, k3, dt));

  State out;
  out.pose = s.pose + (dt / 6.0) * (k1.pose + 2.0 * k2.pose + 2.0 * k3.pose + k4.pose);
  out.vel = s.vel + (dt / 6.0) * (k1.vel + 2.0 * k2.vel + 2.0 * k3.vel + k4.vel);
  if (!finite(out.pose) || !finite(out.vel)) {
    throw IntegrationError("integration diverged: non-finite state");
  }
  return out;
}

// ---- model file I/O ----------------------------------------------------

namespace {

Mat3 mat3_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(ctx + ": expected a 3x3 array");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const auto& row = j[static_cast<size_t>(r)];
    if (!row.is_array() || row.size() != 3) {
      throw ConfigError(ctx + ": expected a 3x3 array");
    }
    for (int c = 0; c < 3; ++c) {
      m(r, c) = row[static_cast<size_t>(c)].get<double>();
    }
  }
  return m;
}

Vec3 vec3_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(ctx + ": expected a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json mat3_to_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
  }
  return rows;
}

json vec3_to_json(const Vec3& v) { return json{v[0], v[1], v[2]}; }

json model_to_json(const ELModel& m) {
  json j;
  j["name"] = m.name;
  j["M"] = mat3_to_json(m.inertia);
  j["Vm_coeffs"] = vec3_to_json(m.coriolis_coeffs);
  j["F_coeffs"] = {{"linear", mat3_to_json(m.drag_linear)},
                   {"quadratic", vec3_to_json(m.drag_quadratic)}};
  return j;
}

}  // namespace

ELModel load_model(const std::filesystem::path& path) {
  const json j = load_json_file(path);
  const std::string ctx = "model file " + path.string();
  try {
    ELModel m;
    m.name = require_key(j, "name", ctx).get<std::string>();
    m.inertia = mat3_from_json(require_key(j, "M", ctx), ctx + " key M");
    m.coriolis_coeffs =
        vec3_from_json(require_key(j, "Vm_coeffs", ctx), ctx + " key Vm_coeffs");
    const json& f = require_key(j, "F_coeffs", ctx);
    m.drag_linear =
        mat3_from_json(require_key(f, "linear", ctx), ctx + " key F_coeffs.linear");
    m.drag_quadratic = vec3_from_json(require_key(f, "quadratic", ctx),
                                      ctx + " key F_coeffs.quadratic");
    m.validate_and_cache();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(ctx + ": " + e.what());
  }
}

void save_model(const ELModel& m, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(m).dump(2) + "\n");
}

std::string model_canonical_json(const ELModel& m) { return model_to_json(m).dump(); }

std::string model_hash(const ELModel& m) {
  return hash_hex(fnv1a64(model_canonical_json(m)));
}

}  // namespace tubeplan

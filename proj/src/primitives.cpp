#include "tubeplan/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tubeplan/io.hpp"

namespace tubeplan {

void LatticeSpec::validate() const {
  if (!(cell > 0.0) || !std::isfinite(cell)) {
    throw ConfigError("lattice: cell pitch must be positive and finite");
  }
  if (n_headings < 4 || n_headings % 4 != 0) {
    throw ConfigError("lattice: n_headings must be a positive multiple of 4");
  }
  if (speeds.empty() || speeds.front() != 0.0) {
    throw ConfigError("lattice: speeds must start at 0");
  }
  for (size_t i = 0; i < speeds.size(); ++i) {
    if (!std::isfinite(speeds[i]) || speeds[i] < 0.0) {
      throw ConfigError("lattice: speeds must be finite and non-negative");
    }
    if (i > 0 && !(speeds[i] > speeds[i - 1])) {
      throw ConfigError("lattice: speeds must be strictly increasing");
    }
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("lattice: dt must be positive");
  }
  const double sps = 1.0 / dt;
  if (std::abs(sps - std::round(sps)) > 1e-9 || std::round(sps) < 1.0) {
    throw ConfigError(
        "lattice: dt must divide one second (durations are whole seconds)");
  }
  if (max_duration < 1) {
    throw ConfigError("lattice: max_duration must be at least 1 second");
  }
  if (!(effort_weight >= 0.0) || !std::isfinite(effort_weight)) {
    throw ConfigError("lattice: effort_weight must be non-negative");
  }
}

int LatticeSpec::samples_per_second() const {
  return static_cast<int>(std::round(1.0 / dt));
}

double heading_angle(int heading_index, int n_headings) {
  const int wrapped = ((heading_index % n_headings) + n_headings) % n_headings;
  return wrap_angle(wrapped * (2.0 * M_PI / n_headings));
}

std::vector<TemplateEdge> default_template(const LatticeSpec& spec,
                                           int heading_class) {
  spec.validate();
  if (spec.n_headings != 8) {
    throw ConfigError("default template is defined for 8 headings");
  }
  if (heading_class != 0 && heading_class != 1) {
    throw ConfigError("heading class must be 0 (axis) or 1 (diagonal)");
  }
  if (spec.speeds.size() < 2) {
    throw ConfigError("default template needs at least one non-zero speed");
  }
  const int c = 1;  // cruise speed index
  const int f = spec.speeds.size() >= 3 ? 2 : 1;  // fast speed index

  const auto E = [](int dx, int dy, int dh, int s0, int s1) {
    TemplateEdge e;
    e.displacement = Eigen::Vector2i(dx, dy);
    e.dheading = dh;
    e.speed_from = s0;
    e.speed_to = s1;
    return e;
  };

  std::vector<TemplateEdge> edges;
  if (heading_class == 0) {
    // Straights along +x with adjacent speed transitions.
    edges.push_back(E(1, 0, 0, 0, c));
    edges.push_back(E(1, 0, 0, c, c));
    edges.push_back(E(1, 0, 0, c, 0));
    if (f != c) {
      edges.push_back(E(1, 0, 0, c, f));
      edges.push_back(E(1, 0, 0, f, f));
      edges.push_back(E(1, 0, 0, f, c));
    }
    edges.push_back(E(2, 0, 0, f, f));  // long cruise straight
    // 45-degree turns, standard and tight.
    edges.push_back(E(2, 1, 1, c, c));
    edges.push_back(E(2, -1, -1, c, c));
    edges.push_back(E(1, 1, 1, c, c));
    edges.push_back(E(1, -1, -1, c, c));
    // 90-degree turns: tight, wide, and wide at the top speed.
    edges.push_back(E(1, 1, 2, c, c));
    edges.push_back(E(1, -1, -2, c, c));
    edges.push_back(E(2, 2, 2, c, c));
    edges.push_back(E(2, -2, -2, c, c));
    if (f != c) {
      edges.push_back(E(2, 2, 2, f, f));
      edges.push_back(E(2, -2, -2, f, f));
    }
  } else {
    // Straights along the diagonal.
    edges.push_back(E(1, 1, 0, 0, c));
    edges.push_back(E(1, 1, 0, c, c));
    edges.push_back(E(1, 1, 0, c, 0));
    if (f != c) {
      edges.push_back(E(1, 1, 0, c, f));
      edges.push_back(E(1, 1, 0, f, f));
      edges.push_back(E(1, 1, 0, f, c));
    }
    edges.push_back(E(2, 2, 0, f, f));
    edges.push_back(E(1, 2, 1, c, c));
    edges.push_back(E(2, 1, -1, c, c));
    edges.push_back(E(0, 1, 1, c, c));
    edges.push_back(E(1, 0, -1, c, c));
    edges.push_back(E(0, 1, 2, c, c));
    edges.push_back(E(1, 0, -2, c, c));
    edges.push_back(E(0, 2, 2, c, c));
    edges.push_back(E(2, 0, -2, c, c));
    if (f != c) {
      edges.push_back(E(0, 2, 2, f, f));
      edges.push_back(E(2, 0, -2, f, f));
    }
  }
  return edges;
}

Eigen::Matrix<double, 6, 1> quintic_coeffs(double p0, double v0, double p1,
                                           double v1, double T) {
  // Boundary accelerations are pinned to zero so consecutive primitives join
  // with continuous acceleration.
  const double dp = p1 - p0 - v0 * T;
  const double dv = v1 - v0;
  Eigen::Matrix<double, 6, 1> c;
  c[0] = p0;
  c[1] = v0;
  c[2] = 0.0;
  c[3] = (10.0 * dp - 4.0 * dv * T) / (T * T * T);
  c[4] = (-15.0 * dp + 7.0 * dv * T) / (T * T * T * T);
  c[5] = (6.0 * dp - 3.0 * dv * T) / (T * T * T * T * T);
  return c;
}

namespace {

double poly_eval(const Eigen::Matrix<double, 6, 1>& c, double t) {
  double acc = 0.0;
  for (int i = 5; i >= 0; --i) acc = acc * t + c[i];
  return acc;
}

double poly_eval_d1(const Eigen::Matrix<double, 6, 1>& c, double t) {
  double acc = 0.0;
  for (int i = 5; i >= 1; --i) acc = acc * t + i * c[i];
  return acc;
}

double poly_eval_d2(const Eigen::Matrix<double, 6, 1>& c, double t) {
  double acc = 0.0;
  for (int i = 5; i >= 2; --i) acc = acc * t + i * (i - 1) * c[i];
  return acc;
}

}  // namespace

State quintic_state(const Eigen::Matrix<double, 3, 6>& coeffs, double t) {
  State s;
  for (int axis = 0; axis < 3; ++axis) {
    const Eigen::Matrix<double, 6, 1> c = coeffs.row(axis);
    s.pose[axis] = poly_eval(c, t);
    s.vel[axis] = poly_eval_d1(c, t);
  }
  return s;
}

Vec3 quintic_accel(const Eigen::Matrix<double, 3, 6>& coeffs, double t) {
  Vec3 a;
  for (int axis = 0; axis < 3; ++axis) {
    a[axis] = poly_eval_d2(coeffs.row(axis), t);
  }
  return a;
}

State MotionPrimitive::eval(double t) const { return quintic_state(coeffs, t); }

Vec3 MotionPrimitive::eval_accel(double t) const {
  return quintic_accel(coeffs, t);
}

void sample_primitive(const ELModel& m, const LatticeSpec& spec,
                      MotionPrimitive& prim) {
  const int sps = spec.samples_per_second();
  const int steps = static_cast<int>(std::llround(prim.duration)) * sps;
  prim.samples.clear();
  prim.accels.clear();
  prim.torques.clear();
  prim.samples.reserve(steps + 1);
  prim.accels.reserve(steps + 1);
  prim.torques.reserve(steps + 1);
  prim.max_planar_speed = 0.0;

  double effort = 0.0;
  double prev_tau2 = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / sps;
    const State s = prim.eval(t);
    const Vec3 a = prim.eval_accel(t);
    const Vec3 tau = inverse_dynamics(m, s.pose, s.vel, a);
    if (!finite(s.pose) || !finite(s.vel) || !finite(a) || !finite(tau)) {
      throw ModelValidityError("primitive sampling produced non-finite values");
    }
    prim.samples.push_back(s);
    prim.accels.push_back(a);
    prim.torques.push_back(tau);
    prim.max_planar_speed =
        std::max(prim.max_planar_speed, s.vel.head<2>().norm());
    const double tau2 = tau.squaredNorm();
    if (k > 0) effort += 0.5 * (prev_tau2 + tau2) * spec.dt;
    prev_tau2 = tau2;
  }
  prim.cost = prim.duration + spec.effort_weight * effort;
}

bool primitive_within(const MotionPrimitive& prim, const ConstraintSets& sets) {
  for (size_t k = 0; k < prim.samples.size(); ++k) {
    const Vec3& v = prim.samples[k].vel;
    const Vec3& tau = prim.torques[k];
    for (int i = 0; i < 3; ++i) {
      if (!sets.velocity_tight[i].contains(v[i])) return false;
      if (!sets.torque_tight[i].contains(tau[i])) return false;
    }
  }
  return true;
}

namespace {

// Worst box-utilization ratio across samples, for diagnostics.
double utilization(const Interval& iv, double x) {
  const double mid = 0.5 * (iv.lo + iv.hi);
  const double half = 0.5 * iv.width();
  if (half <= 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(x - mid) / half;
}

std::string edge_label(const TemplateEdge& e, int heading_from) {
  std::ostringstream os;
  os << "edge d=(" << e.displacement.x() << "," << e.displacement.y()
     << ") dh=" << e.dheading << " speeds " << e.speed_from << "->"
     << e.speed_to << " from heading " << heading_from;
  return os.str();
}

}  // namespace

MotionPrimitive generate_primitive_at(const ELModel& m, const LatticeSpec& spec,
                                      const ConstraintSets& sets,
                                      const TemplateEdge& edge, int heading_from,
                                      int duration) {
  spec.validate();
  if (duration < 1) throw ConfigError("primitive duration must be >= 1 s");
  const int ns = static_cast<int>(spec.speeds.size());
  if (edge.speed_from < 0 || edge.speed_from >= ns || edge.speed_to < 0 ||
      edge.speed_to >= ns) {
    throw ConfigError("template edge speed index out of range");
  }

  MotionPrimitive prim;
  prim.heading_from =
      ((heading_from % spec.n_headings) + spec.n_headings) % spec.n_headings;
  prim.heading_to =
      ((prim.heading_from + edge.dheading) % spec.n_headings + spec.n_headings) %
      spec.n_headings;
  prim.speed_from = edge.speed_from;
  prim.speed_to = edge.speed_to;
  prim.displacement = edge.displacement;
  prim.duration = duration;

  const double th0 = heading_angle(prim.heading_from, spec.n_headings);
  const double th1 = th0 + edge.dheading * (2.0 * M_PI / spec.n_headings);
  const double s0 = spec.speeds[edge.speed_from];
  const double s1 = spec.speeds[edge.speed_to];
  const Vec2 p1 = spec.cell * edge.displacement.cast<double>();
  const Vec2 v0 = s0 * Vec2(std::cos(th0), std::sin(th0));
  const Vec2 v1 = s1 * Vec2(std::cos(th1), std::sin(th1));

  const double T = duration;
  prim.coeffs.row(0) = quintic_coeffs(0.0, v0.x(), p1.x(), v1.x(), T);
  prim.coeffs.row(1) = quintic_coeffs(0.0, v0.y(), p1.y(), v1.y(), T);
  prim.coeffs.row(2) = quintic_coeffs(th0, 0.0, th1, 0.0, T);

  sample_primitive(m, spec, prim);

  if (!primitive_within(prim, sets)) {
    double worst_v = 0.0, worst_tau = 0.0;
    for (size_t k = 0; k < prim.samples.size(); ++k) {
      for (int i = 0; i < 3; ++i) {
        worst_v = std::max(
            worst_v, utilization(sets.velocity_tight[i], prim.samples[k].vel[i]));
        worst_tau = std::max(
            worst_tau, utilization(sets.torque_tight[i], prim.torques[k][i]));
      }
    }
    std::ostringstream os;
    os << edge_label(edge, heading_from) << " infeasible at T=" << duration
       << " s: tightened-box utilization velocity " << worst_v << ", torque "
       << worst_tau;
    throw InfeasiblePrimitiveError(os.str());
  }
  return prim;
}

MotionPrimitive generate_primitive(const ELModel& m, const LatticeSpec& spec,
                                   const ConstraintSets& sets,
                                   const TemplateEdge& edge, int heading_from) {
  std::string last_reason;
  for (int T = 1; T <= spec.max_duration; ++T) {
    try {
      return generate_primitive_at(m, spec, sets, edge, heading_from, T);
    } catch (const InfeasiblePrimitiveError& err) {
      last_reason = err.what();
    }
  }
  throw InfeasiblePrimitiveError(
      edge_label(edge, heading_from) + ": no feasible duration up to " +
      std::to_string(spec.max_duration) + " s (last: " + last_reason + ")");
}

MotionPrimitive rotate_primitive(const MotionPrimitive& prim, int quarter_turns,
                                 const LatticeSpec& spec) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return prim;
  const int shift = k * spec.n_headings / 4;

  // Exact quarter-turn of a planar pair: only sign flips and swaps.
  const auto rot2 = [k](double x, double y) {
    switch (k) {
      case 1: return Vec2(-y, x);
      case 2: return Vec2(-x, -y);
      default: return Vec2(y, -x);  // k == 3
    }
  };
  const auto rot2i = [k](const Eigen::Vector2i& v) {
    switch (k) {
      case 1: return Eigen::Vector2i(-v.y(), v.x());
      case 2: return Eigen::Vector2i(-v.x(), -v.y());
      default: return Eigen::Vector2i(v.y(), -v.x());
    }
  };

  MotionPrimitive out = prim;
  out.heading_from = (prim.heading_from + shift) % spec.n_headings;
  out.heading_to = (prim.heading_to + shift) % spec.n_headings;
  out.displacement = rot2i(prim.displacement);

  // Heading samples shift by the exact difference of canonical angles, so the
  // rotated primitive starts bitwise-equal to its node's canonical heading.
  const double dth = heading_angle(out.heading_from, spec.n_headings) -
                     heading_angle(prim.heading_from, spec.n_headings);

  for (int j = 0; j < 6; ++j) {
    const Vec2 r = rot2(prim.coeffs(0, j), prim.coeffs(1, j));
    out.coeffs(0, j) = r.x();
    out.coeffs(1, j) = r.y();
  }
  out.coeffs(2, 0) = prim.coeffs(2, 0) + dth;

  for (size_t i = 0; i < prim.samples.size(); ++i) {
    const Vec2 p = rot2(prim.samples[i].pose[0], prim.samples[i].pose[1]);
    const Vec2 v = rot2(prim.samples[i].vel[0], prim.samples[i].vel[1]);
    const Vec2 a = rot2(prim.accels[i][0], prim.accels[i][1]);
    out.samples[i].pose = Vec3(p.x(), p.y(), prim.samples[i].pose[2] + dth);
    out.samples[i].vel = Vec3(v.x(), v.y(), prim.samples[i].vel[2]);
    out.accels[i] = Vec3(a.x(), a.y(), prim.accels[i][2]);
    // Body-frame torques are invariant under a world-frame rotation.
    out.torques[i] = prim.torques[i];
  }
  return out;
}

const std::vector<int>& PrimitiveLibrary::outgoing(int heading, int speed) const {
  const int ns = static_cast<int>(spec.speeds.size());
  return by_start.at(static_cast<size_t>(heading) * ns + speed);
}

namespace {

void index_library(PrimitiveLibrary& lib) {
  const int ns = static_cast<int>(lib.spec.speeds.size());
  lib.by_start.assign(static_cast<size_t>(lib.spec.n_headings) * ns, {});
  lib.max_planar_speed = 0.0;
  for (size_t i = 0; i < lib.prims.size(); ++i) {
    const MotionPrimitive& p = lib.prims[i];
    lib.by_start[static_cast<size_t>(p.heading_from) * ns + p.speed_from]
        .push_back(static_cast<int>(i));
    lib.max_planar_speed = std::max(lib.max_planar_speed, p.max_planar_speed);
  }
}

}  // namespace

PrimitiveLibrary build_library(const ELModel& m, const TubeSpec& tube,
                               const ConstraintSets& sets,
                               const LatticeSpec& spec) {
  spec.validate();
  PrimitiveLibrary lib;
  lib.spec = spec;
  lib.model_hash = model_hash(m);
  lib.tube_hash = tube_hash(tube);

  for (int cls = 0; cls < 2; ++cls) {
    std::vector<MotionPrimitive> canonical;
    for (const TemplateEdge& edge : default_template(spec, cls)) {
      try {
        canonical.push_back(generate_primitive(m, spec, sets, edge, cls));
      } catch (const InfeasiblePrimitiveError& err) {
        lib.dropped.push_back(err.what());
      }
    }
    for (const MotionPrimitive& prim : canonical) {
      for (int k = 0; k < 4; ++k) {
        MotionPrimitive rotated = rotate_primitive(prim, k, spec);
        if (k > 0 && !primitive_within(rotated, sets)) {
          // Asymmetric velocity boxes can rule out a rotated copy.
          lib.dropped.push_back(
              "rotated copy (quarter turns " + std::to_string(k) +
              ") of a feasible primitive violates the tightened boxes");
          continue;
        }
        // Exact symmetry: rotation must preserve duration and cost bitwise.
        if (rotated.duration != prim.duration || rotated.cost != prim.cost) {
          throw SymmetryError("rotated primitive changed duration or cost");
        }
        lib.prims.push_back(std::move(rotated));
      }
    }
  }

  index_library(lib);

  const int ns = static_cast<int>(spec.speeds.size());
  for (int h = 0; h < spec.n_headings; ++h) {
    for (int s = 0; s < ns; ++s) {
      if (lib.outgoing(h, s).empty()) {
        std::ostringstream os;
        os << "no feasible primitive leaves heading " << h << " at speed index "
           << s << " (" << spec.speeds[s] << " m/s)";
        throw EmptyClassError(os.str());
      }
    }
  }
  return lib;
}

double resimulation_gap(const ELModel& m, const Gains& gains,
                        const LatticeSpec& spec, const MotionPrimitive& prim) {
  // Closed-loop replay: track the primitive's quintic reference with the
  // controller, zero disturbance, zero initial error. Open-loop rollout is
  // not an option here -- with Munk-moment coupling the sway/yaw dynamics
  // are unstable at forward speed, so feedforward-only integration of a turn
  // diverges even from perfectly consistent data. Tracking from zero error
  // must reproduce the stored samples to machine precision, while edited
  // coefficients, a different model, or a botched rotation shift the
  // reference itself and still produce a visible gap.
  const AccelFn accel = [&](double t, const State& s) {
    const double tc = std::clamp(t, 0.0, prim.duration);
    const State ref = prim.eval(tc);
    const Vec3 ref_acc = prim.eval_accel(tc);
    const State err{s.pose - ref.pose, s.vel - ref.vel};
    const Vec3 vtilde = feedback_control(err, ref, gains, m);
    const Vec3 vbar = ref_acc - phi(m, ref.pose, ref.vel);
    const Vec3 tau = theta_inverse(m, s.pose) * (vbar + vtilde);
    return forward_dynamics(m, s.pose, s.vel, tau, Vec3::Zero());
  };

  State s = prim.samples.front();
  double gap = 0.0;
  const int sps = spec.samples_per_second();
  for (size_t k = 1; k < prim.samples.size(); ++k) {
    const double t0 = static_cast<double>(k - 1) / sps;
    s = integrate_step(s, accel, t0, spec.dt);
    gap = std::max(gap,
                   (s.pose.head<2>() - prim.samples[k].pose.head<2>()).norm());
  }
  return gap;
}

void validate_library(const ELModel& m, const Gains& gains,
                      const PrimitiveLibrary& lib, double tol_m) {
  lib.spec.validate();
  gains.validate();
  for (const MotionPrimitive& prim : lib.prims) {
    const double gap = resimulation_gap(m, gains, lib.spec, prim);
    if (!(gap <= tol_m)) {
      std::ostringstream os;
      os << "primitive re-simulation deviates by " << gap << " m (tolerance "
         << tol_m << "): heading " << prim.heading_from << " d=("
         << prim.displacement.x() << "," << prim.displacement.y() << ") dh "
         << prim.heading_to - prim.heading_from;
      throw StaleLibraryError(os.str());
    }
  }
}

namespace {

json spec_to_json(const LatticeSpec& s) {
  json j;
  j["cell"] = s.cell;
  j["n_headings"] = s.n_headings;
  j["speeds"] = s.speeds;
  j["dt"] = s.dt;
  j["max_duration"] = s.max_duration;
  j["effort_weight"] = s.effort_weight;
  return j;
}

LatticeSpec spec_from_json(const json& j) {
  LatticeSpec s;
  const std::string ctx = "lattice spec";
  s.cell = require_key(j, "cell", ctx).get<double>();
  s.n_headings = require_key(j, "n_headings", ctx).get<int>();
  s.speeds = require_key(j, "speeds", ctx).get<std::vector<double>>();
  s.dt = require_key(j, "dt", ctx).get<double>();
  s.max_duration = require_key(j, "max_duration", ctx).get<int>();
  s.effort_weight = require_key(j, "effort_weight", ctx).get<double>();
  s.validate();
  return s;
}

}  // namespace

void save_library(const PrimitiveLibrary& lib, const std::filesystem::path& path) {
  json j;
  j["format"] = "tubeplan-primitive-library";
  j["version"] = 1;
  j["model_hash"] = lib.model_hash;
  j["tube_hash"] = lib.tube_hash;
  j["spec"] = spec_to_json(lib.spec);
  j["dropped"] = lib.dropped;
  json prims = json::array();
  for (const MotionPrimitive& p : lib.prims) {
    json e;
    e["heading_from"] = p.heading_from;
    e["heading_to"] = p.heading_to;
    e["speed_from"] = p.speed_from;
    e["speed_to"] = p.speed_to;
    e["displacement"] = {p.displacement.x(), p.displacement.y()};
    e["duration"] = p.duration;
    e["cost"] = p.cost;
    std::vector<double> c(18);
    for (int r = 0; r < 3; ++r) {
      for (int q = 0; q < 6; ++q) c[r * 6 + q] = p.coeffs(r, q);
    }
    e["coeffs"] = c;
    prims.push_back(std::move(e));
  }
  j["primitives"] = std::move(prims);
  write_text_file(path, j.dump(2) + "\n");
}

PrimitiveLibrary load_library(const std::filesystem::path& path, const ELModel& m,
                              const TubeSpec& tube) {
  const json j = load_json_file(path);
  const std::string ctx = "primitive library";
  if (require_key(j, "format", ctx).get<std::string>() !=
      "tubeplan-primitive-library") {
    throw ConfigError("not a primitive library file: " + path.string());
  }
  if (require_key(j, "version", ctx).get<int>() != 1) {
    throw ConfigError("unsupported primitive library version");
  }

  PrimitiveLibrary lib;
  lib.model_hash = require_key(j, "model_hash", ctx).get<std::string>();
  lib.tube_hash = require_key(j, "tube_hash", ctx).get<std::string>();
  if (lib.model_hash != model_hash(m)) {
    throw StaleLibraryError(
        "library was generated for a different vehicle model (hash " +
        lib.model_hash + " vs " + model_hash(m) + "); rebuild it");
  }
  if (lib.tube_hash != tube_hash(tube)) {
    throw StaleLibraryError(
        "library was generated for a different tube certificate (hash " +
        lib.tube_hash + " vs " + tube_hash(tube) + "); rebuild it");
  }
  lib.spec = spec_from_json(require_key(j, "spec", ctx));
  if (j.contains("dropped")) {
    lib.dropped = j.at("dropped").get<std::vector<std::string>>();
  }

  for (const json& e : require_key(j, "primitives", ctx)) {
    MotionPrimitive p;
    p.heading_from = require_key(e, "heading_from", ctx).get<int>();
    p.heading_to = require_key(e, "heading_to", ctx).get<int>();
    p.speed_from = require_key(e, "speed_from", ctx).get<int>();
    p.speed_to = require_key(e, "speed_to", ctx).get<int>();
    const auto d = require_key(e, "displacement", ctx).get<std::vector<int>>();
    if (d.size() != 2) throw ConfigError("primitive displacement must be 2-d");
    p.displacement = Eigen::Vector2i(d[0], d[1]);
    p.duration = require_key(e, "duration", ctx).get<double>();
    const double stored_cost = require_key(e, "cost", ctx).get<double>();
    const auto c = require_key(e, "coeffs", ctx).get<std::vector<double>>();
    if (c.size() != 18) throw ConfigError("primitive coeffs must have 18 entries");
    for (int r = 0; r < 3; ++r) {
      for (int q = 0; q < 6; ++q) p.coeffs(r, q) = c[r * 6 + q];
    }
    sample_primitive(m, lib.spec, p);
    // The sampled cost must reproduce the stored one; a mismatch means the
    // file was edited by hand or belongs to a different build.
    if (std::abs(p.cost - stored_cost) >
        1e-9 * std::max(1.0, std::abs(stored_cost))) {
      throw StaleLibraryError("stored primitive cost disagrees with rollout");
    }
    p.cost = stored_cost;
    lib.prims.push_back(std::move(p));
  }
  index_library(lib);
  return lib;
}

}  // namespace tubeplan

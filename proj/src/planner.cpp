#include "tubeplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "tubeplan/io.hpp"

namespace tubeplan {

bool operator==(const LatticeNode& a, const LatticeNode& b) {
  return a.ix == b.ix && a.iy == b.iy && a.heading == b.heading &&
         a.speed == b.speed;
}
bool operator!=(const LatticeNode& a, const LatticeNode& b) { return !(a == b); }
bool operator<(const LatticeNode& a, const LatticeNode& b) {
  return std::tie(a.ix, a.iy, a.heading, a.speed) <
         std::tie(b.ix, b.iy, b.heading, b.speed);
}

// ---- scenario ------------------------------------------------------------

namespace {

Interval interval_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(ctx + ": expected [lo, hi]");
  }
  Interval iv{j[0].get<double>(), j[1].get<double>()};
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo <= iv.hi)) {
    throw ConfigError(ctx + ": interval must be finite with lo <= hi");
  }
  return iv;
}

Box3 box_from_json(const json& j, const std::array<const char*, 3>& keys,
                   const std::string& ctx) {
  Box3 b;
  for (int i = 0; i < 3; ++i) {
    b[i] = interval_from_json(require_key(j, keys[static_cast<size_t>(i)], ctx),
                              ctx + "." + keys[static_cast<size_t>(i)]);
  }
  return b;
}

Vec3 vec3_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(ctx + ": expected an array of 3 numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

// Endpoint states are written as pose + body velocity (surge, sway, yaw
// rate); world velocity is J(heading) * body velocity.
State endpoint_from_json(const json& j, const std::string& ctx) {
  State s;
  s.pose = vec3_from_json(require_key(j, "pose", ctx), ctx + ".pose");
  const Vec3 q = vec3_from_json(require_key(j, "body_vel", ctx), ctx + ".body_vel");
  s.vel = rotation(s.pose[2]) * q;
  if (!finite(s.pose) || !finite(s.vel)) {
    throw ConfigError(ctx + ": endpoint state must be finite");
  }
  return s;
}

LatticeSpec lattice_from_json(const json& j, const std::string& ctx) {
  LatticeSpec s;
  s.cell = require_key(j, "cell", ctx).get<double>();
  s.n_headings = require_key(j, "n_headings", ctx).get<int>();
  s.speeds = require_key(j, "speeds", ctx).get<std::vector<double>>();
  s.dt = j.value("dt", s.dt);
  s.max_duration = j.value("max_duration", s.max_duration);
  s.effort_weight = j.value("effort_weight", s.effort_weight);
  return s;
}

}  // namespace

// Structural checks only. The gain inequality is deliberately left to
// compute_tube so a scenario with bad gains still parses (the CLI maps the
// two failures to different exit codes).
void Scenario::validate() const {
  const auto check_box = [](const Box3& b, const char* what) {
    for (int i = 0; i < 3; ++i) {
      if (!std::isfinite(b[i].lo) || !std::isfinite(b[i].hi) ||
          !(b[i].lo <= b[i].hi)) {
        throw ConfigError(std::string(what) +
                          " box must be finite with lo <= hi on every axis");
      }
    }
  };
  check_box(workspace, "workspace");
  check_box(velocity_box, "velocity");
  check_box(torque_box, "torque");
  disturbance.validate();
  for (const ConvexPolygon& p : obstacles) p.validate();
  if (!(footprint_radius >= 0.0) || !std::isfinite(footprint_radius)) {
    throw ConfigError("footprint_radius must be non-negative");
  }
  lattice.validate();
  if (!finite(start.pose) || !finite(start.vel) || !finite(goal.pose) ||
      !finite(goal.vel)) {
    throw ConfigError("start/goal states must be finite");
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  const json j = load_json_file(path);
  const std::string ctx = "scenario " + path.string();

  Scenario sc;
  sc.name = require_key(j, "name", ctx).get<std::string>();

  const std::filesystem::path rel =
      require_key(j, "model", ctx).get<std::string>();
  sc.model_path = rel.is_absolute() ? rel : path.parent_path() / rel;
  sc.model = load_model(sc.model_path);

  const json& jg = require_key(j, "gains", ctx);
  sc.gains.k1 = require_key(jg, "k1", ctx + ".gains").get<double>();
  sc.gains.k2 = require_key(jg, "k2", ctx + ".gains").get<double>();
  sc.gains.gamma = require_key(jg, "Gamma", ctx + ".gains").get<double>();

  const json& jd = require_key(j, "disturbance", ctx);
  sc.disturbance.w_sqrt_diag = vec3_from_json(
      require_key(jd, "W_sqrt", ctx + ".disturbance"), ctx + ".disturbance.W_sqrt");
  sc.disturbance.validate();

  sc.workspace = box_from_json(require_key(j, "workspace", ctx),
                               {"x1", "x2", "heading"}, ctx + ".workspace");
  sc.velocity_box = box_from_json(require_key(j, "velocity", ctx),
                                  {"x1", "x2", "yaw_rate"}, ctx + ".velocity");
  sc.torque_box = box_from_json(require_key(j, "torque", ctx),
                                {"surge", "sway", "yaw"}, ctx + ".torque");

  sc.footprint_radius = j.value("footprint_radius", 0.0);
  if (!(sc.footprint_radius >= 0.0) || !std::isfinite(sc.footprint_radius)) {
    throw ConfigError(ctx + ": footprint_radius must be non-negative");
  }

  sc.lattice = lattice_from_json(require_key(j, "lattice", ctx), ctx + ".lattice");
  sc.lattice.validate();

  if (j.contains("obstacles")) {
    for (const json& jo : j.at("obstacles")) {
      ConvexPolygon poly;
      for (const json& jv : jo) {
        if (!jv.is_array() || jv.size() != 2) {
          throw ConfigError(ctx + ": obstacle vertex must be [x, y]");
        }
        poly.vertices.emplace_back(jv[0].get<double>(), jv[1].get<double>());
      }
      poly.validate();
      sc.obstacles.push_back(std::move(poly));
    }
  }

  sc.start = endpoint_from_json(require_key(j, "start", ctx), ctx + ".start");
  sc.goal = endpoint_from_json(require_key(j, "goal", ctx), ctx + ".goal");

  if (j.contains("g_estimation")) {
    const json& je = j.at("g_estimation");
    sc.gcfg.heading_samples = je.value("heading_samples", sc.gcfg.heading_samples);
    sc.gcfg.velocity_samples =
        je.value("velocity_samples", sc.gcfg.velocity_samples);
    sc.gcfg.fd_step = je.value("fd_step", sc.gcfg.fd_step);
    sc.gcfg.safety = je.value("safety", sc.gcfg.safety);
  }
  sc.validate();
  return sc;
}

// ---- lattice snapping ----------------------------------------------------

State node_state(const LatticeNode& n, const LatticeSpec& spec) {
  const double th = heading_angle(n.heading, spec.n_headings);
  const double sp = spec.speeds.at(static_cast<size_t>(n.speed));
  State s;
  s.pose = Vec3(n.ix * spec.cell, n.iy * spec.cell, th);
  s.vel = Vec3(sp * std::cos(th), sp * std::sin(th), 0.0);
  return s;
}

LatticeNode snap_to_lattice(const State& s, const LatticeSpec& spec,
                            const std::string& label) {
  constexpr double kTol = 1e-9;
  LatticeNode n;

  for (int axis = 0; axis < 2; ++axis) {
    const double idx = std::round(s.pose[axis] / spec.cell);
    const double err = std::abs(s.pose[axis] - idx * spec.cell);
    if (err > kTol) {
      std::ostringstream os;
      os << label << ": x" << axis + 1 << " = " << s.pose[axis] << " is " << err
         << " m off the " << spec.cell << " m grid (nearest node at "
         << idx * spec.cell << "); move the endpoint onto the lattice";
      throw SnapError(os.str());
    }
    (axis == 0 ? n.ix : n.iy) = static_cast<int>(idx);
  }

  double best_err = std::numeric_limits<double>::infinity();
  for (int h = 0; h < spec.n_headings; ++h) {
    const double err =
        std::abs(angle_diff(s.pose[2], heading_angle(h, spec.n_headings)));
    if (err < best_err) {
      best_err = err;
      n.heading = h;
    }
  }
  if (best_err > kTol) {
    std::ostringstream os;
    os << label << ": heading " << s.pose[2] << " rad is " << best_err
       << " rad off the nearest lattice heading "
       << heading_angle(n.heading, spec.n_headings) << " (index " << n.heading
       << " of " << spec.n_headings << ")";
    throw SnapError(os.str());
  }

  // Body velocity must be pure surge at one of the lattice speed levels.
  const double th = heading_angle(n.heading, spec.n_headings);
  const Vec3 body = rotation(th).transpose() * s.vel;
  if (std::abs(body[1]) > kTol || std::abs(body[2]) > kTol) {
    std::ostringstream os;
    os << label << ": body velocity (" << body[0] << ", " << body[1] << ", "
       << body[2] << ") has nonzero sway or yaw rate; lattice states move "
       << "along their heading only";
    throw SnapError(os.str());
  }
  best_err = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < spec.speeds.size(); ++k) {
    const double err = std::abs(body[0] - spec.speeds[k]);
    if (err < best_err) {
      best_err = err;
      n.speed = static_cast<int>(k);
    }
  }
  if (best_err > kTol) {
    std::ostringstream os;
    os << label << ": surge speed " << body[0]
       << " m/s is not a lattice speed level (nearest is "
       << spec.speeds[static_cast<size_t>(n.speed)] << " m/s)";
    throw SnapError(os.str());
  }
  return n;
}

// ---- collision checking --------------------------------------------------

std::vector<ConvexPolygon> inflate_obstacles(
    const std::vector<ConvexPolygon>& obstacles, double radius) {
  std::vector<ConvexPolygon> out;
  out.reserve(obstacles.size());
  for (const ConvexPolygon& p : obstacles) out.push_back(dilate(p, radius));
  return out;
}

namespace {

struct Aabb {
  double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
};

Aabb polygon_bounds(const ConvexPolygon& p) {
  Aabb b{p.vertices[0].x(), p.vertices[0].x(), p.vertices[0].y(),
         p.vertices[0].y()};
  for (const Vec2& v : p.vertices) {
    b.xlo = std::min(b.xlo, v.x());
    b.xhi = std::max(b.xhi, v.x());
    b.ylo = std::min(b.ylo, v.y());
    b.yhi = std::max(b.yhi, v.y());
  }
  return b;
}

bool point_in_aabb(const Aabb& b, const Vec2& p) {
  return p.x() >= b.xlo && p.x() <= b.xhi && p.y() >= b.ylo && p.y() <= b.yhi;
}

bool segment_overlaps_aabb(const Aabb& b, const Vec2& a, const Vec2& c) {
  return std::max(a.x(), c.x()) >= b.xlo && std::min(a.x(), c.x()) <= b.xhi &&
         std::max(a.y(), c.y()) >= b.ylo && std::min(a.y(), c.y()) <= b.yhi;
}

bool collision_check_impl(const MotionPrimitive& prim, const Vec2& origin,
                          const std::vector<ConvexPolygon>& inflated,
                          const std::vector<Aabb>& bounds,
                          const Box3& pose_tight) {
  Vec2 prev = Vec2::Zero();
  for (size_t k = 0; k < prim.samples.size(); ++k) {
    Vec3 pose = prim.samples[k].pose;
    pose[0] += origin.x();
    pose[1] += origin.y();
    if (!pose_box_contains(pose_tight, pose)) return false;
    const Vec2 p = pose.head<2>();
    for (size_t ob = 0; ob < inflated.size(); ++ob) {
      if (point_in_aabb(bounds[ob], p) && inflated[ob].contains(p)) return false;
      if (k > 0 && segment_overlaps_aabb(bounds[ob], prev, p) &&
          inflated[ob].intersects_segment(prev, p)) {
        return false;
      }
    }
    prev = p;
  }
  return true;
}

}  // namespace

bool collision_check(const MotionPrimitive& prim, const Vec2& origin,
                     const std::vector<ConvexPolygon>& inflated,
                     const Box3& pose_tight) {
  std::vector<Aabb> bounds;
  bounds.reserve(inflated.size());
  for (const ConvexPolygon& p : inflated) bounds.push_back(polygon_bounds(p));
  return collision_check_impl(prim, origin, inflated, bounds, pose_tight);
}

// ---- search --------------------------------------------------------------

namespace {

uint64_t pack_node(const LatticeNode& n) {
  // 21 bits per grid axis (offset binary), 14 bits heading, 8 bits speed.
  const auto x = static_cast<uint64_t>(n.ix + (1 << 20));
  const auto y = static_cast<uint64_t>(n.iy + (1 << 20));
  return (x << 43) | (y << 22) | (static_cast<uint64_t>(n.heading) << 8) |
         static_cast<uint64_t>(n.speed);
}

struct NodeRec {
  double g = std::numeric_limits<double>::infinity();
  double f = 0.0;
  double h = 0.0;
  LatticeNode parent;
  int prim = -1;
  bool open = false;
  bool closed = false;
};

// Open-list key: (f, h, node) so exact f ties break toward the goal first and
// then lexicographically -- a total order that makes expansion deterministic.
using OpenKey = std::tuple<double, double, int, int, int, int>;

OpenKey open_key(const NodeRec& r, const LatticeNode& n) {
  return {r.f, r.h, n.ix, n.iy, n.heading, n.speed};
}

bool same_lattice(const LatticeSpec& a, const LatticeSpec& b) {
  return a.cell == b.cell && a.n_headings == b.n_headings &&
         a.speeds == b.speeds && a.dt == b.dt &&
         a.max_duration == b.max_duration &&
         a.effort_weight == b.effort_weight;
}

// Centered heading-index difference in (-n/2, n/2]; template turns never
// exceed a quarter turn so this recovers the generated delta exactly.
int centered_dheading(int from, int to, int n) {
  int d = ((to - from) % n + n) % n;
  if (d > n / 2) d -= n;
  return d;
}

Plan assemble_plan(const Scenario& sc, const PrimitiveLibrary& lib,
                   const std::vector<std::pair<LatticeNode, int>>& chain,
                   const LatticeNode& start_node, const LatticeNode& goal_node,
                   const TubeSpec& tube, long expanded) {
  const LatticeSpec& spec = lib.spec;
  const int sps = spec.samples_per_second();

  Plan plan;
  plan.scenario_name = sc.name;
  plan.model_hash = lib.model_hash;
  plan.tube_hash = tube_hash(tube);
  plan.dt = spec.dt;
  plan.start_node = start_node;
  plan.goal_node = goal_node;
  plan.expanded = expanded;

  double t_cursor = 0.0;
  double th_cursor = heading_angle(start_node.heading, spec.n_headings);
  Vec2 origin(start_node.ix * spec.cell, start_node.iy * spec.cell);
  LatticeNode at = start_node;

  for (const auto& [node, prim_idx] : chain) {
    const MotionPrimitive& prim = lib.prims[static_cast<size_t>(prim_idx)];

    PlanStep step;
    step.from = at;
    step.to = node;
    step.prim_index = prim_idx;
    step.cost = prim.cost;
    plan.steps.push_back(step);

    PlanSegment seg;
    seg.t_start = t_cursor;
    seg.duration = prim.duration;
    seg.coeffs = prim.coeffs;
    seg.coeffs(0, 0) += origin.x();
    seg.coeffs(1, 0) += origin.y();
    const double th_offset = th_cursor - prim.coeffs(2, 0);
    seg.coeffs(2, 0) = th_cursor;  // exact: c0 + (cursor - c0)
    plan.segments.push_back(seg);

    const size_t first = plan.steps.size() == 1 ? 0 : 1;
    if (first == 1) {
      // Junction consistency: the duplicated sample we drop must match the
      // tail of the previous primitive.
      State joint = prim.samples[0];
      joint.pose[0] += origin.x();
      joint.pose[1] += origin.y();
      joint.pose[2] += th_offset;
      const State& prev = plan.states.back();
      if ((joint.pose - prev.pose).norm() > 1e-6 ||
          (joint.vel - prev.vel).norm() > 1e-6) {
        throw std::runtime_error(
            "corrupted plan: consecutive primitives do not chain");
      }
    }
    for (size_t k = first; k < prim.samples.size(); ++k) {
      State s = prim.samples[k];
      s.pose[0] += origin.x();
      s.pose[1] += origin.y();
      s.pose[2] += th_offset;
      plan.times.push_back(t_cursor + static_cast<double>(k) / sps);
      plan.states.push_back(s);
      plan.accels.push_back(prim.accels[k]);
      plan.torques.push_back(prim.torques[k]);
    }

    t_cursor += prim.duration;
    th_cursor += centered_dheading(prim.heading_from, prim.heading_to,
                                   spec.n_headings) *
                 (2.0 * M_PI / spec.n_headings);
    origin.x() += prim.displacement.x() * spec.cell;
    origin.y() += prim.displacement.y() * spec.cell;
    plan.total_cost += prim.cost;
    at = node;
  }
  plan.duration = t_cursor;

  if (chain.empty()) {
    // Degenerate plan: already at the goal. Keep one sample so logs and CSV
    // stay well formed.
    const State s = node_state(start_node, spec);
    plan.times.push_back(0.0);
    plan.states.push_back(s);
    plan.accels.push_back(Vec3::Zero());
    plan.torques.push_back(inverse_dynamics(sc.model, s.pose, s.vel, Vec3::Zero()));
  }
  return plan;
}

}  // namespace

Plan plan_path(const Scenario& sc, const TubeSpec& tube,
               const ConstraintSets& sets, const PrimitiveLibrary& lib,
               const PlannerConfig& cfg) {
  const LatticeSpec& spec = lib.spec;
  spec.validate();

  // Provenance: the library must have been built for exactly this model,
  // tube, and lattice.
  if (lib.model_hash != model_hash(sc.model)) {
    throw StaleLibraryError(
        "primitive library was built for a different vessel model; rebuild it");
  }
  if (lib.tube_hash != tube_hash(tube)) {
    throw StaleLibraryError(
        "primitive library was built for a different tube; rebuild it");
  }
  if (!same_lattice(spec, sc.lattice)) {
    throw StaleLibraryError(
        "primitive library lattice differs from the scenario lattice; rebuild it");
  }

  // The hull must fit inside the workspace: erode the planar axes of the
  // tightened pose box by the footprint radius before searching.
  Box3 pose_eff = sets.pose_tight;
  for (int axis = 0; axis < 2; ++axis) {
    pose_eff[axis] = Interval{pose_eff[axis].lo + sc.footprint_radius,
                              pose_eff[axis].hi - sc.footprint_radius};
    if (pose_eff[axis].width() < 0.0) {
      std::ostringstream os;
      os << "workspace x" << axis + 1
         << " interval collapses after hull-footprint erosion";
      throw TighteningError(os.str());
    }
  }

  const double inflation =
      sc.footprint_radius + (cfg.tube_inflation ? tube.r_pos : 0.0);
  const std::vector<ConvexPolygon> inflated =
      inflate_obstacles(sc.obstacles, inflation);
  std::vector<Aabb> bounds;
  bounds.reserve(inflated.size());
  for (const ConvexPolygon& p : inflated) bounds.push_back(polygon_bounds(p));

  const LatticeNode start_node = snap_to_lattice(sc.start, spec, "start");
  const LatticeNode goal_node = snap_to_lattice(sc.goal, spec, "goal");

  for (const auto& [node, label] :
       {std::pair{start_node, "start"}, std::pair{goal_node, "goal"}}) {
    const State s = node_state(node, spec);
    if (!pose_box_contains(pose_eff, s.pose)) {
      throw ConfigError(std::string(label) +
                        " lies outside the tightened workspace");
    }
    for (const ConvexPolygon& p : inflated) {
      if (p.contains(s.pose.head<2>())) {
        throw ConfigError(std::string(label) +
                          " lies inside an inflated obstacle (clearance must "
                          "exceed footprint + tube radius)");
      }
    }
  }

  const double v_ref = lib.max_planar_speed;
  const Vec2 goal_pos(goal_node.ix * spec.cell, goal_node.iy * spec.cell);
  const auto heur = [&](const LatticeNode& n) {
    if (!cfg.use_heuristic) return 0.0;
    const Vec2 p(n.ix * spec.cell, n.iy * spec.cell);
    return (p - goal_pos).norm() / v_ref;
  };

  std::unordered_map<uint64_t, NodeRec> table;
  std::set<OpenKey> open;

  NodeRec& s0 = table[pack_node(start_node)];
  s0.g = 0.0;
  s0.h = heur(start_node);
  s0.f = s0.h;
  s0.open = true;
  open.insert(open_key(s0, start_node));

  long expanded = 0;
  double closest = std::numeric_limits<double>::infinity();

  while (!open.empty()) {
    const OpenKey key = *open.begin();
    open.erase(open.begin());
    const LatticeNode node{std::get<2>(key), std::get<3>(key), std::get<4>(key),
                           std::get<5>(key)};
    NodeRec& rec = table[pack_node(node)];
    rec.open = false;
    rec.closed = true;
    ++expanded;
    closest = std::min(closest, (Vec2(node.ix * spec.cell, node.iy * spec.cell) -
                                 goal_pos)
                                    .norm());

    if (node == goal_node) {
      std::vector<std::pair<LatticeNode, int>> chain;
      LatticeNode cur = node;
      while (cur != start_node) {
        const NodeRec& r = table[pack_node(cur)];
        chain.emplace_back(cur, r.prim);
        cur = r.parent;
      }
      std::reverse(chain.begin(), chain.end());
      return assemble_plan(sc, lib, chain, start_node, goal_node, tube, expanded);
    }
    if (expanded > cfg.max_expansions) {
      std::ostringstream os;
      os << "no path: expansion budget (" << cfg.max_expansions
         << " nodes) exhausted; closest approach to the goal was " << closest
         << " m";
      throw NoPathError(os.str());
    }

    const Vec2 origin(node.ix * spec.cell, node.iy * spec.cell);
    for (const int prim_idx : lib.outgoing(node.heading, node.speed)) {
      const MotionPrimitive& prim = lib.prims[static_cast<size_t>(prim_idx)];
      const LatticeNode succ{node.ix + prim.displacement.x(),
                             node.iy + prim.displacement.y(), prim.heading_to,
                             prim.speed_to};
      NodeRec& srec = table[pack_node(succ)];
      if (srec.closed) continue;
      if (!collision_check_impl(prim, origin, inflated, bounds, pose_eff)) {
        continue;
      }
      const double ng = rec.g + prim.cost;
      if (ng < srec.g) {
        if (srec.open) open.erase(open_key(srec, succ));
        srec.g = ng;
        srec.h = heur(succ);
        srec.f = ng + srec.h;
        srec.parent = node;
        srec.prim = prim_idx;
        srec.open = true;
        open.insert(open_key(srec, succ));
      }
    }
  }

  std::ostringstream os;
  os << "no path: search exhausted after " << expanded
     << " expansions; closest approach to the goal was " << closest << " m";
  throw NoPathError(os.str());
}

// ---- reference evaluation --------------------------------------------------

ReferencePoint eval_plan(const Plan& plan, double t) {
  if (plan.segments.empty()) {
    if (!plan.states.empty()) return {plan.states.front(), Vec3::Zero()};
    throw ConfigError("plan has no reference segments");
  }
  t = std::clamp(t, 0.0, plan.duration);
  size_t lo = 0, hi = plan.segments.size() - 1;
  while (lo < hi) {
    const size_t mid = (lo + hi + 1) / 2;
    if (plan.segments[mid].t_start <= t) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  const PlanSegment& seg = plan.segments[lo];
  const double local = std::clamp(t - seg.t_start, 0.0, seg.duration);
  return {quintic_state(seg.coeffs, local), quintic_accel(seg.coeffs, local)};
}

// ---- persistence -----------------------------------------------------------

namespace {

json node_to_json(const LatticeNode& n) {
  return json::array({n.ix, n.iy, n.heading, n.speed});
}

LatticeNode node_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4) {
    throw ConfigError(ctx + ": expected [ix, iy, heading, speed]");
  }
  return LatticeNode{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(),
                     j[3].get<int>()};
}

constexpr const char* kPlanFormat = "tubeplan-plan";
constexpr int kPlanVersion = 1;

}  // namespace

void save_plan(const Plan& plan, const std::filesystem::path& path) {
  json j;
  j["format"] = kPlanFormat;
  j["version"] = kPlanVersion;
  j["scenario"] = plan.scenario_name;
  j["model_hash"] = plan.model_hash;
  j["tube_hash"] = plan.tube_hash;
  j["dt"] = plan.dt;
  j["cost"] = plan.total_cost;
  j["duration"] = plan.duration;
  j["expanded"] = plan.expanded;
  j["start_node"] = node_to_json(plan.start_node);
  j["goal_node"] = node_to_json(plan.goal_node);

  json steps = json::array();
  for (const PlanStep& s : plan.steps) {
    json js;
    js["from"] = node_to_json(s.from);
    js["to"] = node_to_json(s.to);
    js["prim"] = s.prim_index;
    js["cost"] = s.cost;
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);

  json segs = json::array();
  for (const PlanSegment& s : plan.segments) {
    json js;
    js["t0"] = s.t_start;
    js["T"] = s.duration;
    json coeffs = json::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 6; ++c) coeffs.push_back(s.coeffs(r, c));
    }
    js["coeffs"] = std::move(coeffs);
    segs.push_back(std::move(js));
  }
  j["segments"] = std::move(segs);

  write_text_file(path, j.dump(2) + "\n");
}

Plan load_plan(const std::filesystem::path& path,
               const std::string& expect_model_hash,
               const std::string& expect_tube_hash) {
  const json j = load_json_file(path);
  const std::string ctx = "plan " + path.string();
  if (j.value("format", "") != kPlanFormat) {
    throw ConfigError(ctx + ": not a plan file");
  }
  if (j.value("version", 0) != kPlanVersion) {
    throw ConfigError(ctx + ": unsupported plan version");
  }

  Plan plan;
  plan.scenario_name = require_key(j, "scenario", ctx).get<std::string>();
  plan.model_hash = require_key(j, "model_hash", ctx).get<std::string>();
  plan.tube_hash = require_key(j, "tube_hash", ctx).get<std::string>();
  if (plan.model_hash != expect_model_hash) {
    throw StaleLibraryError(
        "plan was computed for a different vessel model; re-run the planner");
  }
  if (plan.tube_hash != expect_tube_hash) {
    throw StaleLibraryError(
        "plan was computed for a different tube; re-run the planner");
  }

  plan.dt = require_key(j, "dt", ctx).get<double>();
  plan.total_cost = require_key(j, "cost", ctx).get<double>();
  plan.duration = require_key(j, "duration", ctx).get<double>();
  plan.expanded = require_key(j, "expanded", ctx).get<long>();
  plan.start_node = node_from_json(require_key(j, "start_node", ctx), ctx);
  plan.goal_node = node_from_json(require_key(j, "goal_node", ctx), ctx);

  for (const json& js : require_key(j, "steps", ctx)) {
    PlanStep s;
    s.from = node_from_json(require_key(js, "from", ctx), ctx);
    s.to = node_from_json(require_key(js, "to", ctx), ctx);
    s.prim_index = require_key(js, "prim", ctx).get<int>();
    s.cost = require_key(js, "cost", ctx).get<double>();
    plan.steps.push_back(s);
  }
  for (const json& js : require_key(j, "segments", ctx)) {
    PlanSegment s;
    s.t_start = require_key(js, "t0", ctx).get<double>();
    s.duration = require_key(js, "T", ctx).get<double>();
    const json& coeffs = require_key(js, "coeffs", ctx);
    if (!coeffs.is_array() || coeffs.size() != 18) {
      throw ConfigError(ctx + ": segment coeffs must hold 18 numbers");
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 6; ++c) {
        s.coeffs(r, c) = coeffs[static_cast<size_t>(r * 6 + c)].get<double>();
      }
    }
    plan.segments.push_back(s);
  }
  return plan;
}

void write_trajectory_csv(const Plan& plan, const std::filesystem::path& path) {
  if (plan.times.empty()) {
    throw ConfigError("plan has no sampled trajectory; write it after planning");
  }
  std::string out = "t,x1,x2,x3,xd1,xd2,xd3,tau1,tau2,tau3\n";
  char line[512];
  for (size_t i = 0; i < plan.times.size(); ++i) {
    const State& s = plan.states[i];
    const Vec3& tau = plan.torques[i];
    std::snprintf(line, sizeof(line),
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  plan.times[i], s.pose[0], s.pose[1], s.pose[2], s.vel[0],
                  s.vel[1], s.vel[2], tau[0], tau[1], tau[2]);
    out += line;
  }
  write_text_file(path, out);
}

}  // namespace tubeplan

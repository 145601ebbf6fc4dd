#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tubeplan/el_model.hpp"
#include "tubeplan/errors.hpp"
#include "tubeplan/geometry.hpp"
#include "tubeplan/primitives.hpp"
#include "tubeplan/tube.hpp"
#include "tubeplan/types.hpp"

namespace tubeplan {

// Discrete search state: square-grid position indices, heading index, speed
// index. Ordered lexicographically so search tie-breaking is reproducible.
struct LatticeNode {
  int ix = 0;
  int iy = 0;
  int heading = 0;
  int speed = 0;
};

bool operator==(const LatticeNode& a, const LatticeNode& b);
bool operator!=(const LatticeNode& a, const LatticeNode& b);
bool operator<(const LatticeNode& a, const LatticeNode& b);

// A full planning problem: vessel model, controller gains, admissible
// disturbance set, operating boxes, lattice parameters, obstacle map, and the
// query endpoints. Start/goal velocities are given in the body frame (surge,
// sway, yaw rate) and converted to world coordinates at load time.
struct Scenario {
  std::string name;
  std::filesystem::path model_path;  // resolved relative to the scenario file
  ELModel model;
  Gains gains;
  DisturbanceEllipsoid disturbance;
  Box3 workspace;     // pose box: x1 [m], x2 [m], heading window [rad]
  Box3 velocity_box;  // world-frame velocity box
  Box3 torque_box;    // actuator box (surge N, sway N, yaw N m)
  double footprint_radius = 0.0;  // circumscribed hull radius [m]
  LatticeSpec lattice;
  std::vector<ConvexPolygon> obstacles;
  State start;  // world pose + world velocity
  State goal;
  GEstimationConfig gcfg;

  // Structural checks that do not need the tube: boxes ordered, obstacles
  // convex, footprint nonnegative, lattice spec valid, endpoints finite.
  void validate() const;
};

Scenario load_scenario(const std::filesystem::path& path);

// Exact world state of a node: pose (ix*cell, iy*cell, heading angle),
// velocity = speed along the heading, zero yaw rate.
State node_state(const LatticeNode& n, const LatticeSpec& spec);

// Matches a world state to the lattice node it sits on. Position, heading,
// and body velocity must each be within 1e-9 of a node's exact values;
// otherwise throws SnapError naming the offending coordinate and the nearest
// node so the scenario can be fixed.
LatticeNode snap_to_lattice(const State& s, const LatticeSpec& spec,
                            const std::string& label);

// Outer polygonal approximation of each obstacle grown by `radius` (tube
// radius + hull footprint). Conservative: never undershoots the exact
// Minkowski sum.
std::vector<ConvexPolygon> inflate_obstacles(
    const std::vector<ConvexPolygon>& obstacles, double radius);

// True when every sample of the primitive, translated to start at `origin`,
// stays inside the tightened pose box and outside every inflated obstacle.
// Consecutive samples are additionally joined by exact segment-vs-polygon
// tests so thin obstacles cannot be tunneled through between samples.
bool collision_check(const MotionPrimitive& prim, const Vec2& origin,
                     const std::vector<ConvexPolygon>& inflated,
                     const Box3& pose_tight);

// One stitched piece of the planned reference: the primitive's quintic
// shifted into world coordinates (position offset and heading unwrapping
// folded into the constant coefficients), valid on [t_start, t_start + T].
struct PlanSegment {
  double t_start = 0.0;
  double duration = 0.0;
  Eigen::Matrix<double, 3, 6> coeffs = Eigen::Matrix<double, 3, 6>::Zero();
};

// Graph provenance of one plan phase.
struct PlanStep {
  LatticeNode from;
  LatticeNode to;
  int prim_index = -1;  // index into the library used at planning time
  double cost = 0.0;
};

struct Plan {
  std::string scenario_name;
  std::string model_hash;
  std::string tube_hash;
  double dt = 0.1;

  LatticeNode start_node;
  LatticeNode goal_node;
  std::vector<PlanStep> steps;
  std::vector<PlanSegment> segments;
  double total_cost = 0.0;
  double duration = 0.0;  // sum of segment durations [s]
  long expanded = 0;      // search nodes expanded

  // Stitched rollout sampled at dt (filled by plan_path; empty after
  // load_plan, which keeps only the exact quintic segments).
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Vec3> accels;
  std::vector<Vec3> torques;
};

// C^2 reference lookup on the stitched quintic; t is clamped to [0, duration].
struct ReferencePoint {
  State state;
  Vec3 accel = Vec3::Zero();
};
ReferencePoint eval_plan(const Plan& plan, double t);

struct PlannerConfig {
  bool use_heuristic = true;   // false degrades A* to Dijkstra (oracle mode)
  bool tube_inflation = true;  // false plans against footprint-only obstacles
  long max_expansions = 2000000;
};

// Tube-aware A* over the lattice. The heuristic (straight-line distance over
// the library's fastest sampled planar speed) never exceeds the remaining
// time, and primitive costs are whole seconds, so returned costs equal the
// Dijkstra optimum exactly. Throws NoPathError with the expansion count and
// the closest approach to the goal when the graph is exhausted, and
// StaleLibraryError when the library does not match the scenario's model,
// tube, or lattice.
Plan plan_path(const Scenario& sc, const TubeSpec& tube,
               const ConstraintSets& sets, const PrimitiveLibrary& lib,
               const PlannerConfig& cfg = {});

// Versioned JSON persistence; the plan embeds the model and tube hashes so a
// later simulation refuses inputs produced for different physics.
void save_plan(const Plan& plan, const std::filesystem::path& path);
Plan load_plan(const std::filesystem::path& path,
               const std::string& expect_model_hash,
               const std::string& expect_tube_hash);

// Sampled rollout as CSV: t, x1, x2, x3, xd1, xd2, xd3, tau1, tau2, tau3.
void write_trajectory_csv(const Plan& plan, const std::filesystem::path& path);

}  // namespace tubeplan

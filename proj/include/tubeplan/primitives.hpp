#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tubeplan/el_model.hpp"
#include "tubeplan/errors.hpp"
#include "tubeplan/tube.hpp"
#include "tubeplan/types.hpp"

namespace tubeplan {

// State lattice parameters. Headings are the n_headings-th roots of the full
// circle; positions live on a square grid of pitch `cell`; speeds are the
// sampled forward-speed magnitudes (speeds[0] must be zero so the vehicle can
// start and stop). Primitive durations are whole seconds, so path costs are
// sums of small integers and compare exactly across search orders.
struct LatticeSpec {
  double cell = 50.0;     // grid pitch [m]
  int n_headings = 8;     // heading discretization (multiple of 4)
  std::vector<double> speeds = {0.0, 3.0 * kMetersPerSecondPerKnot,
                                6.0 * kMetersPerSecondPerKnot};
  double dt = 0.1;        // sample period of stored trajectories [s]
  int max_duration = 240; // duration search ceiling [s]
  double effort_weight = 0.0;  // cost = T + effort_weight * int ||tau||^2 dt

  void validate() const;
  int samples_per_second() const;  // 1/dt, validated integer
};

// Canonical angle of a heading index, wrapped to (-pi, pi].
double heading_angle(int heading_index, int n_headings);

// One connectivity-template entry, expressed in the canonical frame of a
// heading class (class 0 faces heading index 0, class 1 faces index 1).
// `displacement` is in grid cells; `dheading` is the index change.
struct TemplateEdge {
  Eigen::Vector2i displacement = Eigen::Vector2i::Zero();
  int dheading = 0;
  int speed_from = 0;
  int speed_to = 0;
};

// Built-in connectivity: per class, straights with all adjacent speed
// transitions, a double-length cruise straight, standard and tight 45-degree
// turns, and tight plus wide 90-degree turns (the wide one also at the top
// speed). Infeasible entries are dropped at generation time.
std::vector<TemplateEdge> default_template(const LatticeSpec& spec,
                                           int heading_class);

// Quintic with endpoint accelerations pinned to zero:
//   p(t) = p0 + v0 t + c3 t^3 + c4 t^4 + c5 t^5.
// Returns [p0, v0, 0, c3, c4, c5] coefficient rows for one axis.
Eigen::Matrix<double, 6, 1> quintic_coeffs(double p0, double v0, double p1,
                                           double v1, double T);

// Horner evaluation of a 3-axis quintic coefficient block (rows x1, x2,
// heading) and its derivatives. Shared by primitives and stitched plan
// segments so both produce bit-identical references.
State quintic_state(const Eigen::Matrix<double, 3, 6>& coeffs, double t);
Vec3 quintic_accel(const Eigen::Matrix<double, 3, 6>& coeffs, double t);

// Time-parameterized motion between two lattice states. All samples are in
// the world frame; headings are stored unwrapped (continuous along the
// motion), starting from the canonical angle of heading_from.
struct MotionPrimitive {
  int heading_from = 0;
  int heading_to = 0;   // heading index modulo n_headings
  int speed_from = 0;
  int speed_to = 0;
  Eigen::Vector2i displacement = Eigen::Vector2i::Zero();  // grid cells
  double duration = 0.0;  // whole seconds
  double cost = 0.0;      // duration + effort_weight * integral ||tau||^2

  // Per-axis quintic coefficients (rows: x1, x2, heading), each
  // [p0, v0, 0, c3, c4, c5].
  Eigen::Matrix<double, 3, 6> coeffs = Eigen::Matrix<double, 3, 6>::Zero();

  // dt-sampled rollout, sample k at t = k/samples_per_second.
  std::vector<State> samples;
  std::vector<Vec3> accels;
  std::vector<Vec3> torques;
  double max_planar_speed = 0.0;

  State eval(double t) const;       // quintic pose/velocity at t in [0, T]
  Vec3 eval_accel(double t) const;
};

// Evaluates the quintic rollout of `coeffs` on the lattice sample grid and
// fills samples/accels/torques via inverse dynamics.
void sample_primitive(const ELModel& m, const LatticeSpec& spec,
                      MotionPrimitive& prim);

// True when every sample satisfies the tightened velocity and torque boxes
// (poses are translation-invariant and checked at planning time instead).
bool primitive_within(const MotionPrimitive& prim, const ConstraintSets& sets);

// Builds the primitive for `edge` leaving heading_from at the given duration;
// throws InfeasiblePrimitiveError when a tightened bound is exceeded.
MotionPrimitive generate_primitive_at(const ELModel& m, const LatticeSpec& spec,
                                      const ConstraintSets& sets,
                                      const TemplateEdge& edge, int heading_from,
                                      int duration);

// Ascending integer-second duration search; smallest feasible duration wins.
// Throws InfeasiblePrimitiveError if none is feasible up to max_duration.
MotionPrimitive generate_primitive(const ELModel& m, const LatticeSpec& spec,
                                   const ConstraintSets& sets,
                                   const TemplateEdge& edge, int heading_from);

// Exact quarter-turn rotation: displacements rotate by the integer matrix
// [[0,-1],[1,0]]^k, planar coordinates by sign/swap (bitwise exact), heading
// indices advance by k * n/4, and body-frame torques are invariant.
MotionPrimitive rotate_primitive(const MotionPrimitive& prim, int quarter_turns,
                                 const LatticeSpec& spec);

struct PrimitiveLibrary {
  LatticeSpec spec;
  std::string model_hash;
  std::string tube_hash;
  std::vector<MotionPrimitive> prims;
  std::vector<std::string> dropped;  // infeasible template entries, for reports

  // prims indices grouped by (heading_from * n_speeds + speed_from).
  std::vector<std::vector<int>> by_start;
  double max_planar_speed = 0.0;  // heuristic reference speed

  const std::vector<int>& outgoing(int heading, int speed) const;
};

// Generates the canonical class primitives, rotates them into all headings,
// verifies the rotational symmetry of costs, and indexes the result. Throws
// EmptyClassError if some (heading, speed) class ends up with no outgoing
// primitive.
PrimitiveLibrary build_library(const ELModel& m, const TubeSpec& tube,
                               const ConstraintSets& sets,
                               const LatticeSpec& spec);

// Re-simulates the primitive in closed loop -- the tracking law around the
// primitive's own reference, zero disturbance, zero initial error -- and
// returns the largest position deviation from the stored samples. The replay
// is closed-loop because surface vessels with Munk-moment coupling are
// directionally unstable in open loop at forward speed, so a feedforward-only
// rollout diverges on turns no matter how consistent the data is. Any
// corruption (edited coefficients, wrong model, wrong rotation) shifts the
// reference itself and still shows up. Library validation requires the gap
// to stay below tol_m.
double resimulation_gap(const ELModel& m, const Gains& gains,
                        const LatticeSpec& spec, const MotionPrimitive& prim);
void validate_library(const ELModel& m, const Gains& gains,
                      const PrimitiveLibrary& lib, double tol_m = 1e-4);

// Versioned JSON persistence. Samples are regenerated from the quintic
// coefficients on load, so files stay small and byte-deterministic.
void save_library(const PrimitiveLibrary& lib, const std::filesystem::path& path);
PrimitiveLibrary load_library(const std::filesystem::path& path, const ELModel& m,
                              const TubeSpec& tube);

}  // namespace tubeplan

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tubeplan/el_model.hpp"
#include "tubeplan/io.hpp"
#include "tubeplan/planner.hpp"
#include "tubeplan/tube.hpp"
#include "tubeplan/types.hpp"

namespace tubeplan {

// Admissible disturbance generators for closed-loop validation. All three are
// deterministic functions of the profile (the noise generator is seeded), and
// all three stay inside the disturbance ellipsoid at every instant, not just
// at sample times.
enum class DisturbanceKind {
  kConstantWorst,     // constant push along the weakest (largest) semi-axis
  kRotatingExtreme,   // slowly sweeping direction, always on the boundary
  kFilteredNoise,     // seeded low-pass noise, clipped into the ellipsoid
};

// Accepts "constant", "rotating", or "noise".
DisturbanceKind parse_disturbance_kind(const std::string& name);

struct DisturbanceProfile {
  DisturbanceKind kind = DisturbanceKind::kFilteredNoise;
  uint64_t seed = 1;              // kFilteredNoise only
  double period = 120.0;          // kRotatingExtreme sweep period [s]
  double correlation_time = 8.0;  // kFilteredNoise time constant [s]
  double scale = 1.0;  // >1 deliberately violates the admissible set
};

// Body-frame disturbance force/moment as a function of time.
using DisturbanceFn = std::function<Vec3(double)>;

// Builds the generator for a horizon. The filtered-noise generator draws its
// knots once (spacing knot_dt), clips each knot into the ellipsoid, and
// interpolates linearly, so by convexity every instant between knots is
// admissible too. scale multiplies the output after clipping.
DisturbanceFn make_disturbance(const DisturbanceProfile& profile,
                               const DisturbanceEllipsoid& ell, double horizon,
                               double knot_dt = 0.5);

// One sample of a closed-loop rollout.
struct RunRecord {
  double t = 0.0;
  State nominal;   // reference state at t
  State actual;    // simulated vehicle state
  Vec3 tau = Vec3::Zero();  // commanded torque at t
  Vec3 d = Vec3::Zero();    // realized disturbance at t
  double lyapunov = 0.0;    // V(xtilde, xtildedot)
};

struct RunLog {
  double dt = 0.1;
  std::vector<RunRecord> records;  // duration / dt + 1 entries
  double max_err_pos = 0.0;        // max ||xtilde|| over the run
  double max_err_vel = 0.0;        // max ||xtildedot||
  double terminal_err_pos = 0.0;
  double terminal_err_vel = 0.0;
  double max_disturbance_wnorm = 0.0;  // max ||W^(1/2) d||; <= 1 is admissible
};

// Simulates the vehicle tracking the plan's reference under the disturbance:
// the commanded torque re-derives the feedback law at the current state, the
// plant is integrated with RK4 (control recomputed at substages -- the
// continuous-control idealization), and the state is sampled every dt. The
// plan duration must be an integer multiple of dt. The run starts exactly on
// the reference (zero initial error).
RunLog run_closed_loop(const Plan& plan, const Scenario& sc,
                       const DisturbanceFn& dfn, double dt);

// Post-hoc certificate for one run. Checks, in order of attribution: the
// realized disturbance was admissible (if not, nothing else is guaranteed and
// the failure says so first); the tracking error stayed inside the tube and
// ended inside it; the vehicle hull cleared the original obstacles and stayed
// inside the original workspace and velocity envelope; the Lyapunov function
// decreased wherever its certified rate bound was strictly negative; and the
// commanded torque stayed inside the original actuator box.
struct Certification {
  bool pass = false;
  std::vector<std::string> failures;  // attribution-ordered diagnostics

  double max_err_pos = 0.0;
  double max_err_vel = 0.0;
  double terminal_err_pos = 0.0;
  double r_pos = 0.0;  // certified bounds the errors were checked against
  double r_vel = 0.0;
  double min_clearance = 0.0;       // worst hull clearance to raw obstacles
  double required_clearance = 0.0;  // the hull footprint radius
  long lyapunov_violations = 0;
  long torque_violations = 0;
  double max_disturbance_wnorm = 0.0;
};

Certification certify(const RunLog& log, const Scenario& sc,
                      const TubeSpec& tube);

json certification_json(const Certification& c);

// Full rollout as CSV (reference, actual, torque, disturbance, Lyapunov).
void write_run_csv(const RunLog& log, const std::filesystem::path& path);

// Integrates the closed-loop plant and the equivalent linear error system
// side by side from zero initial error and returns the largest difference
// between the plant's tracking error and the linear prediction. The two are
// the same ODE written in different coordinates, so the gap measures only
// arithmetic and integration noise.
double closed_loop_equivalence_gap(const Plan& plan, const Scenario& sc,
                                   const DisturbanceFn& dfn, double dt,
                                   double horizon);

}  // namespace tubeplan

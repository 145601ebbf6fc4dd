#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "tubeplan/el_model.hpp"
#include "tubeplan/io.hpp"
#include "tubeplan/primitives.hpp"
#include "tubeplan/tube.hpp"
#include "test_support.hpp"

using namespace tubeplan;

namespace {

// Shared fixture: bench vessel, a small disturbance set, symmetric operating
// boxes (so rotated primitives stay feasible), and speeds that divide the
// 50 m cell exactly (50 / 2.5 = 20 s) for closed-form straights.
struct Fixture {
  ELModel model = test::bench_model();
  Gains gains{0.1, 0.1, 0.009};
  DisturbanceEllipsoid ell;
  Box3 workspace{Interval{0.0, 1000.0}, Interval{0.0, 1000.0},
                 Interval{-M_PI, M_PI}};
  Box3 velocity{Interval{-6.5, 6.5}, Interval{-6.5, 6.5}, Interval{-0.6, 0.6}};
  Box3 torque{Interval{-7000.0, 7000.0}, Interval{-7000.0, 7000.0},
              Interval{-12000.0, 12000.0}};
  TubeSpec tube;
  ConstraintSets sets;
  LatticeSpec spec;

  Fixture() {
    ell.w_sqrt_diag = Vec3(2.5, 2.0, 2.5);  // d_bar = 0.5 N
    tube = compute_tube(gains, model, ell, workspace, velocity);
    sets = tighten(workspace, velocity, torque, tube);
    spec.cell = 50.0;
    spec.speeds = {0.0, 2.5, 5.0};
    spec.dt = 0.1;
    spec.max_duration = 240;
  }
};

const Fixture& fix() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("primitives");

TEST_CASE("lattice spec validation") {
  LatticeSpec ok;
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.samples_per_second() == 10);

  LatticeSpec bad = ok;
  bad.dt = 0.3;  // does not divide one second
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = ok;
  bad.speeds = {1.0, 2.0};  // must start at rest
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = ok;
  bad.speeds = {0.0, 2.0, 2.0};  // strictly increasing
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = ok;
  bad.n_headings = 6;  // quarter-turn symmetry needs a multiple of 4
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("heading angles wrap into (-pi, pi]") {
  CHECK(heading_angle(0, 8) == 0.0);
  CHECK(heading_angle(2, 8) == doctest::Approx(M_PI / 2).epsilon(1e-15));
  CHECK(heading_angle(4, 8) == doctest::Approx(M_PI).epsilon(1e-15));
  CHECK(heading_angle(6, 8) == doctest::Approx(-M_PI / 2).epsilon(1e-15));
  CHECK(heading_angle(7, 8) == doctest::Approx(-M_PI / 4).epsilon(1e-15));
  CHECK(heading_angle(-1, 8) == heading_angle(7, 8));
  for (int i = 0; i < 8; ++i) {
    const double a = heading_angle(i, 8);
    CHECK(a > -M_PI);
    CHECK(a <= M_PI);
  }
}

TEST_CASE("quintic coefficients satisfy all six boundary conditions") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const double p0 = test::uniform(rng, -100.0, 100.0);
    const double v0 = test::uniform(rng, -5.0, 5.0);
    const double p1 = test::uniform(rng, -100.0, 100.0);
    const double v1 = test::uniform(rng, -5.0, 5.0);
    const double T = test::uniform(rng, 1.0, 60.0);
    const auto c = quintic_coeffs(p0, v0, p1, v1, T);

    const auto eval = [&](double t) {
      double acc = 0.0;
      for (int k = 5; k >= 0; --k) acc = acc * t + c[k];
      return acc;
    };
    const auto eval_d = [&](double t) {
      double acc = 0.0;
      for (int k = 5; k >= 1; --k) acc = acc * t + k * c[k];
      return acc;
    };
    const auto eval_dd = [&](double t) {
      double acc = 0.0;
      for (int k = 5; k >= 2; --k) acc = acc * t + k * (k - 1) * c[k];
      return acc;
    };

    const double scale = std::max({1.0, std::abs(p0), std::abs(p1)});
    CHECK(std::abs(eval(0.0) - p0) <= 1e-12 * scale);
    CHECK(std::abs(eval_d(0.0) - v0) <= 1e-12 * scale);
    CHECK(eval_dd(0.0) == 0.0);
    CHECK(std::abs(eval(T) - p1) <= 1e-9 * scale);
    CHECK(std::abs(eval_d(T) - v1) <= 1e-9 * scale);
    CHECK(std::abs(eval_dd(T)) <= 1e-9 * scale);
  }
}

TEST_CASE("exact-fit straight is sampled with zero ripple and drag-only torque") {
  // 50 m at 2.5 m/s in exactly 20 s: the quintic degenerates to uniform
  // motion, so velocity is bitwise constant and the feedforward torque is the
  // pure drag force F_lin q + diag(F_quad)|q| q with q = (2.5, 0, 0):
  //   surge: 30 * 2.5 + 5 * 2.5^2 = 106.25 N, sway/yaw: 0.
  const Fixture& F = fix();
  TemplateEdge e;
  e.displacement = Eigen::Vector2i(1, 0);
  e.dheading = 0;
  e.speed_from = 1;
  e.speed_to = 1;
  const MotionPrimitive p =
      generate_primitive_at(F.model, F.spec, F.sets, e, 0, 20);

  REQUIRE(p.samples.size() == 201);
  CHECK(p.duration == 20.0);
  CHECK(p.cost == 20.0);  // effort weight zero: cost is the duration
  for (size_t k = 0; k < p.samples.size(); ++k) {
    CHECK(p.samples[k].vel[0] == 2.5);
    CHECK(p.samples[k].vel[1] == 0.0);
    CHECK(p.samples[k].vel[2] == 0.0);
    CHECK(p.accels[k].norm() == 0.0);
    CHECK(p.torques[k][0] == doctest::Approx(106.25).epsilon(1e-9));
    CHECK(std::abs(p.torques[k][1]) < 1e-9);
    CHECK(std::abs(p.torques[k][2]) < 1e-9);
  }
  CHECK(p.samples.back().pose[0] == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(p.max_planar_speed == 2.5);
}

TEST_CASE("generated primitives meet their lattice boundary states") {
  const Fixture& F = fix();
  for (const TemplateEdge& e : default_template(F.spec, 1)) {
    const MotionPrimitive p = generate_primitive(F.model, F.spec, F.sets, e, 1);
    const State& first = p.samples.front();
    const State& last = p.samples.back();

    const double th0 = heading_angle(1, 8);
    const double th1 = th0 + e.dheading * (M_PI / 4.0);
    CHECK(first.pose[0] == 0.0);
    CHECK(first.pose[1] == 0.0);
    CHECK(first.pose[2] == th0);
    CHECK((first.vel.head<2>() -
           F.spec.speeds[e.speed_from] * Vec2(std::cos(th0), std::sin(th0)))
              .norm() < 1e-12);

    CHECK(last.pose[0] ==
          doctest::Approx(50.0 * e.displacement.x()).epsilon(1e-9));
    CHECK(last.pose[1] ==
          doctest::Approx(50.0 * e.displacement.y()).epsilon(1e-9));
    CHECK(last.pose[2] == doctest::Approx(th1).epsilon(1e-12));
    CHECK((last.vel.head<2>() -
           F.spec.speeds[e.speed_to] * Vec2(std::cos(th1), std::sin(th1)))
              .norm() < 1e-9);
    CHECK(std::abs(first.vel[2]) < 1e-12);
    CHECK(std::abs(last.vel[2]) < 1e-9);
    // Endpoint accelerations vanish, so chained primitives join C^2.
    CHECK(p.eval_accel(0.0).norm() == 0.0);
    CHECK(p.eval_accel(p.duration).norm() < 1e-9);
  }
}

TEST_CASE("duration search returns the smallest feasible whole second") {
  const Fixture& F = fix();
  TemplateEdge e;
  e.displacement = Eigen::Vector2i(1, 0);
  e.dheading = 0;
  e.speed_from = 0;
  e.speed_to = 1;  // accelerate from rest across one cell
  const MotionPrimitive p = generate_primitive(F.model, F.spec, F.sets, e, 0);
  CHECK(p.duration >= 1.0);
  if (p.duration > 1.0) {
    CHECK_THROWS_AS(generate_primitive_at(F.model, F.spec, F.sets, e, 0,
                                          static_cast<int>(p.duration) - 1),
                    InfeasiblePrimitiveError);
  }
  // The rollout is feasible at the returned duration by construction.
  CHECK(primitive_within(p, F.sets));
}

TEST_CASE("infeasibility reports cite the tightened-box utilization") {
  const Fixture& F = fix();
  ConstraintSets cramped = F.sets;
  cramped.velocity_tight[0] = Interval{-1.0, 1.0};
  cramped.velocity_tight[1] = Interval{-1.0, 1.0};
  TemplateEdge e;
  e.displacement = Eigen::Vector2i(1, 0);
  e.dheading = 0;
  e.speed_from = 1;
  e.speed_to = 1;  // 2.5 m/s cruise cannot fit a 1 m/s box
  try {
    generate_primitive_at(F.model, F.spec, cramped, e, 0, 20);
    CHECK(false);
  } catch (const InfeasiblePrimitiveError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("utilization") != std::string::npos);
    CHECK(msg.find("T=20") != std::string::npos);
  }
}

TEST_CASE("quarter-turn rotation is exact to the bit") {
  const Fixture& F = fix();
  TemplateEdge e;
  e.displacement = Eigen::Vector2i(2, 1);
  e.dheading = 1;
  e.speed_from = 1;
  e.speed_to = 1;
  const MotionPrimitive p = generate_primitive(F.model, F.spec, F.sets, e, 0);

  const MotionPrimitive r = rotate_primitive(p, 1, F.spec);
  CHECK(r.heading_from == 2);
  CHECK(r.heading_to == 3);
  CHECK(r.displacement.x() == -1);
  CHECK(r.displacement.y() == 2);
  CHECK(r.duration == p.duration);
  CHECK(r.cost == p.cost);
  CHECK(r.coeffs(2, 0) == heading_angle(2, 8));
  REQUIRE(r.samples.size() == p.samples.size());
  for (size_t k = 0; k < p.samples.size(); ++k) {
    // Planar quantities rotate by sign/swap only: bitwise equality.
    CHECK(r.samples[k].pose[0] == -p.samples[k].pose[1]);
    CHECK(r.samples[k].pose[1] == p.samples[k].pose[0]);
    CHECK(r.samples[k].vel[0] == -p.samples[k].vel[1]);
    CHECK(r.samples[k].vel[1] == p.samples[k].vel[0]);
    CHECK(r.samples[k].vel[2] == p.samples[k].vel[2]);
    CHECK(r.accels[k][0] == -p.accels[k][1]);
    CHECK(r.accels[k][1] == p.accels[k][0]);
    // Body-frame torque is invariant under the world rotation.
    CHECK(r.torques[k] == p.torques[k]);
  }
  CHECK(r.max_planar_speed == p.max_planar_speed);

  // Four quarter turns are the identity.
  const MotionPrimitive full = rotate_primitive(p, 4, F.spec);
  CHECK(full.coeffs == p.coeffs);
  CHECK(full.displacement == p.displacement);
}

TEST_CASE("library covers every class and is rotation-symmetric in cost") {
  const Fixture& F = fix();
  const PrimitiveLibrary lib = build_library(F.model, F.tube, F.sets, F.spec);

  // Roomy boxes: nothing from the default template should drop.
  CHECK(lib.dropped.empty());
  CHECK(lib.prims.size() == 2 * 17 * 4);

  for (int h = 0; h < 8; ++h) {
    for (int s = 0; s < 3; ++s) {
      CHECK(!lib.outgoing(h, s).empty());
    }
  }

  // Cost multisets agree across the four rotations of each class.
  const auto costs_at = [&](int h) {
    std::vector<double> out;
    for (int s = 0; s < 3; ++s) {
      for (int i : lib.outgoing(h, s)) out.push_back(lib.prims[i].cost);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  for (int cls = 0; cls < 2; ++cls) {
    const auto ref = costs_at(cls);
    for (int k = 1; k < 4; ++k) {
      CHECK(costs_at(cls + 2 * k) == ref);
    }
  }

  // The heuristic reference speed must dominate every sampled planar speed.
  CHECK(lib.max_planar_speed >= F.spec.speeds.back());
  for (const MotionPrimitive& p : lib.prims) {
    CHECK(p.max_planar_speed <= lib.max_planar_speed);
  }

  // Every primitive replays onto its own samples when tracked in closed
  // loop from zero initial error with no disturbance.
  CHECK_NOTHROW(validate_library(F.model, F.gains, lib));
  for (const MotionPrimitive& p : lib.prims) {
    CHECK(resimulation_gap(F.model, F.gains, F.spec, p) < 1e-6);
  }
}

TEST_CASE("tampered coefficients fail the replay validation") {
  const Fixture& F = fix();
  PrimitiveLibrary lib = build_library(F.model, F.tube, F.sets, F.spec);
  lib.prims[5].coeffs(0, 3) += 1e-3;  // bend the path without resampling
  CHECK_THROWS_AS(validate_library(F.model, F.gains, lib), StaleLibraryError);
}

TEST_CASE("library persistence round-trips bytes and rejects stale inputs") {
  const Fixture& F = fix();
  const PrimitiveLibrary lib = build_library(F.model, F.tube, F.sets, F.spec);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "tubeplan_test_lib";
  fs::create_directories(dir);
  const fs::path path = dir / "library.json";
  save_library(lib, path);

  const PrimitiveLibrary loaded = load_library(path, F.model, F.tube);
  REQUIRE(loaded.prims.size() == lib.prims.size());
  CHECK(loaded.spec.cell == lib.spec.cell);
  CHECK(loaded.max_planar_speed == lib.max_planar_speed);

  // Sampled rollouts regenerate bitwise from the stored coefficients.
  for (size_t i : {size_t(0), size_t(7), lib.prims.size() - 1}) {
    REQUIRE(loaded.prims[i].samples.size() == lib.prims[i].samples.size());
    CHECK(loaded.prims[i].cost == lib.prims[i].cost);
    for (size_t k = 0; k < lib.prims[i].samples.size(); k += 17) {
      CHECK(loaded.prims[i].samples[k].pose == lib.prims[i].samples[k].pose);
      CHECK(loaded.prims[i].samples[k].vel == lib.prims[i].samples[k].vel);
      // Rotated copies carry transformed torques; regeneration recomputes
      // them at the rotated heading, identical to rounding.
      CHECK((loaded.prims[i].torques[k] - lib.prims[i].torques[k]).norm() <
            1e-9 * std::max(1.0, lib.prims[i].torques[k].norm()));
    }
  }

  // Saving the loaded library reproduces the file byte for byte.
  const fs::path path2 = dir / "library2.json";
  save_library(loaded, path2);
  CHECK(read_text_file(path) == read_text_file(path2));

  // A different vehicle or a different tube certificate is rejected.
  ELModel other;
  other.name = "other";
  other.inertia = F.model.inertia;
  other.coriolis_coeffs = Vec3::Zero();
  other.drag_linear = 0.35 * F.model.inertia;
  other.drag_quadratic = Vec3::Zero();
  other.validate_and_cache();
  CHECK_THROWS_AS(load_library(path, other, F.tube), StaleLibraryError);

  TubeSpec other_tube = F.tube;
  other_tube.d_bar *= 2.0;
  CHECK_THROWS_AS(load_library(path, F.model, other_tube), StaleLibraryError);

  // Hand-edited costs are caught by the rollout cross-check.
  json j = load_json_file(path);
  j["primitives"][0]["cost"] = j["primitives"][0]["cost"].get<double>() + 0.5;
  const fs::path tampered = dir / "tampered.json";
  write_text_file(tampered, j.dump(2) + "\n");
  CHECK_THROWS_AS(load_library(tampered, F.model, F.tube), StaleLibraryError);
}

TEST_CASE("unreachable speed classes raise the dedicated error") {
  const Fixture& F = fix();
  LatticeSpec spec = F.spec;
  spec.speeds = {0.0, 7.5};  // beyond the +-6.5 velocity box: nothing fits
  CHECK_THROWS_AS(build_library(F.model, F.tube, F.sets, spec), EmptyClassError);
}

TEST_SUITE_END();

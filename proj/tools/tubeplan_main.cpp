// Command-line front end: tube analysis, primitive library generation,
// planning, closed-loop certification, and an end-to-end demo. Every command
// is deterministic given identical inputs, and exit codes are a stable
// contract (see README).
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "tubeplan/el_model.hpp"
#include "tubeplan/errors.hpp"
#include "tubeplan/io.hpp"
#include "tubeplan/planner.hpp"
#include "tubeplan/primitives.hpp"
#include "tubeplan/sim.hpp"
#include "tubeplan/svg.hpp"
#include "tubeplan/tube.hpp"

namespace fs = std::filesystem;
using namespace tubeplan;

namespace {

struct Options {
  std::string scenario;
  std::string model;  // optional override of the scenario's model
  std::string library;
  std::string plan;
  std::string out = "out";
  int seeds = 5;
  double dt = 0.1;
  std::string profile = "noise";
  double disturbance_scale = 1.0;
  bool no_heuristic = false;
};

Scenario load_scenario_with_override(const Options& o) {
  Scenario sc = load_scenario(o.scenario);
  if (!o.model.empty()) {
    sc.model_path = o.model;
    sc.model = load_model(o.model);
  }
  return sc;
}

TubeSpec tube_of(const Scenario& sc) {
  return compute_tube(sc.gains, sc.model, sc.disturbance, sc.workspace,
                      sc.velocity_box, sc.gcfg);
}

fs::path library_path(const Options& o) {
  return o.library.empty() ? fs::path(o.out) / "library.json"
                           : fs::path(o.library);
}

fs::path plan_path_of(const Options& o) {
  return o.plan.empty() ? fs::path(o.out) / "plan.json" : fs::path(o.plan);
}

int cmd_tube(const Options& o) {
  const Scenario sc = load_scenario_with_override(o);
  const TubeSpec tube = tube_of(sc);
  const fs::path out = fs::path(o.out) / "tube.json";
  write_text_file(out, tube_report_json(tube));
  std::printf("vessel %s: worst-case disturbance %.6g N, acceleration %.6g\n",
              sc.model.name.c_str(), tube.d_bar, tube.theta_sup * tube.d_bar);
  std::printf("tube radii: position %.6g m, velocity %.6g m/s\n", tube.r_pos,
              tube.r_vel);
  std::printf("feedback margin: acceleration %.6g, torque erosion %.6g\n",
              tube.rho_ctrl, tube.theta_inv_sup * tube.rho_ctrl);
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_primitives(const Options& o) {
  const Scenario sc = load_scenario_with_override(o);
  const TubeSpec tube = tube_of(sc);
  const ConstraintSets sets =
      tighten(sc.workspace, sc.velocity_box, sc.torque_box, tube);
  const PrimitiveLibrary lib = build_library(sc.model, tube, sets, sc.lattice);

  const fs::path out = library_path(o);
  save_library(lib, out);

  std::printf("library: %zu primitives (%zu infeasible candidates dropped)\n",
              lib.prims.size(), lib.dropped.size());
  for (size_t s = 0; s < sc.lattice.speeds.size(); ++s) {
    size_t count = 0;
    for (int h = 0; h < sc.lattice.n_headings; ++h) {
      count += lib.outgoing(h, static_cast<int>(s)).size();
    }
    std::printf("  from speed %.4g m/s: %zu edges across %d headings\n",
                sc.lattice.speeds[s], count, sc.lattice.n_headings);
  }
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_plan(const Options& o) {
  const Scenario sc = load_scenario_with_override(o);
  const TubeSpec tube = tube_of(sc);
  const ConstraintSets sets =
      tighten(sc.workspace, sc.velocity_box, sc.torque_box, tube);
  const PrimitiveLibrary lib = load_library(library_path(o), sc.model, tube);

  PlannerConfig cfg;
  cfg.use_heuristic = !o.no_heuristic;
  const Plan plan = plan_path(sc, tube, sets, lib, cfg);

  const fs::path out(o.out);
  save_plan(plan, out / "plan.json");
  write_trajectory_csv(plan, out / "trajectory.csv");
  const auto inflated =
      inflate_obstacles(sc.obstacles, sc.footprint_radius + tube.r_pos);
  write_text_file(out / "map.svg",
                  render_scenario_svg(sc, inflated, &plan, tube.r_pos));

  std::printf("plan: %zu primitives, cost %.6g s, duration %.6g s\n",
              plan.steps.size(), plan.total_cost, plan.duration);
  std::printf("search: %ld nodes expanded (%s)\n", plan.expanded,
              cfg.use_heuristic ? "A*" : "Dijkstra");
  std::printf("wrote %s, trajectory.csv, map.svg\n",
              (out / "plan.json").string().c_str());
  return 0;
}

int cmd_simulate(const Options& o) {
  const Scenario sc = load_scenario_with_override(o);
  const TubeSpec tube = tube_of(sc);
  const Plan plan =
      load_plan(plan_path_of(o), model_hash(sc.model), tube_hash(tube));

  const DisturbanceKind kind = parse_disturbance_kind(o.profile);
  std::vector<DisturbanceProfile> batch;
  if (kind == DisturbanceKind::kFilteredNoise) {
    for (int s = 1; s <= o.seeds; ++s) {
      DisturbanceProfile p;
      p.kind = kind;
      p.seed = static_cast<uint64_t>(s);
      p.scale = o.disturbance_scale;
      batch.push_back(p);
    }
  } else {
    DisturbanceProfile p;
    p.kind = kind;
    p.scale = o.disturbance_scale;
    batch.push_back(p);  // constant/rotating profiles are seed-independent
  }

  const fs::path out(o.out);
  json report;
  report["scenario"] = sc.name;
  report["plan"] = plan_path_of(o).string();
  report["profile"] = o.profile;
  report["dt"] = o.dt;
  report["runs"] = json::array();

  bool all_pass = true;
  std::string first_failure;
  std::vector<Vec2> overlay_path;

  for (const DisturbanceProfile& p : batch) {
    const std::string label =
        kind == DisturbanceKind::kFilteredNoise
            ? "seed" + std::to_string(p.seed)
            : o.profile;
    const DisturbanceFn dfn =
        make_disturbance(p, sc.disturbance, plan.duration);
    const RunLog log = run_closed_loop(plan, sc, dfn, o.dt);
    const Certification cert = certify(log, sc, tube);

    write_run_csv(log, out / ("run_" + label + ".csv"));
    json entry = certification_json(cert);
    entry["run"] = label;
    report["runs"].push_back(entry);

    std::printf("run %-12s %s  max error %.4g of %.4g m, terminal %.4g m\n",
                label.c_str(), cert.pass ? "PASS" : "FAIL", cert.max_err_pos,
                cert.r_pos, cert.terminal_err_pos);
    if (!cert.pass) {
      for (const std::string& f : cert.failures) {
        std::printf("    %s\n", f.c_str());
      }
      if (all_pass) {
        first_failure = label;
        overlay_path.clear();
        for (const RunRecord& r : log.records) {
          overlay_path.push_back(r.actual.pose.head<2>());
        }
      }
      all_pass = false;
    } else if (overlay_path.empty()) {
      for (const RunRecord& r : log.records) {
        overlay_path.push_back(r.actual.pose.head<2>());
      }
    }
  }

  report["pass"] = all_pass;
  write_text_file(out / "certification.json", report.dump(2) + "\n");
  const auto inflated =
      inflate_obstacles(sc.obstacles, sc.footprint_radius + tube.r_pos);
  write_text_file(out / "overlay.svg",
                  render_scenario_svg(sc, inflated, &plan, tube.r_pos,
                                      &overlay_path));
  std::printf("wrote %s, overlay.svg\n",
              (out / "certification.json").string().c_str());

  if (!all_pass) {
    std::fprintf(stderr, "certification FAILED (first failing run: %s)\n",
                 first_failure.c_str());
    return 8;
  }
  std::printf("all %zu runs certified\n", batch.size());
  return 0;
}

int cmd_demo(Options o) {
  if (o.scenario.empty()) o.scenario = "data/scenarios/demo.json";
  if (int rc = cmd_tube(o)) return rc;
  if (int rc = cmd_primitives(o)) return rc;
  if (int rc = cmd_plan(o)) return rc;
  return cmd_simulate(o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Robust lattice motion planning for disturbed surface vessels"};
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&](CLI::App* cmd, bool scenario_required) {
    auto* opt = cmd->add_option("--scenario", o.scenario,
                                "Scenario JSON (map, vessel, gains, query)");
    if (scenario_required) opt->required();
    cmd->add_option("--model", o.model, "Override the scenario's vessel model");
    cmd->add_option("--out", o.out, "Output directory (default: out)");
  };

  CLI::App* tube = app.add_subcommand("tube", "Compute and report tube radii");
  add_common(tube, true);

  CLI::App* prims = app.add_subcommand(
      "primitives", "Generate and validate the motion-primitive library");
  add_common(prims, true);
  prims->add_option("--library", o.library,
                    "Library output path (default: <out>/library.json)");

  CLI::App* plan = app.add_subcommand("plan", "Search for a certified route");
  add_common(plan, true);
  plan->add_option("--library", o.library,
                   "Library input path (default: <out>/library.json)");
  plan->add_flag("--no-heuristic", o.no_heuristic,
                 "Plain Dijkstra search (for cross-checking)");

  CLI::App* sim = app.add_subcommand(
      "simulate", "Run the disturbed closed loop and certify containment");
  add_common(sim, true);
  sim->add_option("--plan", o.plan,
                  "Plan input path (default: <out>/plan.json)");
  sim->add_option("--seeds", o.seeds, "Noise seeds to run (default: 5)");
  sim->add_option("--dt", o.dt, "Simulation step [s] (default: 0.1)");
  sim->add_option("--profile", o.profile,
                  "Disturbance profile: constant | rotating | noise");
  sim->add_option("--disturbance-scale", o.disturbance_scale,
                  "Scale factor on the disturbance (>1 leaves the admissible "
                  "set; for robustness experiments)");

  CLI::App* demo = app.add_subcommand(
      "demo", "End-to-end: tube, primitives, plan, simulate");
  add_common(demo, false);
  demo->add_option("--seeds", o.seeds, "Noise seeds to run (default: 5)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (tube->parsed()) return cmd_tube(o);
    if (prims->parsed()) return cmd_primitives(o);
    if (plan->parsed()) return cmd_plan(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (demo->parsed()) return cmd_demo(o);
    return 1;
  } catch (const GainConditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SnapError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 7;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const StaleLibraryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const EmptyClassError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NoPathError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

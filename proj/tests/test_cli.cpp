// End-to-end exercises of the command-line tool: output files, console
// summaries, and the documented exit-code contract.
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "tubeplan/io.hpp"

using namespace tubeplan;
namespace fs = std::filesystem;

namespace {

const fs::path& data_dir() {
  static const fs::path p(TUBEPLAN_DATA_DIR);
  return p;
}

const fs::path& work() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / "tubeplan_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI with the given arguments, captures combined output, and
// returns the exit code.
int run_cli(const std::string& args, std::string* output = nullptr) {
  static int counter = 0;
  const fs::path log = work() / ("log" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string("\"") + TUBEPLAN_CLI_PATH + "\" " +
                          args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output != nullptr) *output = read_text_file(log);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string demo_scenario_arg() {
  return "--scenario " + quoted(data_dir() / "scenarios" / "demo.json");
}

// A demo-scenario copy (with an absolute model path so it can live anywhere)
// after applying `mutate`.
fs::path variant_scenario(const std::string& name,
                          const std::function<void(json&)>& mutate) {
  json j = load_json_file(data_dir() / "scenarios" / "demo.json");
  j["model"] = (data_dir() / "models" / "hp10.json").string();
  mutate(j);
  const fs::path p = work() / name;
  write_text_file(p, j.dump(2));
  return p;
}

// Shared pipeline outputs, created on first use so test order cannot break
// the dependencies: primitives -> plan.
const fs::path& built_out() {
  static const fs::path out = [] {
    const fs::path o = work() / "out";
    const int rc =
        run_cli("primitives " + demo_scenario_arg() + " --out " + quoted(o));
    if (rc != 0 || !fs::exists(o / "library.json")) {
      throw std::runtime_error("primitives bootstrap failed");
    }
    return o;
  }();
  return out;
}

const fs::path& planned_out() {
  static const fs::path out = [] {
    const fs::path o = built_out();
    const int rc = run_cli("plan " + demo_scenario_arg() + " --out " + quoted(o));
    if (rc != 0 || !fs::exists(o / "plan.json")) {
      throw std::runtime_error("plan bootstrap failed");
    }
    return o;
  }();
  return out;
}

}  // namespace

TEST_CASE("tube command writes the report and enforces the gain condition") {
  std::string out;
  const fs::path dir = work() / "tube_ok";
  CHECK(run_cli("tube " + demo_scenario_arg() + " --out " + quoted(dir), &out) ==
        0);
  CHECK(out.find("tube radii") != std::string::npos);
  const json report = load_json_file(dir / "tube.json");
  CHECK(report.at("C1").get<double>() > 0.0);
  CHECK(report.at("r_x").get<double>() > 0.0);

  SUBCASE("violated gain inequality exits 2 and cites it") {
    const fs::path bad = variant_scenario("bad_gains.json", [](json& j) {
      j["gains"]["Gamma"] = 0.02;  // k1 k2 = 0.01 < Gamma
    });
    std::string msg;
    CHECK(run_cli("tube --scenario " + quoted(bad), &msg) == 2);
    CHECK(msg.find("k1") != std::string::npos);
    CHECK(msg.find("Gamma") != std::string::npos);
  }
  SUBCASE("unreadable input exits 3 with a parse diagnostic") {
    const fs::path broken = work() / "broken.json";
    write_text_file(broken, "{\"name\": \"demo\", \"mod");
    std::string msg;
    CHECK(run_cli("tube --scenario " + quoted(broken), &msg) == 3);
    CHECK(msg.find("error") != std::string::npos);
  }
}

TEST_CASE("primitives command is deterministic and reports empty classes") {
  const fs::path& out = built_out();
  CHECK(fs::exists(out / "library.json"));

  SUBCASE("byte-identical library across independent runs") {
    const fs::path again = work() / "out_again";
    CHECK(run_cli("primitives " + demo_scenario_arg() + " --out " +
                  quoted(again)) == 0);
    CHECK(read_text_file(out / "library.json") ==
          read_text_file(again / "library.json"));
  }
  SUBCASE("a lattice no primitive can satisfy exits 4") {
    const fs::path starved = variant_scenario("starved.json", [](json& j) {
      j["lattice"]["max_duration"] = 2.0;  // nothing fits in two seconds
    });
    std::string msg;
    CHECK(run_cli("primitives --scenario " + quoted(starved) + " --out " +
                      quoted(work() / "starved_out"),
                  &msg) == 4);
  }
}

TEST_CASE("plan command produces the route artifacts and diagnostics") {
  const fs::path& out = planned_out();
  CHECK(fs::exists(out / "plan.json"));
  CHECK(fs::exists(out / "trajectory.csv"));
  CHECK(fs::exists(out / "map.svg"));
  const json plan = load_json_file(out / "plan.json");
  CHECK(plan.at("steps").size() >= 10);

  SUBCASE("goal sealed off exits 6 with search diagnostics") {
    const fs::path sealed = variant_scenario("sealed.json", [](json& j) {
      j["obstacles"] = json::array();
      j["obstacles"].push_back(json::array());
      for (const auto& v : {std::pair{400.0, -100.0}, std::pair{600.0, -100.0},
                            std::pair{600.0, 1100.0}, std::pair{400.0, 1100.0}}) {
        j["obstacles"][0].push_back(json::array({v.first, v.second}));
      }
    });
    std::string msg;
    CHECK(run_cli("plan --scenario " + quoted(sealed) + " --library " +
                      quoted(out / "library.json") + " --out " +
                      quoted(work() / "sealed_out"),
                  &msg) == 6);
    CHECK(msg.find("closest approach") != std::string::npos);
  }
  SUBCASE("off-lattice start exits 7 with a snapping hint") {
    const fs::path off = variant_scenario("off_lattice.json", [](json& j) {
      j["start"]["pose"][0] = 50.3;
    });
    std::string msg;
    CHECK(run_cli("plan --scenario " + quoted(off) + " --library " +
                      quoted(out / "library.json") + " --out " +
                      quoted(work() / "off_out"),
                  &msg) == 7);
    CHECK(msg.find("grid") != std::string::npos);
  }
  SUBCASE("tampered library exits 5") {
    json lib = load_json_file(out / "library.json");
    lib["model_hash"] = "0000000000000000";
    const fs::path tampered = work() / "tampered_library.json";
    write_text_file(tampered, lib.dump());
    CHECK(run_cli("plan " + demo_scenario_arg() + " --library " +
                  quoted(tampered) + " --out " + quoted(work() / "tamper_out")) ==
          5);
  }
}

TEST_CASE("simulate command certifies runs and attributes failures") {
  const fs::path& out = planned_out();

  std::string msg;
  CHECK(run_cli("simulate " + demo_scenario_arg() + " --out " + quoted(out) +
                    " --seeds 2",
                &msg) == 0);
  CHECK(msg.find("PASS") != std::string::npos);
  CHECK(fs::exists(out / "certification.json"));
  CHECK(fs::exists(out / "run_seed1.csv"));
  CHECK(fs::exists(out / "run_seed2.csv"));
  CHECK(fs::exists(out / "overlay.svg"));
  const json report = load_json_file(out / "certification.json");
  CHECK(report.at("pass").get<bool>());
  CHECK(report.at("runs").size() == 2);

  SUBCASE("inadmissible disturbance exits 8 with the bound named first") {
    const fs::path dir = work() / "scaled_out";
    fs::create_directories(dir);
    std::string fail_msg;
    CHECK(run_cli("simulate " + demo_scenario_arg() + " --out " + quoted(dir) +
                      " --plan " + quoted(out / "plan.json") +
                      " --profile constant --disturbance-scale 3",
                  &fail_msg) == 8);
    CHECK(fail_msg.find("FAILED") != std::string::npos);
    const json failed = load_json_file(dir / "certification.json");
    CHECK(!failed.at("pass").get<bool>());
    const auto& failures = failed.at("runs")[0].at("failures");
    REQUIRE(!failures.empty());
    CHECK(failures[0].get<std::string>().find("disturbance exceeds") !=
          std::string::npos);
  }
}

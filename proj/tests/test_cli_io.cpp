#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mfsac/scenario.hpp"

using namespace mfsac;
namespace fs = std::filesystem;

namespace {

const std::string kScalar = std::string(MFSAC_SCENARIO_DIR) + "/scalar.json";
const std::string kBase = std::string(MFSAC_SCENARIO_DIR) + "/base.json";

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MFSAC_CLI_BIN) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("scenario files ship valid and contraction-checked") {
    for (const auto& path : {kScalar, kBase}) {
        const Scenario sc = load_scenario(path);  // throws on any violation
        CHECK(sc.sim.N >= 2);
        CHECK(sc.R.rows() == sc.sim.m);
        CHECK(sc.noise.Sigma.rows() == sc.sim.r);
        CHECK(static_cast<int>(sc.mf.x0bar.size()) == sc.sim.n);
    }
    const Scenario base = load_scenario(kBase);
    CHECK(base.sim.N == 400);
    CHECK(base.sim.n == 2);
    CHECK(build_observation_graph(base.sim.N, base.sim.alpha, base.sim.seed).n0 == 20);
}

TEST_CASE("config round-trip reparses identically") {
    const Scenario sc = load_scenario(kScalar, false);
    const auto j1 = scenario_to_json(sc);
    const Scenario sc2 = scenario_from_json(j1);
    const auto j2 = scenario_to_json(sc2);
    CHECK(j1.dump() == j2.dump());
}

TEST_CASE("malformed configs raise ConfigError with a field diagnostic") {
    const std::string dir = "cli_tmp";
    fs::create_directories(dir);
    {
        std::ofstream f(dir + "/bad.json");
        f << "{ not json";
    }
    CHECK_THROWS_AS(load_scenario(dir + "/bad.json"), ConfigError);

    auto j = scenario_to_json(load_scenario(kScalar, false));
    j["sim"].erase("dt");
    CHECK_THROWS_AS(scenario_from_json(j), ConfigError);

    j = scenario_to_json(load_scenario(kScalar, false));
    j["sim"]["mode"] = "psychic";
    try {
        scenario_from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("mode") != std::string::npos);
    }

    j = scenario_to_json(load_scenario(kScalar, false));
    j["distribution"]["zeta"] = {0.9, 0.9};
    CHECK_THROWS_AS(scenario_from_json(j), ConfigError);

    CHECK_THROWS_AS(load_scenario("does_not_exist.json"), IoError);
}

TEST_CASE("contraction violation fails the load loudly") {
    auto j = scenario_to_json(load_scenario(kScalar, false));
    j["coupling"]["Gamma"] = {{40.0}};
    const std::string dir = "cli_tmp";
    fs::create_directories(dir);
    save_scenario(scenario_from_json(j), dir + "/hot.json");
    CHECK_THROWS_AS(load_scenario(dir + "/hot.json"), ContractionViolated);
    CHECK_NOTHROW(load_scenario(dir + "/hot.json", /*check_contraction=*/false));
}

TEST_CASE("cmd_simulate writes artifacts and honors overrides") {
    // Shrink the scenario so the CLI smoke paths stay fast.
    auto j = scenario_to_json(load_scenario(kScalar, false));
    j["sim"]["N"] = 8;
    j["sim"]["T"] = 2.0;
    const std::string dir = "cli_tmp";
    fs::create_directories(dir);
    save_scenario(scenario_from_json(j), dir + "/small.json");

    CHECK(run_cli("simulate --scenario " + dir + "/small.json --out " + dir + "/run_a") == 0);
    for (const char* f : {"trajectories.csv", "costs.csv", "estimates.csv", "mass_signal.csv",
                          "meta.json", "config.json"})
        CHECK(fs::exists(dir + "/run_a/" + std::string(f)));

    CHECK(run_cli("simulate --scenario " + dir + "/small.json --mode oracle --out " + dir +
                  "/run_o") == 0);
    // Oracle mode never estimates, so its estimate file carries only a header.
    CHECK(slurp(dir + "/run_o/estimates.csv").find("\n0,") == std::string::npos);

    CHECK(run_cli("simulate --scenario " + dir + "/bad.json --out " + dir + "/x") != 0);
    CHECK(run_cli("simulate --scenario missing.json") != 0);
}

TEST_CASE("cmd_simulate determinism: same seed, bit-identical CSVs") {
    const std::string dir = "cli_tmp";
    REQUIRE(fs::exists(dir + "/small.json"));
    CHECK(run_cli("simulate --scenario " + dir + "/small.json --out " + dir + "/det1") == 0);
    CHECK(run_cli("simulate --scenario " + dir + "/small.json --out " + dir + "/det2") == 0);
    for (const char* f : {"trajectories.csv", "costs.csv", "estimates.csv", "mass_signal.csv",
                          "config.json"})
        CHECK(slurp(dir + "/det1/" + std::string(f)) == slurp(dir + "/det2/" + std::string(f)));
    CHECK(run_cli("simulate --scenario " + dir + "/small.json --seed 777 --out " + dir +
                  "/det3") == 0);
    CHECK(slurp(dir + "/det1/mass_signal.csv") != slurp(dir + "/det3/mass_signal.csv"));
}

TEST_CASE("cmd_solve_mf writes the mass signal") {
    const std::string dir = "cli_tmp";
    CHECK(run_cli("solve-mf --scenario " + kScalar + " --out " + dir + "/mf") == 0);
    const std::string csv = slurp(dir + "/mf/mass_signal.csv");
    CHECK(csv.rfind("t,x0", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 100);
    // gamma = 0 variant: constant signal equal to c.
    auto j = scenario_to_json(load_scenario(kScalar, false));
    j["coupling"]["Gamma"] = {{0.0}};
    j["coupling"]["eta"] = {0.0};
    save_scenario(scenario_from_json(j), dir + "/flat.json");
    CHECK(run_cli("solve-mf --scenario " + dir + "/flat.json --out " + dir + "/mf0") == 0);
    const Scenario flat = load_scenario(dir + "/flat.json", false);
    std::ifstream f(dir + "/mf0/mass_signal.csv");
    std::string line;
    std::getline(f, line);
    int rows = 0;
    while (std::getline(f, line)) {
        const double v = std::stod(line.substr(line.find(',') + 1));
        CHECK(v == doctest::Approx(0.6).epsilon(1e-12));
        ++rows;
    }
    CHECK(rows > 100);
}

TEST_CASE("cmd_evaluate produces the three report kinds") {
    const std::string dir = "cli_tmp";
    REQUIRE(fs::exists(dir + "/run_a"));
    REQUIRE(fs::exists(dir + "/run_o"));
    CHECK(run_cli("evaluate --scenario " + dir + "/small.json --nash --probes 3 " + dir +
                  "/run_a --out " + dir + "/rep") == 0);
    CHECK(fs::exists(dir + "/rep/nash_run_a.csv"));
    CHECK(run_cli("evaluate --scenario " + dir + "/small.json --equal-cost " + dir + "/run_a " +
                  dir + "/run_o --out " + dir + "/rep") == 0);
    CHECK(fs::exists(dir + "/rep/equal_cost.csv"));
    CHECK(run_cli("evaluate --scenario " + dir + "/small.json --consistency " + dir +
                  "/run_a --out " + dir + "/rep") == 0);
    CHECK(fs::exists(dir + "/rep/consistency_run_a.csv"));

    // Equal-cost of a run against itself: zero medians.
    CHECK(run_cli("evaluate --scenario " + dir + "/small.json --equal-cost " + dir + "/run_a " +
                  dir + "/run_a --out " + dir + "/rep0") == 0);
    const std::string csv = slurp(dir + "/rep0/equal_cost.csv");
    CHECK(csv.find("median,0,0") != std::string::npos);

    CHECK(run_cli("evaluate --scenario " + dir + "/small.json --nash " + dir +
                  "/never_ran") != 0);
    CHECK(run_cli("evaluate --scenario " + dir + "/small.json " + dir + "/run_a") != 0);
}

TEST_CASE("cmd_sweep derives per-value seeds and directories") {
    const std::string dir = "cli_tmp";
    REQUIRE(fs::exists(dir + "/small.json"));
    CHECK(run_cli("sweep --scenario " + dir + "/small.json --param N --values 4 6 --out " + dir +
                  "/sweep") == 0);
    CHECK(fs::exists(dir + "/sweep/N_4/costs.csv"));
    CHECK(fs::exists(dir + "/sweep/N_6/costs.csv"));
    const std::string m4 = slurp(dir + "/sweep/N_4/config.json");
    const std::string m6 = slurp(dir + "/sweep/N_6/config.json");
    CHECK(m4 != m6);  // seeds (and N) differ deterministically
    CHECK(run_cli("sweep --scenario " + dir + "/small.json --param bogus --values 1") != 0);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfsac/evaluation.hpp"
#include "mfsac/scenario.hpp"

using namespace mfsac;

namespace {

Scenario tiny_scalar(int N = 8, double T = 4.0, std::uint64_t seed = 21) {
    Scenario sc = load_scenario(std::string(MFSAC_SCENARIO_DIR) + "/scalar.json",
                                /*check_contraction=*/false);
    sc.sim.N = N;
    sc.sim.T = T;
    sc.sim.seed = seed;
    sc.sim.traj_agents = N;
    return sc;
}

}  // namespace

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
    CHECK(median({7.0}) == 7.0);
}

TEST_CASE("lra_cost of a constant integrand is the constant") {
    // x - mass = 1, u = 2, Q = 1, R = 1: running cost = 1 + 4 = 5 at all times.
    std::vector<double> times;
    std::vector<Vector> xs, us, mass;
    for (int k = 0; k <= 100; ++k) {
        times.push_back(0.1 * k);
        xs.push_back(Vector::Constant(1, 1.5));
        mass.push_back(Vector::Constant(1, 0.5));
        us.push_back(Vector::Constant(1, 2.0));
    }
    const Matrix Q = Matrix::Identity(1, 1), R = Matrix::Identity(1, 1);
    CHECK(lra_cost(times, xs, us, mass, Q, R) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(lra_cost(times, xs, us, mass, Q, R, 0.5) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("lra_cost_from_cum matches the running integrals") {
    // cum(t) = c * t gives the window average c regardless of the window.
    std::vector<double> times, ct, cc;
    for (int k = 0; k <= 200; ++k) {
        times.push_back(0.05 * k);
        ct.push_back(0.7 * times.back());
        cc.push_back(0.2 * times.back());
    }
    CHECK(lra_cost_from_cum(times, ct, cc) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(lra_cost_from_cum(times, ct, cc, 0.3) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("cost_ledger window-averages every agent") {
    const Scenario sc = tiny_scalar();
    const RunArtifacts art = run_scenario(sc);
    const CostLedger led = cost_ledger(art);
    REQUIRE(static_cast<int>(led.J.size()) == sc.sim.N);
    for (int i = 0; i < sc.sim.N; ++i) {
        CHECK(led.J[i] > 0.0);
        CHECK(led.J[i] == doctest::Approx(led.tracking[i] + led.control[i]));
        CHECK(led.J[i] ==
              doctest::Approx(lra_cost_from_cum(art.rec_times, art.cum_track[i],
                                                art.cum_ctrl[i])));
    }
}

TEST_CASE("equal_cost_report on identical runs gives zero gaps") {
    const Scenario sc = tiny_scalar();
    const RunArtifacts art = run_scenario(sc);
    const EqualCostReport rep = equal_cost_report(art, art);
    CHECK(rep.median_abs == 0.0);
    CHECK(rep.median_rel == 0.0);
    for (double g : rep.abs_gap) CHECK(g == 0.0);
}

TEST_CASE("equal_cost_report flags different runs") {
    const Scenario a = tiny_scalar(8, 4.0, 21);
    Scenario b = tiny_scalar(8, 4.0, 21);
    b.sim.mode = Mode::Oracle;
    const EqualCostReport rep = equal_cost_report(run_scenario(a), run_scenario(b));
    CHECK(rep.median_abs > 0.0);
    CHECK(rep.median_rel > 0.0);
}

TEST_CASE("best_response_cost replays the played noise") {
    // For an oracle run the played policy is already a best response to the
    // mean field; against the *realized* finite-N mass its cost can only be
    // improved by a margin that shrinks with the tracking residual, so the
    // gap must be small relative to the cost level.
    Scenario sc = tiny_scalar(12, 6.0, 31);
    sc.sim.mode = Mode::Oracle;
    const RunArtifacts art = run_scenario(sc);
    const CostLedger led = cost_ledger(art);
    for (int agent : {0, 5}) {
        const double br = best_response_cost(sc, art, agent);
        CHECK(br > 0.0);
        CHECK(br < 5.0 * led.J[agent] + 1.0);  // same order of magnitude
    }
}

TEST_CASE("nash_gap report structure") {
    Scenario sc = tiny_scalar(12, 6.0, 31);
    const RunArtifacts art = run_scenario(sc);
    const NashGapReport rep = nash_gap(sc, art, {0, 3, 7});
    REQUIRE(rep.agents.size() == 3);
    CHECK(rep.N == 12);
    double mx = -1e300;
    for (std::size_t k = 0; k < rep.gap.size(); ++k) {
        CHECK(rep.gap[k] == doctest::Approx(rep.J_played[k] - rep.J_best[k]));
        mx = std::max(mx, rep.gap[k]);
    }
    CHECK(rep.epsilon_observed == doctest::Approx(std::max(mx, 0.0)));
}

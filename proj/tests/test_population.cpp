#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfsac/population.hpp"

using namespace mfsac;

namespace {

ThetaParams scalar_theta(double a, double b, double q) {
    ThetaParams t;
    t.A = Matrix::Constant(1, 1, a);
    t.B = Matrix::Constant(1, 1, b);
    t.Q = Matrix::Constant(1, 1, q);
    return t;
}

DistributionSpec two_atoms(double z0 = 0.5) {
    DistributionSpec d;
    d.family = Family::CategoricalAtoms;
    d.atoms = {scalar_theta(-0.6, 1.0, 0.8), scalar_theta(-1.2, 0.8, 0.5)};
    d.zeta = Vector(2);
    d.zeta << z0, 1.0 - z0;
    d.floor_delta = 1e-4;
    return d;
}

ThetaSet scalar_set() {
    ThetaSet s;
    s.box_lo = -5.0;
    s.box_hi = 5.0;
    s.controllability_margin = 1e-6;
    s.observability_margin = 1e-6;
    s.q_floor = 0.05;
    s.anchors = two_atoms().atoms;
    return s;
}

}  // namespace

TEST_CASE("theta_distance is the stacked Frobenius metric") {
    const ThetaParams a = scalar_theta(0.0, 0.0, 0.0);
    const ThetaParams b = scalar_theta(3.0, 4.0, 0.0);
    CHECK(theta_distance(a, b) == doctest::Approx(5.0));
    CHECK(theta_distance(a, a) == 0.0);
    CHECK(theta_distance(a, b) == theta_distance(b, a));
    const ThetaParams c = scalar_theta(1.0, 1.0, 1.0);
    CHECK(theta_distance(a, b) <= theta_distance(a, c) + theta_distance(c, b));
}

TEST_CASE("sample_theta categorical frequencies and determinism") {
    const DistributionSpec d = two_atoms(0.7);
    const auto draw1 = sample_theta(d, 42, 4000);
    const auto draw2 = sample_theta(d, 42, 4000);
    REQUIRE(draw1.size() == 4000);
    int n0 = 0;
    for (std::size_t i = 0; i < draw1.size(); ++i) {
        CHECK(theta_distance(draw1[i], draw2[i]) == 0.0);
        if (theta_distance(draw1[i], d.atoms[0]) < 1e-12) ++n0;
    }
    // Effective probability (1-2*delta)*0.7 + delta; binomial 4-sigma band.
    const double p = (1.0 - 2 * d.floor_delta) * 0.7 + d.floor_delta;
    const double sd = std::sqrt(p * (1 - p) / 4000.0);
    CHECK(std::abs(n0 / 4000.0 - p) < 4 * sd);

    const auto other = sample_theta(d, 43, 4000);
    int diff = 0;
    for (std::size_t i = 0; i < other.size(); ++i)
        if (theta_distance(draw1[i], other[i]) > 0) ++diff;
    CHECK(diff > 100);  // different seed gives a genuinely different draw
}

TEST_CASE("density and quadrature for the categorical family") {
    const DistributionSpec d = two_atoms(0.3);
    const double p0 = density(d, d.atoms[0]);
    const double p1 = density(d, d.atoms[1]);
    CHECK(p0 == doctest::Approx((1 - 2e-4) * 0.3 + 1e-4));
    CHECK(p1 == doctest::Approx((1 - 2e-4) * 0.7 + 1e-4));
    CHECK(p0 >= d.floor_delta);

    const auto nodes = quadrature_nodes(d);
    REQUIRE(nodes.size() == 2);
    double wsum = 0.0;
    for (const auto& nd : nodes) wsum += nd.weight;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("truncated gaussian family: segment geometry and quadrature mass") {
    DistributionSpec d;
    d.family = Family::TruncatedGaussian1D;
    d.seg_lo = scalar_theta(-1.5, 1.0, 0.5);
    d.seg_hi = scalar_theta(-0.5, 1.2, 0.9);
    d.grid_size = 201;
    d.zeta = Vector(2);
    d.zeta << 0.4, 0.2;
    d.mean_lo = 0.0;
    d.mean_hi = 1.0;
    d.std_lo = 0.02;
    d.std_hi = 1.0;
    d.floor_delta = 1e-4;
    d.validate();

    CHECK(theta_distance(d.theta_at(0.0), d.seg_lo) == 0.0);
    CHECK(theta_distance(d.theta_at(1.0), d.seg_hi) == 0.0);
    for (double l : {0.1, 0.37, 0.92})
        CHECK(d.lambda_of(d.theta_at(l)) == doctest::Approx(l).epsilon(1e-10));

    const auto nodes = quadrature_nodes(d);
    REQUIRE(static_cast<int>(nodes.size()) == d.grid_size);
    double wsum = 0.0;
    for (const auto& nd : nodes) wsum += nd.weight;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));

    // Unimodal around the mean with a strictly positive floor.
    CHECK(density(d, d.theta_at(0.4)) > density(d, d.theta_at(0.95)));
    CHECK(density(d, d.theta_at(0.999)) > 0.0);

    const auto draws = sample_theta(d, 7, 2000);
    double lam_mean = 0.0;
    for (const auto& th : draws) lam_mean += d.lambda_of(th);
    lam_mean /= 2000.0;
    CHECK(std::abs(lam_mean - 0.4) < 0.05);
}

TEST_CASE("invalid distribution specs are rejected") {
    DistributionSpec d = two_atoms();
    d.zeta(0) = 0.8;  // mass 1.3
    CHECK_THROWS_AS(d.validate(), InvalidSpec);
    d = two_atoms();
    d.zeta.resize(3);
    d.zeta << 0.2, 0.3, 0.5;
    CHECK_THROWS_AS(d.validate(), InvalidSpec);
}

TEST_CASE("project_theta leaves feasible points alone") {
    const ThetaSet set = scalar_set();
    const ThetaParams t = scalar_theta(-0.6, 1.0, 0.8);
    const ThetaParams p = project_theta(t, set);
    CHECK(theta_distance(t, p) < 1e-12);
}

TEST_CASE("project_theta clamps the box and restores margins") {
    const ThetaSet set = scalar_set();
    ThetaParams raw = scalar_theta(-40.0, 9.0, 0.8);
    const ThetaParams p = project_theta(raw, set);
    CHECK(set.contains(p));
    CHECK(p.A(0, 0) >= set.box_lo);
    CHECK(p.B(0, 0) <= set.box_hi);

    // Zero B (uncontrollable): must move to a feasible point.
    raw = scalar_theta(-0.6, 0.0, 0.8);
    const ThetaParams p2 = project_theta(raw, set);
    CHECK(set.contains(p2));
}

TEST_CASE("project_theta keeps a supplied Q verbatim") {
    const ThetaSet set = scalar_set();
    Matrix knownQ = Matrix::Constant(1, 1, 0.8);
    ThetaParams raw = scalar_theta(-0.6, 0.0, -3.0);
    const ThetaParams p = project_theta(raw, set, knownQ);
    CHECK(p.Q(0, 0) == 0.8);
    CHECK(set.contains(p));
}

TEST_CASE("project_theta approximates the nearest feasible point") {
    // Mildly infeasible input: the projection should not move much farther
    // than a fine grid search over feasible scalar candidates.
    const ThetaSet set = scalar_set();
    const ThetaParams raw = scalar_theta(-0.6, 1.0, 0.01);  // q below the floor
    const ThetaParams p = project_theta(raw, set);
    REQUIRE(set.contains(p));
    double best = std::numeric_limits<double>::infinity();
    for (double a = -2.0; a <= 0.5; a += 0.01)
        for (double b = 0.5; b <= 1.5; b += 0.01) {
            const ThetaParams cand = scalar_theta(a, b, set.q_floor);
            if (set.contains(cand)) best = std::min(best, theta_distance(raw, cand));
        }
    CHECK(theta_distance(raw, p) <= 1.5 * best + 1e-9);
}

TEST_CASE("contraction_constant matches the scalar hand value") {
    // Single atom a=-1, b=1, q=1, R=1, gamma=0.5:
    // pi = sqrt(2)-1, A* = -sqrt(2), Int ||e^{A* t}|| dt = 1/sqrt(2),
    // constant = 0.5 * 1 * 1 * (1/2) = 0.25.
    DistributionSpec d;
    d.family = Family::CategoricalAtoms;
    d.atoms = {scalar_theta(-1.0, 1.0, 1.0)};
    d.zeta = Vector::Constant(1, 1.0);
    d.floor_delta = 0.0;
    const Matrix R = Matrix::Identity(1, 1);
    CHECK(contraction_constant(d, R, 0.5) == doctest::Approx(0.25).epsilon(1e-3));
    CHECK(contraction_constant(d, R, 0.0) == doctest::Approx(0.0));
    // Mixture value is the zeta-weighted average of per-atom terms.
    DistributionSpec d2 = two_atoms(1.0);
    d2.floor_delta = 0.0;
    DistributionSpec d3 = two_atoms(0.0);
    d3.floor_delta = 0.0;
    DistributionSpec dm = two_atoms(0.25);
    dm.floor_delta = 0.0;
    const double c0 = contraction_constant(d2, R, 0.15);
    const double c1 = contraction_constant(d3, R, 0.15);
    const double cm = contraction_constant(dm, R, 0.15);
    CHECK(cm == doctest::Approx(0.25 * c0 + 0.75 * c1).epsilon(1e-6));
}

#pragma once

#include <optional>
#include <vector>

#include "mfsac/linalg.hpp"

namespace mfsac {

// One agent's dynamical and cost triple.
struct ThetaParams {
    Matrix A;  // n x n
    Matrix B;  // n x m
    Matrix Q;  // n x n symmetric PSD

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
};

double theta_distance(const ThetaParams& a, const ThetaParams& b);
double theta_norm(const ThetaParams& a);

// The compact feasible set: entrywise box plus quantitative
// controllability/observability margins and a cost-weight floor.
struct ThetaSet {
    double box_lo = -10.0;
    double box_hi = 10.0;
    double controllability_margin = 1e-8;
    double observability_margin = 1e-8;
    double q_floor = 0.0;
    double contraction_budget = 1.0;
    std::vector<ThetaParams> anchors;  // known feasible points, used by the projection

    bool contains(const ThetaParams& theta) const;
};

enum class Family { CategoricalAtoms, TruncatedGaussian1D };

// Parametric family F_zeta over the feasible set. Two concrete families:
//   CategoricalAtoms    - K fixed atoms, zeta on the simplex
//   TruncatedGaussian1D - theta on the segment theta(l) = (1-l)*seg_lo + l*seg_hi,
//                         l in [0,1], zeta = (mean, std) of a truncated normal
// Both are mixed with a uniform floor component of mass delta so the density
// is bounded away from zero on the support.
struct DistributionSpec {
    Family family = Family::CategoricalAtoms;

    std::vector<ThetaParams> atoms;
    Vector zeta;  // probability vector (categorical) or (mean, std) (gaussian)

    ThetaParams seg_lo, seg_hi;
    int grid_size = 101;

    // zeta domain P (gaussian family)
    double mean_lo = 0.0, mean_hi = 1.0;
    double std_lo = 0.02, std_hi = 1.0;

    double floor_delta = 1e-4;

    int num_atoms() const { return static_cast<int>(atoms.size()); }
    ThetaParams theta_at(double lambda) const;  // segment point (gaussian family)
    double lambda_of(const ThetaParams& theta) const;  // segment coordinate of nearest point
    void validate() const;
};

struct NoiseSpec {
    Matrix D;      // n x r
    Matrix Sigma;  // r x r PSD
};

std::vector<ThetaParams> sample_theta(const DistributionSpec& spec, std::uint64_t seed, int count);

// Nearest feasible point: entrywise box clamp, then a damped blend toward the
// nearest anchor until the margin checks pass. When known_Q is supplied the
// output Q equals it verbatim.
ThetaParams project_theta(const ThetaParams& raw, const ThetaSet& set,
                          const std::optional<Matrix>& known_Q = std::nullopt);

double density(const DistributionSpec& spec, const ThetaParams& theta);

// Density evaluated at a zeta other than spec.zeta (used by the MLE search).
double density_at(const DistributionSpec& spec, const Vector& zeta, const ThetaParams& theta);

struct QuadratureNode {
    ThetaParams theta;
    double weight;
};

std::vector<QuadratureNode> quadrature_nodes(const DistributionSpec& spec);
std::vector<QuadratureNode> quadrature_nodes_at(const DistributionSpec& spec, const Vector& zeta);

// The contraction integral: ||R^{-1}|| |gamma| Int ||Q|| ||B||^2 (Int ||e^{A* tau}|| dtau)^2 dF.
double contraction_constant(const DistributionSpec& spec, const Matrix& R, double gamma);

}  // namespace mfsac

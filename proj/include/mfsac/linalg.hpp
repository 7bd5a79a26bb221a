#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mfsac/errors.hpp"

namespace mfsac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fitted bound ||Phi(t,s)|| <= gain * exp(-decay_rate * (t-s)).
struct StabilityEstimate {
    double gain;        // beta >= 1
    double decay_rate;  // rho > 0
};

// Solves A'Pi + Pi A - Pi B R^{-1} B' Pi + Q = 0 for the stabilizing
// positive definite Pi. Hamiltonian stable-subspace method followed by
// Newton-Kleinman refinement of the residual.
Matrix care_solve(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

// Solves A'Pi + Pi A = -Q for Hurwitz A and Q > 0.
Matrix lyapunov_solve(const Matrix& A, const Matrix& Q);

// e^{A t} (scaling-and-squaring Pade).
Matrix expm(const Matrix& A, double t = 1.0);

// Smallest singular value of [B, AB, ..., A^{n-1}B] at least `margin`.
bool check_controllable(const Matrix& A, const Matrix& B, double margin);

// Dual test on (A', (Q^{1/2})').
bool check_observable(const Matrix& Q, const Matrix& A, double margin);

// Symmetric PSD square root via eigendecomposition; negative eigenvalues clipped to 0.
Matrix psd_sqrt(const Matrix& Q);

double max_real_eigenvalue(const Matrix& A);
bool is_hurwitz(const Matrix& A);

// Least squares fit of log||Phi(t,0)|| against log(beta) - rho*t.
// Throws NotDecaying when the fitted rho is <= 0.
StabilityEstimate fit_stability_bound(const std::vector<std::pair<double, double>>& samples);

}  // namespace mfsac

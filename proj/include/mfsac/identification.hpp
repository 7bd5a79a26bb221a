#pragma once

#include "mfsac/population.hpp"
#include "mfsac/rng.hpp"

namespace mfsac {

// a(t) = 1/f(r(t)) with f(x) = max(1, log^2(x+e)): f >= 1, slowly increasing,
// and 1/(x f(x)) is integrable at infinity.
double gain_schedule(double r);

// Continuous-time RWLS estimator state, kept in information form:
// Psi_inv accumulates a(t) psi psi' dt, which preserves positive definiteness
// under any step size; Psi is maintained exactly via rank-one updates.
struct RwlsState {
    Matrix upsilon;  // d x q estimate
    Matrix Psi;      // d x d gain, PD
    Matrix Psi_inv;  // information matrix
    double r = 0.0;  // excitation accumulator

    static RwlsState init(int regressor_dim, int output_dim, double kappa = 100.0);
};

// Shared discretized update. `increment_measurement` distinguishes the
// dynamical-parameter form (residual dy' - psi' upsilon dt) from the
// cost-parameter form (residual (y' - psi' upsilon) dt).
void rwls_step(RwlsState& st, const Vector& psi, const Vector& y, double dt,
               bool increment_measurement);

// Dynamical parameters: psi = [x; u], measurement dx; upsilon' = [Ahat, Bhat].
void rwls_dyn_step(RwlsState& st, const Vector& x, const Vector& u, const Vector& dx, double dt);

Matrix rwls_dyn_A(const RwlsState& st, int n);
Matrix rwls_dyn_B(const RwlsState& st, int n, int m);

// Cost-function parameters: psi = [x; 1], measurement -(Bhat')^{-1} R u;
// upsilon' = [Pihat, shat]. Requires Bhat invertible (square systems).
void rwls_cost_step(RwlsState& st, const Vector& x, const Vector& u, const Matrix& B_hat,
                    const Matrix& R, double dt);

Matrix rwls_cost_Pi(const RwlsState& st, int n);
Vector rwls_cost_s(const RwlsState& st, int n);

// Q = -A' Pi' - Pi A + Pi' B R^{-1} B' Pi, symmetrized.
Matrix recover_Q(const Matrix& A_hat, const Matrix& B_hat, const Matrix& Pi_hat, const Matrix& R);

struct MleResult {
    Vector zeta_hat;
    double neg_log_likelihood = 0.0;
    int n_observed = 0;
};

// argmin over P of the scaled negative log-likelihood. Categorical family:
// exact simplex argmin (water-filling against the density floor). Gaussian
// family: grid search refined by per-coordinate golden section.
MleResult mle_estimate(const DistributionSpec& spec, const std::vector<ThetaParams>& thetas);

// xi_k with xi_0 = xi_1 = 0 and xi_k^2 = log(k)/sqrt(k) for k >= 2.
double dither_amplitude(int k);

// Per-agent diminishing excitation: xi_k * (eps(t) - eps(k)) on t in (k, k+1],
// driven by a dedicated Wiener stream independent of the plant noise.
struct DitherState {
    int k = 0;
    Vector accum;  // eps(t) - eps(k)

    static DitherState init(int m) { return DitherState{0, Vector::Zero(m)}; }

    // Advance by dt (crossing an integer boundary resets the bridge) and
    // return the dither value at the new time.
    Vector step(double t_new, double dt, RngStream& rng);
    Vector value() const { return dither_amplitude(k) * accum; }
};

}  // namespace mfsac

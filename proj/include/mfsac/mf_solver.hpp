#pragma once

#include "mfsac/population.hpp"

namespace mfsac {

// Uniform-grid vector signal on [t0, t0 + h*(size-1)], linearly interpolated
// inside the grid and clamped to the end values outside it.
struct GridSignal {
    double t0 = 0.0;
    double h = 1e-2;
    std::vector<Vector> values;

    int size() const { return static_cast<int>(values.size()); }
    double t_end() const { return t0 + h * (size() - 1); }
    Vector at(double t) const;
    double sup_norm() const;
};

using MassSignal = GridSignal;       // x*(tau)
using OffsetTrajectory = GridSignal; // s_theta(tau)

// Affine cost-coupling m(x) = Gamma*x + c, Lipschitz constant gamma = ||Gamma||.
struct CouplingSpec {
    Matrix Gamma;
    Vector c;
    Vector eta;

    double gamma() const;
    Vector apply(const Vector& x) const { return Gamma * x + c; }
};

// Backward RK4 integration of the mass offset equation
//   -ds/dtau = A*' s - Q x*(tau)
// on the grid of xstar, from the steady-state terminal closure
//   s(t_end) = (A*')^{-1} Q x*(t_end).
OffsetTrajectory solve_offset(const ThetaParams& theta, const Matrix& Pi, const Matrix& R,
                              const MassSignal& xstar);

// Forward RK4 of the noiseless closed-loop mean
//   dxbar/dtau = A* xbar - B R^{-1} B' s(tau), xbar(t0) = x0.
GridSignal solve_agent_mean(const ThetaParams& theta, const Matrix& Pi, const Matrix& R,
                            const OffsetTrajectory& s, const Vector& x0);

struct MfSolveResult {
    MassSignal xstar;
    int iterations = 0;
    double final_gap = 0.0;
    double observed_ratio = 0.0;   // worst successive-gap ratio after the first sweep
    double contraction = 0.0;      // the contraction constant
};

struct MfSolveOptions {
    double t0 = 0.0;
    double horizon = 20.0;  // T_h
    double h = 1e-2;        // grid step
    double tol = 1e-9;
    int max_iterations = 200;
    Vector x0bar;           // per-theta initial mean; zero vector if empty
    bool check_contraction = true;
};

// Picard iteration on the composite map
//   x* -> (Pi_th, s_th, xbar_th) -> xbar = sum w_th xbar_th -> m(xbar + eta).
MfSolveResult solve_mf_system(const DistributionSpec& spec, const CouplingSpec& coupling,
                              const Matrix& R, const MfSolveOptions& opt);

MfSolveResult solve_mf_system_at(const DistributionSpec& spec, const Vector& zeta,
                                 const CouplingSpec& coupling, const Matrix& R,
                                 const MfSolveOptions& opt);

}  // namespace mfsac

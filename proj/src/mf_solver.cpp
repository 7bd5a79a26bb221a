#include "mfsac/mf_solver.hpp"

#include <cmath>

namespace mfsac {

Vector GridSignal::at(double t) const {
    if (values.empty()) throw GridMismatch("GridSignal: empty");
    const double pos = (t - t0) / h;
    if (pos <= 0.0) return values.front();
    if (pos >= size() - 1) return values.back();
    const int i = static_cast<int>(pos);
    const double frac = pos - i;
    return (1.0 - frac) * values[i] + frac * values[i + 1];
}

double GridSignal::sup_norm() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, v.norm());
    return m;
}

double CouplingSpec::gamma() const {
    Eigen::JacobiSVD<Matrix> svd(Gamma);
    return svd.singularValues().maxCoeff();
}

OffsetTrajectory solve_offset(const ThetaParams& theta, const Matrix& Pi, const Matrix& R,
                              const MassSignal& xstar) {
    const Matrix S = theta.B * R.inverse() * theta.B.transpose();
    const Matrix AstarT = (theta.A - S * Pi).transpose();
    if (!is_hurwitz(AstarT)) throw NotHurwitz("solve_offset: closed loop not Hurwitz");

    const int M = xstar.size();
    OffsetTrajectory s;
    s.t0 = xstar.t0;
    s.h = xstar.h;
    s.values.assign(M, Vector::Zero(theta.n()));

    // ds/dtau = -A*' s + Q x*; stable when integrated backward in tau.
    auto f = [&](const Vector& sv, const Vector& xv) -> Vector {
        return -AstarT * sv + theta.Q * xv;
    };

    s.values[M - 1] = AstarT.fullPivLu().solve(theta.Q * xstar.values[M - 1]);
    const double hs = -xstar.h;
    for (int i = M - 1; i > 0; --i) {
        const Vector& x1 = xstar.values[i];
        const Vector xm = 0.5 * (xstar.values[i] + xstar.values[i - 1]);
        const Vector& x0 = xstar.values[i - 1];
        const Vector& y = s.values[i];
        const Vector k1 = f(y, x1);
        const Vector k2 = f(y + 0.5 * hs * k1, xm);
        const Vector k3 = f(y + 0.5 * hs * k2, xm);
        const Vector k4 = f(y + hs * k3, x0);
        s.values[i - 1] = y + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!s.values[i - 1].allFinite()) throw NonFinite("solve_offset: diverged");
    }
    return s;
}

GridSignal solve_agent_mean(const ThetaParams& theta, const Matrix& Pi, const Matrix& R,
                            const OffsetTrajectory& s, const Vector& x0) {
    const Matrix BRB = theta.B * R.inverse() * theta.B.transpose();
    const Matrix Astar = theta.A - BRB * Pi;

    const int M = s.size();
    GridSignal xbar;
    xbar.t0 = s.t0;
    xbar.h = s.h;
    xbar.values.assign(M, x0);

    auto f = [&](const Vector& xv, const Vector& sv) -> Vector {
        return Astar * xv - BRB * sv;
    };

    const double h = s.h;
    for (int i = 0; i + 1 < M; ++i) {
        const Vector& s0 = s.values[i];
        const Vector sm = 0.5 * (s.values[i] + s.values[i + 1]);
        const Vector& s1 = s.values[i + 1];
        const Vector& y = xbar.values[i];
        const Vector k1 = f(y, s0);
        const Vector k2 = f(y + 0.5 * h * k1, sm);
        const Vector k3 = f(y + 0.5 * h * k2, sm);
        const Vector k4 = f(y + h * k3, s1);
        xbar.values[i + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!xbar.values[i + 1].allFinite()) throw NonFinite("solve_agent_mean: diverged");
    }
    return xbar;
}

MfSolveResult solve_mf_system_at(const DistributionSpec& spec, const Vector& zeta,
                                 const CouplingSpec& coupling, const Matrix& R,
                                 const MfSolveOptions& opt) {
    const auto nodes = quadrature_nodes_at(spec, zeta);
    const int n = nodes.front().theta.n();
    const Vector x0 = opt.x0bar.size() == n ? opt.x0bar : Vector::Zero(n).eval();

    MfSolveResult res;
    if (opt.check_contraction) {
        res.contraction = contraction_constant(spec, R, coupling.gamma());
        if (res.contraction >= 1.0)
            throw ContractionViolated("solve_mf_system: contraction constant >= 1");
    }

    std::vector<Matrix> Pis;
    Pis.reserve(nodes.size());
    for (const auto& nd : nodes) Pis.push_back(care_solve(nd.theta.A, nd.theta.B, nd.theta.Q, R));

    const int M = static_cast<int>(std::lround(opt.horizon / opt.h)) + 1;
    MassSignal xstar;
    xstar.t0 = opt.t0;
    xstar.h = opt.h;
    xstar.values.assign(M, coupling.apply(x0 + coupling.eta));

    double prev_gap = -1.0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        std::vector<Vector> xbar(M, Vector::Zero(n));
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const auto s = solve_offset(nodes[k].theta, Pis[k], R, xstar);
            const auto xb = solve_agent_mean(nodes[k].theta, Pis[k], R, s, x0);
            for (int i = 0; i < M; ++i) xbar[i] += nodes[k].weight * xb.values[i];
        }
        double gap = 0.0;
        for (int i = 0; i < M; ++i) {
            Vector next = coupling.apply(xbar[i] + coupling.eta);
            gap = std::max(gap, (next - xstar.values[i]).norm());
            xstar.values[i] = std::move(next);
        }
        res.iterations = it;
        res.final_gap = gap;
        if (prev_gap > 1e-13 && gap > 1e-13)
            res.observed_ratio = std::max(res.observed_ratio, gap / prev_gap);
        prev_gap = gap;
        if (gap < opt.tol) {
            res.xstar = std::move(xstar);
            return res;
        }
    }
    throw MaxIterations("solve_mf_system: Picard iteration did not converge");
}

MfSolveResult solve_mf_system(const DistributionSpec& spec, const CouplingSpec& coupling,
                              const Matrix& R, const MfSolveOptions& opt) {
    return solve_mf_system_at(spec, spec.zeta, coupling, R, opt);
}

}  // namespace mfsac

#include "mfsac/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace mfsac {

namespace {

double care_residual_norm(const Matrix& A, const Matrix& S, const Matrix& Q, const Matrix& Pi) {
    return (A.transpose() * Pi + Pi * A - Pi * S * Pi + Q).norm();
}

// A'X + X A = -Q via the Kronecker linear system; fine for the dense
// low-dimensional systems in scope.
Matrix lyapunov_kron(const Matrix& A, const Matrix& Q) {
    const Eigen::Index n = A.rows();
    const Matrix I = Matrix::Identity(n, n);
    Matrix L = Eigen::kroneckerProduct(I, A.transpose()).eval() +
               Eigen::kroneckerProduct(A.transpose(), I).eval();
    Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
    Eigen::VectorXd x = L.fullPivLu().solve(rhs);
    Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
    return 0.5 * (X + X.transpose());
}

}  // namespace

double max_real_eigenvalue(const Matrix& A) {
    return A.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& A) {
    return max_real_eigenvalue(A) < 0.0;
}

Matrix psd_sqrt(const Matrix& Q) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Q + Q.transpose()));
    Vector lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Matrix expm(const Matrix& A, double t) {
    if (!A.allFinite() || !std::isfinite(t)) throw NonFinite("expm: non-finite input");
    Matrix E = (A * t).exp();
    if (!E.allFinite()) throw NonFinite("expm: overflow");
    return E;
}

Matrix care_solve(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
        R.rows() != B.cols() || R.cols() != B.cols()) {
        throw InvalidSpec("care_solve: dimension mismatch");
    }
    Eigen::LLT<Matrix> Rchol(R);
    if (Rchol.info() != Eigen::Success) throw InvalidSpec("care_solve: R not positive definite");
    const Matrix S = B * Rchol.solve(B.transpose());

    Matrix H(2 * n, 2 * n);
    H << A, -S, -Q, -A.transpose();

    Eigen::ComplexEigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success) throw IllConditioned("care_solve: Hamiltonian eigensolve failed");

    Eigen::MatrixXcd basis(2 * n, n);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
        if (es.eigenvalues()(j).real() < 0.0) {
            if (k == n) throw NotStabilizable("care_solve: too many stable Hamiltonian eigenvalues");
            basis.col(k++) = es.eigenvectors().col(j);
        }
    }
    if (k != n) throw NotStabilizable("care_solve: Hamiltonian has eigenvalues on the imaginary axis");

    const Eigen::MatrixXcd X = basis.topRows(n);
    const Eigen::MatrixXcd Y = basis.bottomRows(n);
    Eigen::FullPivLU<Eigen::MatrixXcd> luXt(X.transpose());
    if (!luXt.isInvertible()) throw NotStabilizable("care_solve: stable subspace not a graph");
    // Pi = Y X^{-1}, computed as (X^{-T} Y^T)^T.
    Matrix Pi = luXt.solve(Y.transpose()).transpose().real();
    Pi = 0.5 * (Pi + Pi.transpose().eval());

    // Newton-Kleinman: each sweep solves a Lyapunov equation at the current
    // closed loop and converges quadratically near the solution.
    const double tol_scale = 1.0 + Pi.squaredNorm();
    for (int it = 0; it < 50; ++it) {
        if (care_residual_norm(A, S, Q, Pi) <= 1e-11 * tol_scale) break;
        const Matrix Acl = A - S * Pi;
        if (!is_hurwitz(Acl)) break;
        Pi = lyapunov_kron(Acl, Q + Pi * S * Pi);
    }

    if (!Pi.allFinite()) throw IllConditioned("care_solve: non-finite iterate");
    if (care_residual_norm(A, S, Q, Pi) > 1e-10 * (1.0 + Pi.squaredNorm()))
        throw IllConditioned("care_solve: residual tolerance not met");
    if (!is_hurwitz(A - S * Pi)) throw NotStabilizable("care_solve: closed loop not Hurwitz");
    Eigen::SelfAdjointEigenSolver<Matrix> pes(Pi);
    if (pes.eigenvalues().minCoeff() <= 0.0)
        throw NotStabilizable("care_solve: solution not positive definite");
    return Pi;
}

Matrix lyapunov_solve(const Matrix& A, const Matrix& Q) {
    if (!is_hurwitz(A)) throw NotHurwitz("lyapunov_solve: A is not Hurwitz");
    Matrix Pi = lyapunov_kron(A, Q);
    if ((A.transpose() * Pi + Pi * A + Q).norm() > 1e-10 * (1.0 + Pi.norm()))
        throw IllConditioned("lyapunov_solve: residual tolerance not met");
    return Pi;
}

bool check_controllable(const Matrix& A, const Matrix& B, double margin) {
    const Eigen::Index n = A.rows();
    Matrix C(n, n * B.cols());
    Matrix AkB = B;
    for (Eigen::Index k = 0; k < n; ++k) {
        C.middleCols(k * B.cols(), B.cols()) = AkB;
        AkB = A * AkB;
    }
    Eigen::JacobiSVD<Matrix> svd(C);
    return svd.singularValues().minCoeff() >= margin;
}

bool check_observable(const Matrix& Q, const Matrix& A, double margin) {
    return check_controllable(A.transpose(), psd_sqrt(Q).transpose(), margin);
}

StabilityEstimate fit_stability_bound(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 10) throw InvalidSpec("fit_stability_bound: need at least 10 samples");
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double N = static_cast<double>(samples.size());
    for (const auto& [t, norm] : samples) {
        const double y = std::log(std::max(norm, 1e-300));
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    const double slope = (N * sty - st * sy) / (N * stt - st * st);
    const double intercept = (sy - slope * st) / N;
    const double rho = -slope;
    if (rho <= 0.0) throw NotDecaying("fit_stability_bound: fitted decay rate is not positive");
    return StabilityEstimate{std::max(1.0, std::exp(intercept)), rho};
}

}  // namespace mfsac

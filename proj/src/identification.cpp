#include "mfsac/identification.hpp"

#include <algorithm>
#include <cmath>

namespace mfsac {

double gain_schedule(double r) {
    const double lg = std::log(r + M_E);
    return 1.0 / std::max(1.0, lg * lg);
}

RwlsState RwlsState::init(int regressor_dim, int output_dim, double kappa) {
    RwlsState st;
    st.upsilon = Matrix::Zero(regressor_dim, output_dim);
    st.Psi = kappa * Matrix::Identity(regressor_dim, regressor_dim);
    st.Psi_inv = (1.0 / kappa) * Matrix::Identity(regressor_dim, regressor_dim);
    st.r = st.Psi_inv.norm();
    return st;
}

void rwls_step(RwlsState& st, const Vector& psi, const Vector& y, double dt,
               bool increment_measurement) {
    if (!psi.allFinite() || !y.allFinite()) throw NonFinite("rwls_step: non-finite input");
    const double psi2 = psi.squaredNorm();
    st.r += psi2 * dt;
    if (psi2 == 0.0) return;

    const double a = gain_schedule(st.r);
    const double c = a * dt;

    const Vector Pp = st.Psi * psi;
    const double denom = 1.0 + c * psi.dot(Pp);
    st.Psi.noalias() -= (c / denom) * (Pp * Pp.transpose());
    st.Psi_inv.noalias() += c * (psi * psi.transpose());

    Eigen::RowVectorXd resid;
    if (increment_measurement)
        resid = y.transpose() - psi.transpose() * st.upsilon * dt;
    else
        resid = (y.transpose() - psi.transpose() * st.upsilon) * dt;
    st.upsilon.noalias() += a * (st.Psi * psi) * resid;
    if (!st.upsilon.allFinite()) throw NonFinite("rwls_step: estimate diverged");
}

void rwls_dyn_step(RwlsState& st, const Vector& x, const Vector& u, const Vector& dx, double dt) {
    Vector psi(x.size() + u.size());
    psi << x, u;
    rwls_step(st, psi, dx, dt, /*increment_measurement=*/true);
}

Matrix rwls_dyn_A(const RwlsState& st, int n) { return st.upsilon.topRows(n).transpose(); }

Matrix rwls_dyn_B(const RwlsState& st, int n, int m) {
    (void)n;
    return st.upsilon.bottomRows(m).transpose();
}

void rwls_cost_step(RwlsState& st, const Vector& x, const Vector& u, const Matrix& B_hat,
                    const Matrix& R, double dt) {
    if (B_hat.rows() != B_hat.cols()) throw SingularBhat("rwls_cost_step: B_hat must be square");
    if (std::abs(B_hat.determinant()) < 1e-10)
        throw SingularBhat("rwls_cost_step: B_hat is singular");
    Vector psi(x.size() + 1);
    psi << x, 1.0;
    const Vector y = -B_hat.transpose().fullPivLu().solve(R * u);
    rwls_step(st, psi, y, dt, /*increment_measurement=*/false);
}

Matrix rwls_cost_Pi(const RwlsState& st, int n) { return st.upsilon.topRows(n).transpose(); }

Vector rwls_cost_s(const RwlsState& st, int n) { return st.upsilon.row(n).transpose(); }

Matrix recover_Q(const Matrix& A_hat, const Matrix& B_hat, const Matrix& Pi_hat, const Matrix& R) {
    const Matrix M = -A_hat.transpose() * Pi_hat.transpose() - Pi_hat * A_hat +
                     Pi_hat.transpose() * B_hat * R.inverse() * B_hat.transpose() * Pi_hat;
    return 0.5 * (M + M.transpose());
}

namespace {

MleResult mle_categorical(const DistributionSpec& spec, const std::vector<ThetaParams>& thetas) {
    const int K = spec.num_atoms();
    const double N0 = static_cast<double>(thetas.size());
    Vector counts = Vector::Zero(K);
    for (const auto& th : thetas) {
        int best = 0;
        double best_d = theta_distance(th, spec.atoms[0]);
        for (int k = 1; k < K; ++k) {
            const double d = theta_distance(th, spec.atoms[k]);
            if (d < best_d) best_d = d, best = k;
        }
        counts(best) += 1.0;
    }
    const Vector p = counts / N0;
    const double delta = spec.floor_delta;

    // Minimize -sum p_k log(g_k) over {sum g = 1, g >= delta}, where
    // g_k = (1 - delta K) zeta_k + delta. KKT gives g_k = max(delta, p_k/lam).
    auto mass = [&](double lam) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) s += std::max(delta, p(k) / lam);
        return s;
    };
    double lo = 1e-12, hi = 1.0 / std::max(1e-300, 1.0 - delta * K) + 1.0;
    while (mass(hi) > 1.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) > 1.0 ? lo : hi) = mid;
    }
    const double lam = 0.5 * (lo + hi);

    MleResult res;
    res.n_observed = static_cast<int>(thetas.size());
    res.zeta_hat = Vector(K);
    double nll = 0.0;
    for (int k = 0; k < K; ++k) {
        const double g = std::max(delta, p(k) / lam);
        res.zeta_hat(k) = delta * K < 1.0 ? (g - delta) / (1.0 - delta * K) : p(k);
        nll -= p(k) * std::log(g);
    }
    res.zeta_hat /= res.zeta_hat.sum();  // absorb bisection rounding
    res.neg_log_likelihood = nll;
    return res;
}

MleResult mle_gaussian(const DistributionSpec& spec, const std::vector<ThetaParams>& thetas) {
    // Bin the segment coordinates so the likelihood sweep costs O(bins) per
    // zeta instead of O(N0); the snap error is far below the grid tolerance.
    constexpr int kBins = 400;
    std::vector<double> bin_weight(kBins, 0.0);
    for (const auto& th : thetas) {
        const double l = spec.lambda_of(th);
        int b = std::min(kBins - 1, static_cast<int>(l * kBins));
        bin_weight[b] += 1.0 / static_cast<double>(thetas.size());
    }

    auto nll = [&](double mean, double sd) {
        Vector z(2);
        z << mean, sd;
        double acc = 0.0;
        for (int b = 0; b < kBins; ++b) {
            if (bin_weight[b] == 0.0) continue;
            const double l = (b + 0.5) / kBins;
            acc -= bin_weight[b] * std::log(density_at(spec, z, spec.theta_at(l)));
        }
        return acc;
    };

    const int G = 200;
    double best_m = spec.mean_lo, best_s = spec.std_lo;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < G; ++i) {
        const double m = spec.mean_lo + (spec.mean_hi - spec.mean_lo) * i / (G - 1.0);
        for (int j = 0; j < G; ++j) {
            const double s = spec.std_lo + (spec.std_hi - spec.std_lo) * j / (G - 1.0);
            const double v = nll(m, s);
            if (v < best) best = v, best_m = m, best_s = s;
        }
    }

    // Golden-section refinement, one coordinate at a time.
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    auto golden = [&](double lo, double hi, auto f) {
        double a = lo, b = hi;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = f(c), fd = f(d);
        for (int it = 0; it < 60; ++it) {
            if (fc < fd) {
                b = d; d = c; fd = fc;
                c = b - gr * (b - a);
                fc = f(c);
            } else {
                a = c; c = d; fc = fd;
                d = a + gr * (b - a);
                fd = f(d);
            }
        }
        return 0.5 * (a + b);
    };
    const double hm = (spec.mean_hi - spec.mean_lo) / (G - 1.0);
    const double hs = (spec.std_hi - spec.std_lo) / (G - 1.0);
    for (int pass = 0; pass < 2; ++pass) {
        best_m = golden(std::max(spec.mean_lo, best_m - 2 * hm),
                        std::min(spec.mean_hi, best_m + 2 * hm),
                        [&](double m) { return nll(m, best_s); });
        best_s = golden(std::max(spec.std_lo, best_s - 2 * hs),
                        std::min(spec.std_hi, best_s + 2 * hs),
                        [&](double s) { return nll(best_m, s); });
    }

    MleResult res;
    res.zeta_hat = Vector(2);
    res.zeta_hat << best_m, best_s;
    res.neg_log_likelihood = nll(best_m, best_s);
    res.n_observed = static_cast<int>(thetas.size());
    return res;
}

}  // namespace

MleResult mle_estimate(const DistributionSpec& spec, const std::vector<ThetaParams>& thetas) {
    if (thetas.empty()) throw EmptyObservation("mle_estimate: no observations");
    return spec.family == Family::CategoricalAtoms ? mle_categorical(spec, thetas)
                                                  : mle_gaussian(spec, thetas);
}

double dither_amplitude(int k) {
    if (k <= 1) return 0.0;
    return std::sqrt(std::log(static_cast<double>(k)) / std::sqrt(static_cast<double>(k)));
}

Vector DitherState::step(double t_new, double dt, RngStream& rng) {
    const int m = static_cast<int>(accum.size());
    const Vector dw = std::sqrt(dt) * rng.normal_vec(m);
    const int k_new = static_cast<int>(std::ceil(t_new - 1e-9)) - 1;  // t in (k, k+1]
    if (k_new != k) {
        k = k_new;
        accum.setZero();
    }
    accum += dw;
    return value();
}

}  // namespace mfsac

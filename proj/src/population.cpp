#include "mfsac/population.hpp"

#include <algorithm>
#include <cmath>

#include "mfsac/rng.hpp"

namespace mfsac {

double theta_distance(const ThetaParams& a, const ThetaParams& b) {
    return std::sqrt((a.A - b.A).squaredNorm() + (a.B - b.B).squaredNorm() +
                     (a.Q - b.Q).squaredNorm());
}

double theta_norm(const ThetaParams& a) {
    return std::sqrt(a.A.squaredNorm() + a.B.squaredNorm() + a.Q.squaredNorm());
}

namespace {

bool in_box(const Matrix& M, double lo, double hi) {
    return (M.array() >= lo).all() && (M.array() <= hi).all();
}

Matrix clamp_box(const Matrix& M, double lo, double hi) {
    return M.array().max(lo).min(hi).matrix();
}

double min_eig_sym(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()));
    return es.eigenvalues().minCoeff();
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Truncated-normal density on [0,1].
double trunc_gauss_pdf(double lambda, double mean, double sd) {
    if (lambda < 0.0 || lambda > 1.0) return 0.0;
    const double z = norm_cdf((1.0 - mean) / sd) - norm_cdf((0.0 - mean) / sd);
    return norm_pdf((lambda - mean) / sd) / (sd * z);
}

}  // namespace

bool ThetaSet::contains(const ThetaParams& theta) const {
    if (!theta.A.allFinite() || !theta.B.allFinite() || !theta.Q.allFinite()) return false;
    if (!in_box(theta.A, box_lo, box_hi) || !in_box(theta.B, box_lo, box_hi) ||
        !in_box(theta.Q, box_lo, box_hi))
        return false;
    if ((theta.Q - theta.Q.transpose()).norm() > 1e-9 * (1.0 + theta.Q.norm())) return false;
    if (min_eig_sym(theta.Q) < q_floor - 1e-12) return false;
    if (!check_controllable(theta.A, theta.B, controllability_margin)) return false;
    if (!check_observable(theta.Q, theta.A, observability_margin)) return false;
    return true;
}

ThetaParams DistributionSpec::theta_at(double lambda) const {
    ThetaParams t;
    t.A = (1.0 - lambda) * seg_lo.A + lambda * seg_hi.A;
    t.B = (1.0 - lambda) * seg_lo.B + lambda * seg_hi.B;
    t.Q = (1.0 - lambda) * seg_lo.Q + lambda * seg_hi.Q;
    return t;
}

double DistributionSpec::lambda_of(const ThetaParams& theta) const {
    const double len2 = theta_distance(seg_hi, seg_lo) * theta_distance(seg_hi, seg_lo);
    if (len2 <= 0.0) throw InvalidSpec("degenerate segment");
    double dot = (theta.A - seg_lo.A).cwiseProduct(seg_hi.A - seg_lo.A).sum() +
                 (theta.B - seg_lo.B).cwiseProduct(seg_hi.B - seg_lo.B).sum() +
                 (theta.Q - seg_lo.Q).cwiseProduct(seg_hi.Q - seg_lo.Q).sum();
    return std::clamp(dot / len2, 0.0, 1.0);
}

void DistributionSpec::validate() const {
    if (family == Family::CategoricalAtoms) {
        if (atoms.empty()) throw InvalidSpec("CategoricalAtoms: no atoms");
        if (zeta.size() != num_atoms()) throw InvalidSpec("CategoricalAtoms: zeta size mismatch");
        if ((zeta.array() < -1e-12).any() || std::abs(zeta.sum() - 1.0) > 1e-9)
            throw InvalidSpec("CategoricalAtoms: zeta not on the simplex");
        if (floor_delta * num_atoms() >= 1.0) throw InvalidSpec("floor mass exceeds 1");
    } else {
        if (zeta.size() != 2) throw InvalidSpec("TruncatedGaussian1D: zeta must be (mean, std)");
        if (zeta(1) <= 0.0) throw InvalidSpec("TruncatedGaussian1D: std must be positive");
        if (grid_size < 3) throw InvalidSpec("TruncatedGaussian1D: grid too coarse");
        if (zeta(0) < mean_lo || zeta(0) > mean_hi || zeta(1) < std_lo || zeta(1) > std_hi)
            throw InvalidSpec("TruncatedGaussian1D: zeta outside P");
    }
}

namespace {

Vector categorical_probs(const DistributionSpec& spec, const Vector& zeta) {
    const double K = static_cast<double>(spec.num_atoms());
    return ((1.0 - spec.floor_delta * K) * zeta.array() + spec.floor_delta).matrix();
}

}  // namespace

std::vector<ThetaParams> sample_theta(const DistributionSpec& spec, std::uint64_t seed, int count) {
    spec.validate();
    RngStream rng(seed, 0, RngPurpose::ThetaDraw);
    std::vector<ThetaParams> out;
    out.reserve(count);
    if (spec.family == Family::CategoricalAtoms) {
        const Vector p = categorical_probs(spec, spec.zeta);
        for (int i = 0; i < count; ++i) {
            double u = rng.uniform();
            int k = 0;
            while (k + 1 < spec.num_atoms() && u > p(k)) u -= p(k), ++k;
            out.push_back(spec.atoms[k]);
        }
    } else {
        const double mean = spec.zeta(0), sd = spec.zeta(1);
        for (int i = 0; i < count; ++i) {
            double lambda;
            if (rng.uniform() < spec.floor_delta) {
                lambda = rng.uniform();
            } else {
                do {
                    lambda = mean + sd * rng.normal();
                } while (lambda < 0.0 || lambda > 1.0);
            }
            out.push_back(spec.theta_at(lambda));
        }
    }
    return out;
}

double density_at(const DistributionSpec& spec, const Vector& zeta, const ThetaParams& theta) {
    if (spec.family == Family::CategoricalAtoms) {
        const Vector p = categorical_probs(spec, zeta);
        int best = -1;
        double best_d = 1e-6;  // atoms are exact support points
        for (int k = 0; k < spec.num_atoms(); ++k) {
            const double d = theta_distance(theta, spec.atoms[k]);
            if (d < best_d) best = k, best_d = d;
        }
        if (best < 0) throw OutOfSupport("density: theta is not an atom of the support");
        return p(best);
    }
    const double lambda = spec.lambda_of(theta);
    return (1.0 - spec.floor_delta) * trunc_gauss_pdf(lambda, zeta(0), zeta(1)) + spec.floor_delta;
}

double density(const DistributionSpec& spec, const ThetaParams& theta) {
    return density_at(spec, spec.zeta, theta);
}

std::vector<QuadratureNode> quadrature_nodes_at(const DistributionSpec& spec, const Vector& zeta) {
    std::vector<QuadratureNode> nodes;
    if (spec.family == Family::CategoricalAtoms) {
        const Vector p = categorical_probs(spec, zeta);
        for (int k = 0; k < spec.num_atoms(); ++k) nodes.push_back({spec.atoms[k], p(k)});
    } else {
        const int M = spec.grid_size;
        const double h = 1.0 / (M - 1);
        double total = 0.0;
        for (int i = 0; i < M; ++i) {
            const double lambda = i * h;
            const double f =
                (1.0 - spec.floor_delta) * trunc_gauss_pdf(lambda, zeta(0), zeta(1)) +
                spec.floor_delta;
            const double w = f * h * ((i == 0 || i == M - 1) ? 0.5 : 1.0);
            nodes.push_back({spec.theta_at(lambda), w});
            total += w;
        }
        for (auto& nd : nodes) nd.weight /= total;  // trapezoid renormalization
    }
    return nodes;
}

std::vector<QuadratureNode> quadrature_nodes(const DistributionSpec& spec) {
    return quadrature_nodes_at(spec, spec.zeta);
}

ThetaParams project_theta(const ThetaParams& raw, const ThetaSet& set,
                          const std::optional<Matrix>& known_Q) {
    if (!raw.A.allFinite() || !raw.B.allFinite() || !raw.Q.allFinite())
        throw NonFinite("project_theta: non-finite input");

    ThetaParams cand;
    cand.A = clamp_box(raw.A, set.box_lo, set.box_hi);
    cand.B = clamp_box(raw.B, set.box_lo, set.box_hi);
    if (known_Q) {
        cand.Q = *known_Q;
    } else {
        Matrix Qs = 0.5 * (raw.Q + raw.Q.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(Qs);
        Vector lam = es.eigenvalues().cwiseMax(set.q_floor);
        cand.Q = clamp_box(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose(),
                           set.box_lo, set.box_hi);
        cand.Q = 0.5 * (cand.Q + cand.Q.transpose().eval());
    }
    if (set.contains(cand)) return cand;

    if (set.anchors.empty()) throw ProjectionFailed("project_theta: infeasible and no anchors");

    // Nearest anchor, lexicographic tie break over vectorized entries.
    const ThetaParams* anchor = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : set.anchors) {
        const double d = theta_distance(cand, a);
        if (d < best - 1e-15) best = d, anchor = &a;
    }

    for (int step = 1; step <= 40; ++step) {
        const double t = step / 40.0;
        ThetaParams blend;
        blend.A = (1.0 - t) * cand.A + t * anchor->A;
        blend.B = (1.0 - t) * cand.B + t * anchor->B;
        blend.Q = known_Q ? *known_Q : ((1.0 - t) * cand.Q + t * anchor->Q).eval();
        if (set.contains(blend)) return blend;
    }
    throw ProjectionFailed("project_theta: no feasible point within the blend budget");
}

double contraction_constant(const DistributionSpec& spec, const Matrix& R, double gamma) {
    const double Rinv_norm = R.inverse().norm();
    double total = 0.0;
    for (const auto& nd : quadrature_nodes(spec)) {
        Matrix Pi;
        try {
            Pi = care_solve(nd.theta.A, nd.theta.B, nd.theta.Q, R);
        } catch (const Error& e) {
            throw RiccatiFailure(std::string("contraction_constant: ") + e.what());
        }
        const Matrix Astar =
            nd.theta.A - nd.theta.B * R.inverse() * nd.theta.B.transpose() * Pi;
        // Int_0^inf ||e^{A* tau}|| dtau by trapezoid, truncated once the norm
        // falls below 1e-12.
        const double h = 0.01;
        const Matrix Eh = expm(Astar, h);
        Matrix E = Matrix::Identity(Astar.rows(), Astar.cols());
        double integral = 0.0;
        double prev = E.norm();
        for (double tau = h; tau < 1e4; tau += h) {
            E = Eh * E;
            const double cur = E.norm();
            integral += 0.5 * (prev + cur) * h;
            prev = cur;
            if (cur < 1e-12) break;
        }
        total += nd.weight * nd.theta.Q.norm() * nd.theta.B.squaredNorm() * integral * integral;
    }
    return Rinv_norm * std::abs(gamma) * total;
}

}  // namespace mfsac

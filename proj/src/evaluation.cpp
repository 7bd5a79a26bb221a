#include "mfsac/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace mfsac {

double median(std::vector<double> v) {
    if (v.empty()) throw InvalidSpec("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double lra_cost(const std::vector<double>& times, const std::vector<Vector>& xs,
                const std::vector<Vector>& us, const std::vector<Vector>& mass,
                const Matrix& Q, const Matrix& R, double window_frac) {
    if (times.size() != xs.size() || times.size() != us.size() || times.size() != mass.size())
        throw GridMismatch("lra_cost: misaligned grids");
    if (times.size() < 2) throw GridMismatch("lra_cost: too few samples");
    const double t_begin = times.back() - window_frac * (times.back() - times.front());
    double acc = 0.0, span = 0.0;
    auto running = [&](std::size_t k) {
        const Vector e = xs[k] - mass[k];
        return e.dot(Q * e) + us[k].dot(R * us[k]);
    };
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        if (times[k] < t_begin) continue;
        const double h = times[k + 1] - times[k];
        acc += 0.5 * (running(k) + running(k + 1)) * h;
        span += h;
    }
    if (span <= 0.0) throw GridMismatch("lra_cost: empty evaluation window");
    return acc / span;
}

namespace {

double window_average(const std::vector<double>& times, const std::vector<double>& cum,
                      double window_frac) {
    const double t_begin = times.back() - window_frac * (times.back() - times.front());
    std::size_t k0 = 0;
    while (k0 + 1 < times.size() && times[k0] < t_begin) ++k0;
    const double span = times.back() - times[k0];
    if (span <= 0.0) throw GridMismatch("window_average: empty window");
    return (cum.back() - cum[k0]) / span;
}

}  // namespace

double lra_cost_from_cum(const std::vector<double>& times, const std::vector<double>& cum_track,
                         const std::vector<double>& cum_ctrl, double window_frac) {
    std::vector<double> total(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) total[k] = cum_track[k] + cum_ctrl[k];
    return window_average(times, total, window_frac);
}

CostLedger cost_ledger(const RunArtifacts& art, double window_frac) {
    CostLedger led;
    led.horizon = art.rec_times.back();
    for (std::size_t i = 0; i < art.cum_track.size(); ++i) {
        led.tracking.push_back(window_average(art.rec_times, art.cum_track[i], window_frac));
        led.control.push_back(window_average(art.rec_times, art.cum_ctrl[i], window_frac));
        led.J.push_back(led.tracking.back() + led.control.back());
    }
    return led;
}

double best_response_cost(const Scenario& sc, const RunArtifacts& art, int agent,
                          double window_frac) {
    if (art.mass.empty()) throw MissingRun("best_response_cost: no mass record");
    const SimConfig& cfg = sc.sim;
    const ThetaParams& theta = art.thetas.at(agent);

    MassSignal mass;
    mass.t0 = 0.0;
    mass.h = art.mass_dt;
    mass.values = art.mass;

    const Matrix Pi = care_solve(theta.A, theta.B, theta.Q, sc.R);
    const OffsetTrajectory s = solve_offset(theta, Pi, sc.R, mass);

    const Matrix Sigma_sqrt = psd_sqrt(sc.noise.Sigma);
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(agent), RngPurpose::Plant);

    Vector x = art.x0s.at(agent);
    const int steps = static_cast<int>(art.mass.size()) - 1;
    const double t_begin = window_frac > 0.0 ? (steps * cfg.dt) * (1.0 - window_frac) : 0.0;
    double acc = 0.0, span = 0.0;
    for (int step = 0; step < steps; ++step) {
        const double t = step * cfg.dt;
        const Vector u = tracking_control(theta.B, Pi, sc.R, x, s.at(t));
        if (t >= t_begin) {
            const Vector e = x - art.mass[step];
            acc += (e.dot(theta.Q * e) + u.dot(sc.R * u)) * cfg.dt;
            span += cfg.dt;
        }
        const Vector dw = std::sqrt(cfg.dt) * (Sigma_sqrt * rng.normal_vec(cfg.r));
        x += (theta.A * x + theta.B * u) * cfg.dt + sc.noise.D * dw;
        if (!x.allFinite()) throw NonFinite("best_response_cost: replay diverged");
    }
    if (span <= 0.0) throw GridMismatch("best_response_cost: empty window");
    return acc / span;
}

NashGapReport nash_gap(const Scenario& sc, const RunArtifacts& art,
                       const std::vector<int>& probe_agents, double window_frac) {
    if (art.cum_track.empty()) throw MissingRun("nash_gap: no cost record");
    NashGapReport rep;
    rep.N = sc.sim.N;
    const CostLedger led = cost_ledger(art, window_frac);
    for (int i : probe_agents) {
        rep.agents.push_back(i);
        rep.J_played.push_back(led.J.at(i));
        rep.J_best.push_back(best_response_cost(sc, art, i, window_frac));
        rep.gap.push_back(rep.J_played.back() - rep.J_best.back());
        rep.epsilon_observed = std::max(rep.epsilon_observed, rep.gap.back());
    }
    return rep;
}

EqualCostReport equal_cost_report(const RunArtifacts& adaptive_run,
                                  const RunArtifacts& oracle_run, double window_frac) {
    if (adaptive_run.cum_track.size() != oracle_run.cum_track.size())
        throw MissingRun("equal_cost_report: population size mismatch");
    const CostLedger la = cost_ledger(adaptive_run, window_frac);
    const CostLedger lo = cost_ledger(oracle_run, window_frac);
    EqualCostReport rep;
    for (std::size_t i = 0; i < la.J.size(); ++i) {
        rep.abs_gap.push_back(std::abs(la.J[i] - lo.J[i]));
        rep.rel_gap.push_back(rep.abs_gap.back() / std::max(lo.J[i], 1e-300));
    }
    rep.median_abs = median(rep.abs_gap);
    rep.median_rel = median(rep.rel_gap);
    return rep;
}

}  // namespace mfsac

#include "mfsac/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

namespace mfsac {

ObservationGraph build_observation_graph(int N, double alpha, std::uint64_t seed) {
    if (N < 2) throw InvalidSpec("build_observation_graph: need N >= 2");
    ObservationGraph g;
    g.n0 = std::max(1, std::min(N - 1, static_cast<int>(std::floor(std::pow(N, alpha)))));
    g.observed.resize(N);
    for (int i = 0; i < N; ++i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i), RngPurpose::Graph);
        std::unordered_set<int> chosen;
        while (static_cast<int>(chosen.size()) < g.n0) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
            if (j != i) chosen.insert(j);
        }
        g.observed[i].assign(chosen.begin(), chosen.end());
        std::sort(g.observed[i].begin(), g.observed[i].end());
    }
    return g;
}

Vector tracking_control(const Matrix& B_hat, const Matrix& Pi_hat, const Matrix& R,
                        const Vector& x, const Vector& s) {
    return -R.llt().solve(B_hat.transpose() * (Pi_hat * x + s));
}

namespace {

struct AgentRuntime {
    Vector x;
    ThetaParams theta;          // true parameters
    Matrix Pi_ctrl;             // Riccati solution used by the control law
    Matrix B_ctrl;              // B estimate used by the control law
    std::shared_ptr<OffsetTrajectory> s_ctrl;
    Vector zeta_hat;
    RwlsState rwls_self;
    std::vector<RwlsState> rwls_obs_dyn, rwls_obs_cost;
    std::vector<Matrix> obs_Bhat;  // projected B of each observed agent
    DitherState dither;
    double cum_track = 0.0, cum_ctrl = 0.0, cum_state2 = 0.0;
};

ThetaParams nearest_anchor(const ThetaSet& set, const Matrix& A, const Matrix& B) {
    const ThetaParams* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& a : set.anchors) {
        const double d = std::sqrt((a.A - A).squaredNorm() + (a.B - B).squaredNorm());
        if (d < best_d) best_d = d, best = &a;
    }
    if (!best) throw ProjectionFailed("no anchors registered");
    return *best;
}

}  // namespace

RunArtifacts run_scenario(const Scenario& sc) {
    const auto t_start = std::chrono::steady_clock::now();
    const SimConfig& cfg = sc.sim;
    const int N = cfg.N, n = cfg.n, m = cfg.m, r = cfg.r;
    const bool adaptive = cfg.mode != Mode::Oracle;

    RunArtifacts art;
    art.thetas = sample_theta(sc.dist, cfg.seed, N);
    const ObservationGraph graph = build_observation_graph(N, cfg.alpha, cfg.seed);
    art.n0 = graph.n0;
    art.contraction = contraction_constant(sc.dist, sc.R, sc.coupling.gamma());
    if (art.contraction >= 1.0)
        throw ContractionViolated("run_scenario: contraction constant >= 1");

    const Matrix Sigma_sqrt = psd_sqrt(sc.noise.Sigma);

    std::vector<AgentRuntime> agents(N);
    std::vector<RngStream> rng_plant, rng_dither;
    rng_plant.reserve(N);
    rng_dither.reserve(N);
    for (int i = 0; i < N; ++i) {
        auto& ag = agents[i];
        ag.theta = art.thetas[i];
        RngStream init_rng(cfg.seed, static_cast<std::uint64_t>(i), RngPurpose::Init);
        ag.x = init_rng.normal_vec(n);
        if (ag.x.norm() > 10.0) ag.x *= 10.0 / ag.x.norm();  // bounded-initial-condition truncation
        art.x0s.push_back(ag.x);
        ag.rwls_self = RwlsState::init(n + m, n, cfg.psi0_kappa);
        ag.rwls_obs_dyn.assign(graph.n0, RwlsState::init(n + m, n, cfg.psi0_kappa));
        ag.rwls_obs_cost.assign(graph.n0, RwlsState::init(n + 1, n, cfg.psi0_kappa));
        ag.obs_Bhat.assign(graph.n0, Matrix::Zero(n, m));
        ag.dither = DitherState::init(m);
        ag.zeta_hat = sc.dist.zeta;
        rng_plant.emplace_back(cfg.seed, static_cast<std::uint64_t>(i), RngPurpose::Plant);
        rng_dither.emplace_back(cfg.seed, static_cast<std::uint64_t>(i), RngPurpose::Dither);
    }

    // MF solutions are cached per (quantized) zeta estimate; with the
    // categorical family the estimates are rational frequencies so the cache
    // collapses to a handful of solves per run.
    std::map<std::vector<long long>, std::shared_ptr<MassSignal>> mf_cache;
    auto mf_for_zeta = [&](const Vector& z) {
        std::vector<long long> key(z.size());
        for (Eigen::Index j = 0; j < z.size(); ++j) key[j] = std::llround(z(j) * 1e7);
        auto it = mf_cache.find(key);
        if (it != mf_cache.end()) return it->second;
        MfSolveOptions opt = sc.mf;
        opt.t0 = 0.0;
        opt.check_contraction = false;
        auto sig = std::make_shared<MassSignal>(
            solve_mf_system_at(sc.dist, z, sc.coupling, sc.R, opt).xstar);
        mf_cache.emplace(std::move(key), sig);
        return sig;
    };

    auto epoch_update = [&](double t) {
        for (int i = 0; i < N; ++i) {
            auto& ag = agents[i];
            ThetaParams raw;
            raw.A = rwls_dyn_A(ag.rwls_self, n);
            raw.B = rwls_dyn_B(ag.rwls_self, n, m);
            raw.Q = ag.theta.Q;  // self cost parameter is known
            const ThetaParams self_pr = project_theta(raw, sc.theta_set, ag.theta.Q);
            ag.Pi_ctrl = care_solve(self_pr.A, self_pr.B, self_pr.Q, sc.R);
            ag.B_ctrl = self_pr.B;

            std::vector<ThetaParams> obs_thetas;
            obs_thetas.reserve(graph.n0);
            for (int k = 0; k < graph.n0; ++k) {
                ThetaParams oraw;
                oraw.A = rwls_dyn_A(ag.rwls_obs_dyn[k], n);
                oraw.B = rwls_dyn_B(ag.rwls_obs_dyn[k], n, m);
                std::optional<Matrix> knownQ;
                if (cfg.pcpi && n == m) {
                    oraw.Q = recover_Q(oraw.A, oraw.B, rwls_cost_Pi(ag.rwls_obs_cost[k], n), sc.R);
                } else {
                    knownQ = nearest_anchor(sc.theta_set, oraw.A, oraw.B).Q;
                    oraw.Q = *knownQ;
                }
                const ThetaParams opr = project_theta(oraw, sc.theta_set, knownQ);
                ag.obs_Bhat[k] = opr.B;
                obs_thetas.push_back(opr);
            }
            ag.zeta_hat = mle_estimate(sc.dist, obs_thetas).zeta_hat;

            const auto xstar = mf_for_zeta(ag.zeta_hat);
            ag.s_ctrl = std::make_shared<OffsetTrajectory>(
                solve_offset(self_pr, ag.Pi_ctrl, sc.R, *xstar));

            art.theta_err.back()[i] = theta_distance(self_pr, ag.theta);
            art.zeta_err.back()[i] = (ag.zeta_hat - sc.dist.zeta).norm();
        }
    };

    if (!adaptive) {
        // Full-information baseline: true parameters, no dither, and the mass
        // solved at the realized population's mixture (the finite-N benchmark
        // knows every agent actually present, not just the sampling law).
        const Vector zeta_emp = mle_estimate(sc.dist, art.thetas).zeta_hat;
        const auto xstar = mf_for_zeta(zeta_emp);
        for (auto& ag : agents) {
            ag.Pi_ctrl = care_solve(ag.theta.A, ag.theta.B, ag.theta.Q, sc.R);
            ag.B_ctrl = ag.theta.B;
            ag.s_ctrl = std::make_shared<OffsetTrajectory>(
                solve_offset(ag.theta, ag.Pi_ctrl, sc.R, *xstar));
        }
    }

    const int steps = static_cast<int>(std::lround(cfg.T / cfg.dt));
    const int epoch_stride = std::max(1, static_cast<int>(std::lround(cfg.delta_re / cfg.dt)));
    const int stride = std::max(1, cfg.record_stride);
    const int n_traj = std::min(cfg.traj_agents, N);
    art.mass_dt = cfg.dt;
    art.xs.resize(n_traj);
    art.us.resize(n_traj);
    art.cum_track.resize(N);
    art.cum_ctrl.resize(N);
    art.cum_state2.resize(N);

    std::vector<Vector> u(N), dx(N);
    for (int step = 0; step <= steps; ++step) {
        const double t = step * cfg.dt;

        if (adaptive && step % epoch_stride == 0 && step < steps) {
            art.epoch_times.push_back(t);
            art.theta_err.emplace_back(N, 0.0);
            art.zeta_err.emplace_back(N, 0.0);
            epoch_update(t);
        }

        Vector xN = Vector::Zero(n);
        for (const auto& ag : agents) xN += ag.x;
        xN /= static_cast<double>(N);
        const Vector mN = sc.coupling.apply(xN + sc.coupling.eta);
        art.mass.push_back(mN);

        for (int i = 0; i < N; ++i) {
            auto& ag = agents[i];
            if (!ag.s_ctrl) throw StaleEstimates("run_scenario: missing epoch data");
            u[i] = tracking_control(ag.B_ctrl, ag.Pi_ctrl, sc.R, ag.x, ag.s_ctrl->at(t));
            if (adaptive) u[i] += cfg.dither_scale * ag.dither.value();
            if (cfg.mode == Mode::Deviation && i == cfg.deviate_agent) u[i].setZero();
        }

        if (step % stride == 0 || step == steps) {
            art.rec_times.push_back(t);
            for (int i = 0; i < n_traj; ++i) {
                art.xs[i].push_back(agents[i].x);
                art.us[i].push_back(u[i]);
            }
            for (int i = 0; i < N; ++i) {
                art.cum_track[i].push_back(agents[i].cum_track);
                art.cum_ctrl[i].push_back(agents[i].cum_ctrl);
                art.cum_state2[i].push_back(agents[i].cum_state2);
            }
        }
        if (step == steps) break;

        for (int i = 0; i < N; ++i) {
            auto& ag = agents[i];
            const Vector e = ag.x - mN;
            ag.cum_track += e.dot(ag.theta.Q * e) * cfg.dt;
            ag.cum_ctrl += u[i].dot(sc.R * u[i]) * cfg.dt;
            ag.cum_state2 += ag.x.squaredNorm() * cfg.dt;
            const Vector dw = std::sqrt(cfg.dt) * (Sigma_sqrt * rng_plant[i].normal_vec(r));
            dx[i] = (ag.theta.A * ag.x + ag.theta.B * u[i]) * cfg.dt + sc.noise.D * dw;
        }

        if (adaptive) {
            for (int i = 0; i < N; ++i) {
                auto& ag = agents[i];
                rwls_dyn_step(ag.rwls_self, ag.x, u[i], dx[i], cfg.dt);
                for (int k = 0; k < graph.n0; ++k) {
                    const int j = graph.observed[i][k];
                    rwls_dyn_step(ag.rwls_obs_dyn[k], agents[j].x, u[j], dx[j], cfg.dt);
                    if (cfg.pcpi && n == m &&
                        std::abs(ag.obs_Bhat[k].determinant()) >= 1e-10) {
                        rwls_cost_step(ag.rwls_obs_cost[k], agents[j].x, u[j], ag.obs_Bhat[k],
                                       sc.R, cfg.dt);
                    }
                }
            }
        }

        bool blow = false;
        for (int i = 0; i < N; ++i) {
            agents[i].x += dx[i];
            if (agents[i].x.norm() > cfg.blowup_threshold || !agents[i].x.allFinite()) blow = true;
        }
        if (adaptive) {
            for (int i = 0; i < N; ++i) agents[i].dither.step(t + cfg.dt, cfg.dt, rng_dither[i]);
        }
        if (blow) {
            art.blown_up = true;  // partial artifacts are still flushed by the caller
            break;
        }
    }

    art.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return art;
}

namespace {

void write_csv_header(std::ofstream& f, const std::string& head) { f << head << "\n"; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_artifacts(const Scenario& sc, const RunArtifacts& art, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream f(dir + "/trajectories.csv");
        if (!f) throw IoError("cannot write trajectories.csv");
        std::string head = "t,agent_id";
        for (int d = 0; d < sc.sim.n; ++d) head += ",x" + std::to_string(d + 1);
        for (int d = 0; d < sc.sim.m; ++d) head += ",u" + std::to_string(d + 1);
        write_csv_header(f, head);
        for (std::size_t i = 0; i < art.xs.size(); ++i) {
            for (std::size_t k = 0; k < art.rec_times.size() && k < art.xs[i].size(); ++k) {
                f << fmt(art.rec_times[k]) << "," << i;
                for (int d = 0; d < sc.sim.n; ++d) f << "," << fmt(art.xs[i][k](d));
                for (int d = 0; d < sc.sim.m; ++d) f << "," << fmt(art.us[i][k](d));
                f << "\n";
            }
        }
    }
    {
        std::ofstream f(dir + "/costs.csv");
        if (!f) throw IoError("cannot write costs.csv");
        write_csv_header(f, "t,agent_id,cum_tracking,cum_control,cum_state2");
        for (std::size_t i = 0; i < art.cum_track.size(); ++i) {
            for (std::size_t k = 0; k < art.cum_track[i].size(); ++k) {
                f << fmt(art.rec_times[k]) << "," << i << "," << fmt(art.cum_track[i][k]) << ","
                  << fmt(art.cum_ctrl[i][k]) << "," << fmt(art.cum_state2[i][k]) << "\n";
            }
        }
    }
    {
        std::ofstream f(dir + "/estimates.csv");
        if (!f) throw IoError("cannot write estimates.csv");
        write_csv_header(f, "t,agent_id,theta_err,zeta_err");
        for (std::size_t e = 0; e < art.epoch_times.size(); ++e) {
            for (std::size_t i = 0; i < art.theta_err[e].size(); ++i) {
                f << fmt(art.epoch_times[e]) << "," << i << "," << fmt(art.theta_err[e][i]) << ","
                  << fmt(art.zeta_err[e][i]) << "\n";
            }
        }
    }
    {
        std::ofstream f(dir + "/mass_signal.csv");
        if (!f) throw IoError("cannot write mass_signal.csv");
        std::string head = "t";
        for (int d = 0; d < sc.sim.n; ++d) head += ",m" + std::to_string(d + 1);
        write_csv_header(f, head);
        for (std::size_t k = 0; k < art.mass.size(); ++k) {
            f << fmt(k * art.mass_dt);
            for (int d = 0; d < sc.sim.n; ++d) f << "," << fmt(art.mass[k](d));
            f << "\n";
        }
    }
    {
        std::ofstream f(dir + "/meta.json");
        if (!f) throw IoError("cannot write meta.json");
        f << "{\n"
          << "  \"seed\": " << sc.sim.seed << ",\n"
          << "  \"n0\": " << art.n0 << ",\n"
          << "  \"contraction_constant\": " << fmt(art.contraction) << ",\n"
          << "  \"blown_up\": " << (art.blown_up ? "true" : "false") << ",\n"
          << "  \"wall_seconds\": " << fmt(art.wall_seconds) << "\n"
          << "}\n";
    }
}

}  // namespace mfsac

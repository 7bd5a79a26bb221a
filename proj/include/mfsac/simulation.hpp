#pragma once

#include <map>
#include <memory>
#include <string>

#include "mfsac/identification.hpp"
#include "mfsac/mf_solver.hpp"

namespace mfsac {

enum class Mode { Adaptive, Oracle, Deviation };

struct SimConfig {
    int N = 10;
    int n = 1, m = 1, r = 1;
    double dt = 1e-3;
    double T = 10.0;
    double alpha = 0.5;       // observation exponent, N0 = floor(N^alpha)
    double delta_re = 1.0;    // re-estimation epoch
    std::uint64_t seed = 1;
    Mode mode = Mode::Adaptive;
    bool pcpi = true;         // population cost-function identification (needs B invertible)
    double psi0_kappa = 100.0;
    double dither_scale = 1.0;
    int deviate_agent = -1;   // Deviation mode: this agent plays u = 0
    int record_stride = 10;
    int traj_agents = 10;
    double blowup_threshold = 1e8;
};

struct Scenario {
    SimConfig sim;
    DistributionSpec dist;
    ThetaSet theta_set;
    CouplingSpec coupling;
    Matrix R;
    NoiseSpec noise;
    MfSolveOptions mf;
    std::string out_dir = "artifacts";
};

struct ObservationGraph {
    std::vector<std::vector<int>> observed;  // per-agent ids, size n0 each
    int n0 = 0;
};

ObservationGraph build_observation_graph(int N, double alpha, std::uint64_t seed);

// -R^{-1} Bhat' (Pihat x + s); the caller adds dither.
Vector tracking_control(const Matrix& B_hat, const Matrix& Pi_hat, const Matrix& R,
                        const Vector& x, const Vector& s);

struct RunArtifacts {
    // recorded grid (stride * dt apart), plus the final time
    std::vector<double> rec_times;
    std::vector<std::vector<Vector>> xs, us;             // [traj agent][rec]
    std::vector<std::vector<double>> cum_track, cum_ctrl;  // [agent][rec], running cost integrals
    std::vector<std::vector<double>> cum_state2;         // [agent][rec], running integral of |x|^2
    std::vector<Vector> mass;                            // realized m^N at every step
    double mass_dt = 0.0;
    std::vector<double> epoch_times;
    std::vector<std::vector<double>> theta_err, zeta_err;  // [epoch][agent]
    std::vector<ThetaParams> thetas;                     // true parameters (seed-derived)
    std::vector<Vector> x0s;
    double contraction = 0.0;
    int n0 = 0;
    bool blown_up = false;
    double wall_seconds = 0.0;
};

RunArtifacts run_scenario(const Scenario& sc);

void write_artifacts(const Scenario& sc, const RunArtifacts& art, const std::string& dir);

}  // namespace mfsac

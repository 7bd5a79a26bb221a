#pragma once

#include "mfsac/simulation.hpp"

namespace mfsac {

// Time-average of ||x - mass||_Q^2 + ||u||_R^2 over the evaluation window
// (the last `window_frac` of the horizon), trapezoidal in time.
double lra_cost(const std::vector<double>& times, const std::vector<Vector>& xs,
                const std::vector<Vector>& us, const std::vector<Vector>& mass,
                const Matrix& Q, const Matrix& R, double window_frac = 0.8);

// Window-averaged realized cost of one agent, from the recorded cumulative
// integrals.
double lra_cost_from_cum(const std::vector<double>& times, const std::vector<double>& cum_track,
                         const std::vector<double>& cum_ctrl, double window_frac = 0.8);

struct CostLedger {
    std::vector<double> J;         // per-agent window-averaged cost
    std::vector<double> tracking;  // tracking component
    std::vector<double> control;   // control component
    double horizon = 0.0;
};

CostLedger cost_ledger(const RunArtifacts& art, double window_frac = 0.8);

// Exact LQ tracking best response against the frozen realized mass signal,
// replayed on the agent's own noise record (regenerated from the counter
// streams). Returns the achieved window-averaged cost.
double best_response_cost(const Scenario& sc, const RunArtifacts& art, int agent,
                          double window_frac = 0.8);

struct NashGapReport {
    std::vector<int> agents;
    std::vector<double> J_played;
    std::vector<double> J_best;
    std::vector<double> gap;  // signed; the frozen-mass oracle can go slightly negative
    double epsilon_observed = 0.0;
    int N = 0;
};

NashGapReport nash_gap(const Scenario& sc, const RunArtifacts& art,
                       const std::vector<int>& probe_agents, double window_frac = 0.8);

struct EqualCostReport {
    std::vector<double> abs_gap;  // per-agent |J_adaptive - J_oracle|
    std::vector<double> rel_gap;  // |J_adaptive - J_oracle| / J_oracle
    double median_abs = 0.0;
    double median_rel = 0.0;
};

EqualCostReport equal_cost_report(const RunArtifacts& adaptive_run,
                                  const RunArtifacts& oracle_run, double window_frac = 0.8);

double median(std::vector<double> v);

}  // namespace mfsac

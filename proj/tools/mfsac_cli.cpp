#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mfsac/evaluation.hpp"
#include "mfsac/scenario.hpp"

namespace fs = std::filesystem;
using namespace mfsac;

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void apply_overrides(Scenario& sc, std::uint64_t seed, bool seed_set, const std::string& mode,
                     const std::string& out) {
    if (seed_set) sc.sim.seed = seed;
    if (mode == "adaptive") sc.sim.mode = Mode::Adaptive;
    else if (mode == "oracle") sc.sim.mode = Mode::Oracle;
    else if (mode == "deviation") sc.sim.mode = Mode::Deviation;
    else if (!mode.empty()) throw ConfigError("unknown --mode '" + mode + "'");
    if (!out.empty()) sc.out_dir = out;
}

int threads_cap() {
    if (const char* env = std::getenv("MFSAC_THREADS")) {
        const int k = std::atoi(env);
        if (k >= 1) return k;
    }
    return 1;
}

int run_simulate(const std::string& scenario_path, std::uint64_t seed, bool seed_set,
                 const std::string& mode, const std::string& out) {
    Scenario sc = load_scenario(scenario_path);
    apply_overrides(sc, seed, seed_set, mode, out);
    RunArtifacts art = run_scenario(sc);
    write_artifacts(sc, art, sc.out_dir);
    save_scenario(sc, sc.out_dir + "/config.json");
    std::cout << "wrote " << sc.out_dir << " (N=" << sc.sim.N << ", T=" << sc.sim.T
              << ", contraction=" << art.contraction << ")\n";
    if (art.blown_up) {
        std::cerr << "state norm exceeded the blow-up threshold\n";
        return 1;
    }
    return 0;
}

int run_solve_mf(const std::string& scenario_path, const std::string& out) {
    Scenario sc = load_scenario(scenario_path);
    MfSolveResult res = solve_mf_system(sc.dist, sc.coupling, sc.R, sc.mf);
    const std::string dir = out.empty() ? sc.out_dir : out;
    fs::create_directories(dir);
    std::ofstream f(dir + "/mass_signal.csv");
    if (!f) throw IoError("cannot write mass_signal.csv in '" + dir + "'");
    f << "t";
    for (int d = 0; d < sc.sim.n; ++d) f << ",x" << d;
    f << "\n";
    for (int i = 0; i < res.xstar.size(); ++i) {
        f << g17(res.xstar.t0 + i * res.xstar.h);
        for (int d = 0; d < res.xstar.values[i].size(); ++d)
            f << "," << g17(res.xstar.values[i](d));
        f << "\n";
    }
    std::cout << "solved in " << res.iterations << " sweeps, gap=" << res.final_gap
              << ", contraction=" << res.contraction << "\n";
    return 0;
}

int run_evaluate(const std::string& scenario_path, const std::vector<std::string>& dirs,
                 bool nash, bool equal_cost, bool consistency, int probes,
                 const std::string& out) {
    Scenario sc = load_scenario(scenario_path, /*check_contraction=*/false);
    const std::string report_dir = out.empty() ? sc.out_dir : out;
    fs::create_directories(report_dir);

    if (nash) {
        for (const auto& dir : dirs) {
            RunArtifacts art = load_artifacts(dir, sc);
            std::vector<int> agents;
            for (int k = 0; k < probes && k < sc.sim.N; ++k)
                agents.push_back(k * std::max(1, sc.sim.N / probes));
            NashGapReport rep = nash_gap(sc, art, agents);
            std::ofstream f(report_dir + "/nash_" + fs::path(dir).filename().string() + ".csv");
            f << "agent,J_played,J_best,gap\n";
            for (std::size_t k = 0; k < rep.agents.size(); ++k)
                f << rep.agents[k] << "," << g17(rep.J_played[k]) << "," << g17(rep.J_best[k])
                  << "," << g17(rep.gap[k]) << "\n";
            f << "epsilon_observed," << g17(rep.epsilon_observed) << ",,\n";
            std::cout << dir << ": epsilon_observed=" << rep.epsilon_observed << "\n";
        }
        return 0;
    }
    if (equal_cost) {
        if (dirs.size() != 2)
            throw MissingRun("--equal-cost needs exactly two artifact dirs (adaptive, oracle)");
        RunArtifacts a = load_artifacts(dirs[0], sc);
        RunArtifacts b = load_artifacts(dirs[1], sc);
        EqualCostReport rep = equal_cost_report(a, b);
        std::ofstream f(report_dir + "/equal_cost.csv");
        f << "agent,abs_gap,rel_gap\n";
        for (std::size_t k = 0; k < rep.abs_gap.size(); ++k)
            f << k << "," << g17(rep.abs_gap[k]) << "," << g17(rep.rel_gap[k]) << "\n";
        f << "median," << g17(rep.median_abs) << "," << g17(rep.median_rel) << "\n";
        std::cout << "median relative gap=" << rep.median_rel << "\n";
        return 0;
    }
    if (consistency) {
        for (const auto& dir : dirs) {
            RunArtifacts art = load_artifacts(dir, sc);
            if (art.epoch_times.empty()) throw MissingRun("no estimate records in '" + dir + "'");
            std::ofstream f(report_dir + "/consistency_" + fs::path(dir).filename().string() +
                            ".csv");
            f << "t,median_theta_err,median_zeta_err\n";
            for (std::size_t e = 0; e < art.epoch_times.size(); ++e)
                f << g17(art.epoch_times[e]) << "," << g17(median(art.theta_err[e])) << ","
                  << g17(median(art.zeta_err[e])) << "\n";
            std::cout << dir << ": final median theta err=" << median(art.theta_err.back())
                      << "\n";
        }
        return 0;
    }
    throw ConfigError("evaluate needs one of --nash, --equal-cost, --consistency");
}

int run_sweep(const std::string& scenario_path, const std::string& param,
              const std::vector<double>& values, std::uint64_t seed, bool seed_set,
              const std::string& mode, const std::string& out) {
    Scenario base = load_scenario(scenario_path);
    apply_overrides(base, seed, seed_set, mode, out);
    int failures = 0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        Scenario sc = base;
        if (param == "N") sc.sim.N = static_cast<int>(values[k]);
        else if (param == "T") sc.sim.T = values[k];
        else if (param == "dt") sc.sim.dt = values[k];
        else throw ConfigError("sweep supports --param N, T, or dt");
        sc.sim.seed = base.sim.seed + 1000003u * (k + 1);
        std::ostringstream tag;
        tag << param << "_" << values[k];
        sc.out_dir = base.out_dir + "/" + tag.str();
        try {
            RunArtifacts art = run_scenario(sc);
            write_artifacts(sc, art, sc.out_dir);
            save_scenario(sc, sc.out_dir + "/config.json");
            std::cout << tag.str() << ": done (seed=" << sc.sim.seed << ")\n";
        } catch (const Error& e) {
            std::cerr << tag.str() << ": failed: " << e.what() << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field adaptive control simulator"};
    app.require_subcommand(1);
    (void)threads_cap();  // currently single-threaded; the env var caps future parallel paths

    std::string scenario_path, mode, out, param;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> dirs;
    std::vector<double> values;
    bool nash = false, equal_cost = false, consistency = false;
    int probes = 5;

    auto add_common = [&](CLI::App* cmd, bool need_scenario = true) {
        auto* opt = cmd->add_option("--scenario", scenario_path, "scenario JSON file");
        if (need_scenario) opt->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "master seed override")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--mode", mode, "adaptive | oracle | deviation");
        cmd->add_option("--out", out, "output directory override");
    };

    auto* sim = app.add_subcommand("simulate", "run a scenario and write artifacts");
    add_common(sim);

    auto* mf = app.add_subcommand("solve-mf", "solve the mean field system offline");
    add_common(mf);

    auto* ev = app.add_subcommand("evaluate", "compute reports from artifacts");
    add_common(ev);
    ev->add_option("dirs", dirs, "artifact directories")->required();
    ev->add_flag("--nash", nash, "best-response gap report");
    ev->add_flag("--equal-cost", equal_cost, "adaptive-vs-oracle cost report");
    ev->add_flag("--consistency", consistency, "estimate-error trend report");
    ev->add_option("--probes", probes, "agents probed by --nash");

    auto* sw = app.add_subcommand("sweep", "run the scenario over a parameter grid");
    add_common(sw);
    sw->add_option("--param", param, "parameter to sweep: N, T, dt")->required();
    sw->add_option("--values", values, "values for the swept parameter")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(scenario_path, seed, seed_set, mode, out);
        if (mf->parsed()) return run_solve_mf(scenario_path, out);
        if (ev->parsed())
            return run_evaluate(scenario_path, dirs, nash, equal_cost, consistency, probes, out);
        if (sw->parsed()) return run_sweep(scenario_path, param, values, seed, seed_set, mode, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

#include "mfsac/scenario.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace mfsac {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError("field '" + field + "' must be a 2-D array");
    const std::size_t rows = j.size(), cols = j[0].size();
    Matrix M(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols) throw ConfigError("field '" + field + "' is ragged");
        for (std::size_t k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
    }
    return M;
}

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw ConfigError("field '" + field + "' must be an array");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

json theta_to_json(const ThetaParams& t) {
    return json{{"A", matrix_to_json(t.A)}, {"B", matrix_to_json(t.B)}, {"Q", matrix_to_json(t.Q)}};
}

ThetaParams theta_from_json(const json& j, const std::string& field) {
    ThetaParams t;
    t.A = matrix_from_json(j.at("A"), field + ".A");
    t.B = matrix_from_json(j.at("B"), field + ".B");
    t.Q = matrix_from_json(j.at("Q"), field + ".Q");
    return t;
}

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::Adaptive: return "adaptive";
        case Mode::Oracle: return "oracle";
        case Mode::Deviation: return "deviation";
    }
    return "adaptive";
}

Mode mode_from_name(const std::string& s) {
    if (s == "adaptive") return Mode::Adaptive;
    if (s == "oracle") return Mode::Oracle;
    if (s == "deviation") return Mode::Deviation;
    throw ConfigError("unknown mode '" + s + "'");
}

}  // namespace

json scenario_to_json(const Scenario& sc) {
    json j;
    j["sim"] = {{"N", sc.sim.N},
                {"n", sc.sim.n},
                {"m", sc.sim.m},
                {"r", sc.sim.r},
                {"dt", sc.sim.dt},
                {"T", sc.sim.T},
                {"alpha", sc.sim.alpha},
                {"delta_re", sc.sim.delta_re},
                {"seed", sc.sim.seed},
                {"mode", mode_name(sc.sim.mode)},
                {"pcpi", sc.sim.pcpi},
                {"psi0_kappa", sc.sim.psi0_kappa},
                {"dither_scale", sc.sim.dither_scale},
                {"deviate_agent", sc.sim.deviate_agent},
                {"record_stride", sc.sim.record_stride},
                {"traj_agents", sc.sim.traj_agents},
                {"blowup_threshold", sc.sim.blowup_threshold}};
    j["R"] = matrix_to_json(sc.R);
    j["D"] = matrix_to_json(sc.noise.D);
    j["Sigma"] = matrix_to_json(sc.noise.Sigma);
    j["coupling"] = {{"Gamma", matrix_to_json(sc.coupling.Gamma)},
                     {"c", vector_to_json(sc.coupling.c)},
                     {"eta", vector_to_json(sc.coupling.eta)}};
    j["theta_set"] = {{"box_lo", sc.theta_set.box_lo},
                      {"box_hi", sc.theta_set.box_hi},
                      {"controllability_margin", sc.theta_set.controllability_margin},
                      {"observability_margin", sc.theta_set.observability_margin},
                      {"q_floor", sc.theta_set.q_floor},
                      {"contraction_budget", sc.theta_set.contraction_budget}};
    json dist;
    dist["floor_delta"] = sc.dist.floor_delta;
    dist["zeta"] = vector_to_json(sc.dist.zeta);
    if (sc.dist.family == Family::CategoricalAtoms) {
        dist["family"] = "categorical_atoms";
        json atoms = json::array();
        for (const auto& a : sc.dist.atoms) atoms.push_back(theta_to_json(a));
        dist["atoms"] = atoms;
    } else {
        dist["family"] = "truncated_gaussian_1d";
        dist["seg_lo"] = theta_to_json(sc.dist.seg_lo);
        dist["seg_hi"] = theta_to_json(sc.dist.seg_hi);
        dist["grid_size"] = sc.dist.grid_size;
        dist["zeta_domain"] = {{"mean", {sc.dist.mean_lo, sc.dist.mean_hi}},
                               {"std", {sc.dist.std_lo, sc.dist.std_hi}}};
    }
    j["distribution"] = dist;
    j["mf"] = {{"horizon", sc.mf.horizon},
               {"h", sc.mf.h},
               {"tol", sc.mf.tol},
               {"max_iterations", sc.mf.max_iterations},
               {"x0bar", vector_to_json(sc.mf.x0bar)}};
    // out_dir is a runtime destination, not scenario content; keeping it out of
    // the serialized form makes saved configs reproducible across output paths.
    return j;
}

Scenario scenario_from_json(const json& j) {
    Scenario sc;
    try {
        const json& s = j.at("sim");
        sc.sim.N = s.at("N").get<int>();
        sc.sim.n = s.at("n").get<int>();
        sc.sim.m = s.at("m").get<int>();
        sc.sim.r = s.at("r").get<int>();
        sc.sim.dt = s.at("dt").get<double>();
        sc.sim.T = s.at("T").get<double>();
        sc.sim.alpha = s.at("alpha").get<double>();
        sc.sim.delta_re = s.at("delta_re").get<double>();
        sc.sim.seed = s.at("seed").get<std::uint64_t>();
        sc.sim.mode = mode_from_name(s.at("mode").get<std::string>());
        sc.sim.pcpi = s.value("pcpi", true);
        sc.sim.psi0_kappa = s.value("psi0_kappa", 100.0);
        sc.sim.dither_scale = s.value("dither_scale", 1.0);
        sc.sim.deviate_agent = s.value("deviate_agent", -1);
        sc.sim.record_stride = s.value("record_stride", 10);
        sc.sim.traj_agents = s.value("traj_agents", 10);
        sc.sim.blowup_threshold = s.value("blowup_threshold", 1e8);

        sc.R = matrix_from_json(j.at("R"), "R");
        sc.noise.D = matrix_from_json(j.at("D"), "D");
        sc.noise.Sigma = matrix_from_json(j.at("Sigma"), "Sigma");
        sc.coupling.Gamma = matrix_from_json(j.at("coupling").at("Gamma"), "coupling.Gamma");
        sc.coupling.c = vector_from_json(j.at("coupling").at("c"), "coupling.c");
        sc.coupling.eta = vector_from_json(j.at("coupling").at("eta"), "coupling.eta");

        const json& ts = j.at("theta_set");
        sc.theta_set.box_lo = ts.at("box_lo").get<double>();
        sc.theta_set.box_hi = ts.at("box_hi").get<double>();
        sc.theta_set.controllability_margin = ts.at("controllability_margin").get<double>();
        sc.theta_set.observability_margin = ts.at("observability_margin").get<double>();
        sc.theta_set.q_floor = ts.at("q_floor").get<double>();
        sc.theta_set.contraction_budget = ts.value("contraction_budget", 1.0);

        const json& d = j.at("distribution");
        const std::string fam = d.at("family").get<std::string>();
        sc.dist.floor_delta = d.value("floor_delta", 1e-4);
        sc.dist.zeta = vector_from_json(d.at("zeta"), "distribution.zeta");
        if (fam == "categorical_atoms") {
            sc.dist.family = Family::CategoricalAtoms;
            for (std::size_t k = 0; k < d.at("atoms").size(); ++k)
                sc.dist.atoms.push_back(
                    theta_from_json(d.at("atoms")[k], "atoms[" + std::to_string(k) + "]"));
            sc.theta_set.anchors = sc.dist.atoms;
        } else if (fam == "truncated_gaussian_1d") {
            sc.dist.family = Family::TruncatedGaussian1D;
            sc.dist.seg_lo = theta_from_json(d.at("seg_lo"), "seg_lo");
            sc.dist.seg_hi = theta_from_json(d.at("seg_hi"), "seg_hi");
            sc.dist.grid_size = d.value("grid_size", 101);
            const json& zd = d.at("zeta_domain");
            sc.dist.mean_lo = zd.at("mean")[0].get<double>();
            sc.dist.mean_hi = zd.at("mean")[1].get<double>();
            sc.dist.std_lo = zd.at("std")[0].get<double>();
            sc.dist.std_hi = zd.at("std")[1].get<double>();
            sc.theta_set.anchors = {sc.dist.seg_lo, sc.dist.theta_at(0.5), sc.dist.seg_hi};
        } else {
            throw ConfigError("unknown distribution family '" + fam + "'");
        }
        sc.dist.validate();

        const json& mf = j.at("mf");
        sc.mf.horizon = mf.at("horizon").get<double>();
        sc.mf.h = mf.at("h").get<double>();
        sc.mf.tol = mf.at("tol").get<double>();
        sc.mf.max_iterations = mf.value("max_iterations", 200);
        sc.mf.x0bar = vector_from_json(mf.at("x0bar"), "mf.x0bar");

        sc.out_dir = j.value("out_dir", "artifacts");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario parse error: ") + e.what());
    } catch (const InvalidSpec& e) {
        throw ConfigError(std::string("scenario validation error: ") + e.what());
    }

    if (sc.sim.dt <= 0) throw ConfigError("sim.dt must be positive");
    if (sc.sim.N < 2) throw ConfigError("sim.N must be at least 2");
    if (sc.sim.T < sc.sim.delta_re) throw ConfigError("sim.T must cover at least one epoch");
    for (std::size_t k = 0; k < sc.theta_set.anchors.size(); ++k) {
        if (!sc.theta_set.contains(sc.theta_set.anchors[k]))
            throw ConfigError("distribution support point " + std::to_string(k) +
                              " violates the theta-set margins");
    }
    return sc;
}

Scenario load_scenario(const std::string& path, bool check_contraction) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open scenario file '" + path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario JSON error in '") + path + "': " + e.what());
    }
    Scenario sc = scenario_from_json(j);
    if (check_contraction) {
        const double gamma = sc.coupling.gamma();
        const double c0 = contraction_constant(sc.dist, sc.R, gamma);
        if (c0 >= sc.theta_set.contraction_budget)
            throw ContractionViolated("scenario '" + path + "': contraction constant " +
                                      std::to_string(c0) + " at zeta0 exceeds the budget");
        if (sc.dist.family == Family::CategoricalAtoms) {
            for (int k = 0; k < sc.dist.num_atoms(); ++k) {
                Vector vertex = Vector::Zero(sc.dist.num_atoms());
                vertex(k) = 1.0;
                const double ck = contraction_constant(
                    [&] { DistributionSpec d = sc.dist; d.zeta = vertex; return d; }(), sc.R,
                    gamma);
                if (ck >= sc.theta_set.contraction_budget)
                    throw ContractionViolated("scenario '" + path + "': contraction constant at simplex vertex " +
                                              std::to_string(k) + " exceeds the budget");
            }
        }
    }
    return sc;
}

void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write '" + path + "'");
    f << scenario_to_json(sc).dump(2) << "\n";
}

RunArtifacts load_artifacts(const std::string& dir, const Scenario& sc) {
    RunArtifacts art;
    art.thetas = sample_theta(sc.dist, sc.sim.seed, sc.sim.N);
    for (int i = 0; i < sc.sim.N; ++i) {
        RngStream init_rng(sc.sim.seed, static_cast<std::uint64_t>(i), RngPurpose::Init);
        Vector x = init_rng.normal_vec(sc.sim.n);
        if (x.norm() > 10.0) x *= 10.0 / x.norm();
        art.x0s.push_back(x);
    }

    {
        std::ifstream f(dir + "/costs.csv");
        if (!f) throw MissingRun("no costs.csv in '" + dir + "'");
        std::string line;
        std::getline(f, line);  // header
        art.cum_track.resize(sc.sim.N);
        art.cum_ctrl.resize(sc.sim.N);
        art.cum_state2.resize(sc.sim.N);
        double last_t = -1.0;
        while (std::getline(f, line)) {
            std::istringstream ss(line);
            std::string tok;
            std::getline(ss, tok, ',');
            const double t = std::stod(tok);
            std::getline(ss, tok, ',');
            const int agent = std::stoi(tok);
            std::getline(ss, tok, ',');
            const double ct = std::stod(tok);
            std::getline(ss, tok, ',');
            const double cc = std::stod(tok);
            std::getline(ss, tok, ',');
            const double c2 = tok.empty() ? 0.0 : std::stod(tok);
            if (agent == 0 && t != last_t) {
                art.rec_times.push_back(t);
                last_t = t;
            }
            art.cum_track.at(agent).push_back(ct);
            art.cum_ctrl.at(agent).push_back(cc);
            art.cum_state2.at(agent).push_back(c2);
        }
    }
    {
        std::ifstream f(dir + "/mass_signal.csv");
        if (!f) throw MissingRun("no mass_signal.csv in '" + dir + "'");
        std::string line;
        std::getline(f, line);
        std::vector<double> ts;
        while (std::getline(f, line)) {
            std::istringstream ss(line);
            std::string tok;
            std::getline(ss, tok, ',');
            ts.push_back(std::stod(tok));
            Vector v(sc.sim.n);
            for (int dcol = 0; dcol < sc.sim.n; ++dcol) {
                std::getline(ss, tok, ',');
                v(dcol) = std::stod(tok);
            }
            art.mass.push_back(v);
        }
        art.mass_dt = ts.size() > 1 ? ts[1] - ts[0] : sc.sim.dt;
    }
    {
        std::ifstream f(dir + "/estimates.csv");
        if (f) {
            std::string line;
            std::getline(f, line);
            double last_t = std::numeric_limits<double>::quiet_NaN();
            while (std::getline(f, line)) {
                std::istringstream ss(line);
                std::string tok;
                std::getline(ss, tok, ',');
                const double t = std::stod(tok);
                std::getline(ss, tok, ',');
                std::getline(ss, tok, ',');
                const double te = std::stod(tok);
                std::getline(ss, tok, ',');
                const double ze = std::stod(tok);
                if (art.epoch_times.empty() || t != last_t) {
                    art.epoch_times.push_back(t);
                    art.theta_err.emplace_back();
                    art.zeta_err.emplace_back();
                    last_t = t;
                }
                art.theta_err.back().push_back(te);
                art.zeta_err.back().push_back(ze);
            }
        }
    }
    return art;
}

}  // namespace mfsac

#pragma once

#include <nlohmann/json.hpp>

#include "mfsac/simulation.hpp"

namespace mfsac {

nlohmann::json scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const nlohmann::json& j);

// Parses and validates a scenario file; the contraction check runs at
// zeta0 (and, for the categorical family, at the simplex vertices) and a
// violation fails the load loudly.
Scenario load_scenario(const std::string& path, bool check_contraction = true);

void save_scenario(const Scenario& sc, const std::string& path);

// Rehydrates a run from its artifact directory: cost ledger, mass record and
// estimate curves from the CSVs; true parameters and initial conditions are
// regenerated from the seed.
RunArtifacts load_artifacts(const std::string& dir, const Scenario& sc);

}  // namespace mfsac

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "patchlr/grouping.hpp"
#include "patchlr/patch_ops.hpp"
#include "patchlr/solver.hpp"
#include "patchlr/theory.hpp"

namespace patchlr {

// ---------------------------------------------------------------------------
// Groups: {"patch_n": n, "boundary": "valid", "groups": [[[r, c], ...], ...]}

nlohmann::json groups_to_json(const PatchGroups& groups, const PatchConfig& pcfg);
/// Reads groups and the patch settings stored with them. `side` is not part
/// of the file and is taken from the argument. Throws ConfigError.
PatchGroups groups_from_json(const nlohmann::json& j, PatchConfig& pcfg);

// ---------------------------------------------------------------------------
// Reports

nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const CertificateReport& r);
nlohmann::json to_json(const LemmaBoundsReport& r);
nlohmann::json to_json(const AssumptionAudit& r);

/// iteration,primal_residual,dual_residual,objective
void write_solve_csv(std::ostream& os, const SolveReport& r);
/// m,trials,successes,mean_rel_error
void write_phase_csv(std::ostream& os, const std::vector<PhasePoint>& pts);
/// trial,deviation
void write_concentration_csv(std::ostream& os, const ConcentrationReport& r);

// ---------------------------------------------------------------------------
// Unified run configuration

struct ExperimentConfig {
    std::vector<std::size_t> m_grid;     ///< explicit sample counts
    /// Used when m_grid is empty: ceil(f N^2).
    std::vector<double> m_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0};
    int trials = 20;
    double success_tol = 1e-3;
    double golfing_fraction = 0.6;
    int golfing_seeds = 20;
    double cond2_threshold = 0.5;
    double cond2_pass_fraction = 0.8;
    double tol_sigma = 1e-8;
};

struct RunConfig {
    std::string input;    ///< input PGM
    std::string mask;     ///< optional mask file; empty selects fraction + seed
    std::string out = "out";
    double fraction = 0.2;
    std::uint64_t seed = 1;
    int patch_n = 8;
    Boundary boundary = Boundary::Valid;
    GroupingConfig grouping;
    ReferenceConfig reference;
    AdmmConfig admm;
    SyntheticSpec synthetic;
    ExperimentConfig experiment;

    PatchConfig patch_config(int side) const { return {patch_n, boundary, side}; }
    /// Sample counts for the phase experiment at side N.
    std::vector<std::size_t> resolved_m_grid(int side) const;
};

/// Parses a config object over the defaults. Unknown keys, wrong types and
/// invalid values are all collected and reported together as ConfigError.
RunConfig parse_run_config(const nlohmann::json& j, RunConfig base = {});
/// Validates a fully assembled config (e.g. after CLI overrides).
void validate_run_config(const RunConfig& cfg);
/// Every field with its resolved value.
nlohmann::json to_json(const RunConfig& cfg);

} // namespace patchlr

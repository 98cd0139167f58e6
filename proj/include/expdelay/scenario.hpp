#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "montecarlo.hpp"

namespace expdelay
{

//! Market of the closed-form example: X = B + tZ, Z ~ N(mu, sigma2).
struct ExampleMarket
{
    double mu = 0;
    double sigma2 = 1;
};

//! CSV tables for a_tilde (vector) and f_tilde (matrix), read as piecewise
//! constant on their own uniform grid and resampled onto the scenario grid.
struct TabulatedMarket
{
    std::filesystem::path a_tilde;
    std::filesystem::path f_tilde;
};

struct MonteCarloSettings
{
    long n_paths = 100000;
    std::uint64_t seed = 42;
    double alpha = 1;
};

struct Scenario
{
    std::variant<ExampleMarket, TabulatedMarket> market;
    double horizon = 1;
    int n_steps = 400;
    nlohmann::json delay;  //!< delay spec as written in the config
    MonteCarloSettings mc;
    std::filesystem::path outputs = "out";
    std::filesystem::path base_dir = ".";  //!< relative table paths resolve here

    bool is_example() const { return std::holds_alternative<ExampleMarket>(market); }
};

//! Exit codes of the command-line tool.
enum class ExitCode : int
{
    success = 0,
    validation = 2,
    numerical = 3,
    statistical_fail = 4,
};

Scenario parse_scenario(nlohmann::json const& config, std::filesystem::path const& base_dir = ".");
Scenario load_scenario(std::filesystem::path const& path);

//! Throws ValidationError on n_steps < 16, n_paths < 1, alpha <= 0, or an
//! example market whose horizon is not 1.
void validate_scenario(Scenario const& sc);

//! Canonical JSON of everything that determines the numbers (outputs excluded).
nlohmann::json canonical_json(Scenario const& sc);
//! FNV-1a 64 of canonical_json, as 16 hex digits.
std::string scenario_hash(Scenario const& sc);

MarketSpec build_market(Scenario const& sc, TimeGrid const& grid);
DelayMap build_delay(Scenario const& sc, TimeGrid const& grid);

//---------------------------------------------------------------------------//
// Subcommands
//---------------------------------------------------------------------------//

struct SolveResult
{
    PreparedMarket market;
    OptimalSolution solution;
    nlohmann::json prepared_report;
    nlohmann::json solution_report;
};

//! Prepare and solve at the scenario's resolution; no files written.
SolveResult solve_scenario(Scenario const& sc);

//! solve: prepared.json, f.csv, a.csv, solution.json, kappa.csv, g.csv, gtilde.csv
SolveResult run_solve(Scenario const& sc, std::filesystem::path const& out_dir);

//! kappa.csv, g.csv, gtilde.csv, f.csv only
void run_dump_kernels(Scenario const& sc, std::filesystem::path const& out_dir);

//! Closed-form quantities of the example market.
nlohmann::json run_oracle(Scenario const& sc);

struct ConvergenceRow
{
    int n_steps;
    double value;
    double system_residual;
    std::optional<double> oracle_value;
    std::optional<double> oracle_gap;       //!< relative |value - oracle| / |oracle|
    std::optional<double> g_oracle_error;   //!< max abs on grid pairs s <= t
};

std::vector<ConvergenceRow> run_convergence(Scenario const& sc, std::vector<int> const& levels);
void write_convergence_csv(std::filesystem::path const& path, Scenario const& sc,
                           std::vector<ConvergenceRow> const& rows);

struct ValidateOptions
{
    bool zero_strategy = false;  //!< estimate the zero strategy only
    int n_perturbations = 20;
    std::vector<double> magnitudes{0.02, 0.1, 0.5};
    std::vector<double> alphas{0.5, 1.0, 2.0};
};

struct ValidateResult
{
    nlohmann::json report;
    bool pass;
};

ValidateResult run_validate(Scenario const& sc, ValidateOptions const& opts = {});

nlohmann::json to_json(UtilityEstimate const& est);

//! Map an exception from the pipeline to an exit code and diagnostic JSON.
ExitCode classify_error(std::exception const& err, nlohmann::json& diagnostic);

}  // namespace expdelay

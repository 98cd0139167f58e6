#include "expdelay/scenario.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "expdelay/errors.hpp"
#include "expdelay/oracle.hpp"

namespace expdelay
{
namespace fs = std::filesystem;
using nlohmann::json;

namespace
{
std::uint64_t fnv1a(std::string const& bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char ch : bytes)
    {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::string file_digest(fs::path const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        return "missing";
    std::ostringstream buf;
    buf << is.rdbuf();
    return hex64(fnv1a(buf.str()));
}

template<class T>
T get_or(json const& obj, char const* key, T fallback)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        return fallback;
    try
    {
        return it->get<T>();
    }
    catch (json::exception const&)
    {
        throw ValidationError(std::string("config field '") + key + "' has the wrong type");
    }
}

json const& require(json const& obj, char const* key)
{
    auto it = obj.find(key);
    if (it == obj.end())
        throw ValidationError(std::string("config is missing '") + key + "'");
    return *it;
}

fs::path resolve(Scenario const& sc, fs::path const& p)
{
    return p.is_absolute() ? p : sc.base_dir / p;
}

// Sample a piecewise-constant table of `m` cells at the left endpoints of `n` cells.
int source_cell(int i, int n, int m)
{
    return static_cast<int>((static_cast<long long>(i) * m) / n);
}

json grid_json(TimeGrid const& grid)
{
    return {{"horizon_T", grid.horizon()}, {"n_steps", grid.n_steps()}, {"step", grid.step()}};
}

json header(Scenario const& sc, TimeGrid const& grid)
{
    return {{"scenario_hash", scenario_hash(sc)}, {"grid", grid_json(grid)}};
}

void ensure_dir(fs::path const& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ValidationError("cannot create output directory " + dir.string());
}

void write_json(fs::path const& path, json const& j)
{
    std::ofstream os(path);
    if (!os)
        throw ValidationError("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

std::optional<oracle::ExampleParams> example_params(Scenario const& sc, TimeGrid const& grid)
{
    if (!sc.is_example() || grid.horizon() != 1.0)
        return std::nullopt;
    auto const& ex = std::get<ExampleMarket>(sc.market);
    return oracle::ExampleParams(ex.mu, ex.sigma2, build_delay(sc, grid));
}
}  // namespace

//---------------------------------------------------------------------------//

Scenario parse_scenario(json const& config, fs::path const& base_dir)
{
    if (!config.is_object())
        throw ValidationError("scenario config must be a JSON object");
    Scenario sc;
    sc.base_dir = base_dir;

    auto const& market = require(config, "market");
    auto type = get_or<std::string>(market, "type", "");
    if (type == "example")
    {
        sc.market = ExampleMarket{get_or<double>(market, "mu", 0.0),
                                  get_or<double>(market, "sigma2", 1.0)};
    }
    else if (type == "tabulated")
    {
        sc.market = TabulatedMarket{get_or<std::string>(market, "a_tilde", ""),
                                    get_or<std::string>(market, "f_tilde", "")};
        auto const& tab = std::get<TabulatedMarket>(sc.market);
        if (tab.a_tilde.empty() || tab.f_tilde.empty())
            throw ValidationError("tabulated market needs 'a_tilde' and 'f_tilde' paths");
    }
    else
    {
        throw ValidationError("market.type must be 'example' or 'tabulated'");
    }

    sc.horizon = get_or<double>(config, "horizon_T", 1.0);
    sc.n_steps = get_or<int>(config, "n_steps", 400);
    sc.delay = require(config, "delay");
    if (auto it = config.find("mc"); it != config.end())
    {
        sc.mc.n_paths = get_or<long>(*it, "n_paths", sc.mc.n_paths);
        sc.mc.seed = get_or<std::uint64_t>(*it, "seed", sc.mc.seed);
        sc.mc.alpha = get_or<double>(*it, "alpha", sc.mc.alpha);
    }
    sc.outputs = get_or<std::string>(config, "outputs", "out");
    validate_scenario(sc);
    return sc;
}

Scenario load_scenario(fs::path const& path)
{
    std::ifstream is(path);
    if (!is)
        throw ValidationError("cannot open config " + path.string());
    json config;
    try
    {
        is >> config;
    }
    catch (json::exception const& e)
    {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_scenario(config, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void validate_scenario(Scenario const& sc)
{
    if (sc.n_steps < 16)
        throw ValidationError("n_steps must be at least 16");
    if (!(sc.horizon > 0.0) || !std::isfinite(sc.horizon))
        throw ValidationError("horizon_T must be positive");
    if (sc.mc.n_paths < 1)
        throw ValidationError("mc.n_paths must be at least 1");
    if (!(sc.mc.alpha > 0.0) || !std::isfinite(sc.mc.alpha))
        throw ValidationError("mc.alpha must be positive");
    if (sc.is_example())
    {
        if (sc.horizon != 1.0)
            throw ValidationError("the example market is defined on [0, 1]; horizon_T must be 1");
        if (!(std::get<ExampleMarket>(sc.market).sigma2 >= 0.0))
            throw ValidationError("market.sigma2 must be nonnegative");
    }
    // Constructing the delay validates it.
    build_delay(sc, TimeGrid(sc.horizon, sc.n_steps));
}

json canonical_json(Scenario const& sc)
{
    json market;
    if (sc.is_example())
    {
        auto const& ex = std::get<ExampleMarket>(sc.market);
        market = {{"type", "example"}, {"mu", ex.mu}, {"sigma2", ex.sigma2}};
    }
    else
    {
        auto const& tab = std::get<TabulatedMarket>(sc.market);
        market = {{"type", "tabulated"},
                  {"a_tilde", tab.a_tilde.generic_string()},
                  {"f_tilde", tab.f_tilde.generic_string()},
                  {"a_tilde_digest", file_digest(resolve(sc, tab.a_tilde))},
                  {"f_tilde_digest", file_digest(resolve(sc, tab.f_tilde))}};
    }
    return {{"market", market},
            {"horizon_T", sc.horizon},
            {"n_steps", sc.n_steps},
            {"delay", sc.delay},
            {"mc", {{"n_paths", sc.mc.n_paths}, {"seed", sc.mc.seed}, {"alpha", sc.mc.alpha}}}};
}

std::string scenario_hash(Scenario const& sc)
{
    return hex64(fnv1a(canonical_json(sc).dump()));
}

MarketSpec build_market(Scenario const& sc, TimeGrid const& grid)
{
    if (sc.is_example())
    {
        auto const& ex = std::get<ExampleMarket>(sc.market);
        return MarketSpec::gaussian_drift(grid, ex.mu, ex.sigma2);
    }
    auto const& tab = std::get<TabulatedMarket>(sc.market);
    Eigen::VectorXd a_src = read_csv_vector(resolve(sc, tab.a_tilde).string());
    Eigen::MatrixXd f_src = read_csv_matrix(resolve(sc, tab.f_tilde).string());
    if (f_src.rows() != f_src.cols())
        throw ValidationError("f_tilde table must be square");
    if (a_src.size() == 0 || f_src.rows() == 0)
        throw ValidationError("empty market table");

    int const n = grid.n_steps();
    int const ma = static_cast<int>(a_src.size());
    int const mf = static_cast<int>(f_src.rows());
    GridFunction a(n);
    Eigen::MatrixXd f(n, n);
    for (int i = 0; i < n; ++i)
    {
        a(i) = a_src(source_cell(i, n, ma));
        for (int j = 0; j < n; ++j)
            f(i, j) = f_src(source_cell(i, n, mf), source_cell(j, n, mf));
    }
    if (!is_symmetric(f))
        throw ValidationError("f_tilde table must be symmetric");
    return MarketSpec(std::move(a), Kernel(grid, std::move(f), KernelShape::symmetric));
}

DelayMap build_delay(Scenario const& sc, TimeGrid const& grid)
{
    auto const& d = sc.delay;
    if (!d.is_object())
        throw ValidationError("delay must be a JSON object");
    auto type = get_or<std::string>(d, "type", "");
    if (type == "constant_lag")
        return DelayMap::constant_lag(get_or<double>(d, "delta", 0.0), grid.horizon());
    if (type == "piecewise_linear")
    {
        std::vector<std::pair<double, double>> bp;
        for (auto const& item : require(d, "breakpoints"))
        {
            if (!item.is_array() || item.size() != 2)
                throw ValidationError("breakpoints must be [time, value] pairs");
            bp.emplace_back(item[0].get<double>(), item[1].get<double>());
        }
        return DelayMap::piecewise_linear(std::move(bp), get_or<double>(d, "epsilon", 0.0),
                                          grid.horizon());
    }
    if (type == "tabulated")
    {
        std::vector<double> values;
        if (d.contains("values"))
        {
            values = d["values"].get<std::vector<double>>();
        }
        else
        {
            auto v = read_csv_vector(resolve(sc, get_or<std::string>(d, "path", "")).string());
            values.assign(v.data(), v.data() + v.size());
        }
        // The table is tied to the scenario resolution.
        TimeGrid table_grid(grid.horizon(), static_cast<int>(values.size()) - 1);
        if (static_cast<int>(values.size()) != sc.n_steps + 1)
            throw ValidationError("tabulated delay needs exactly n_steps + 1 values");
        return DelayMap::tabulated(std::move(values), get_or<double>(d, "epsilon", 0.0), table_grid);
    }
    throw ValidationError("delay.type must be constant_lag, piecewise_linear or tabulated");
}

//---------------------------------------------------------------------------//

json to_json(UtilityEstimate const& est)
{
    return {{"mean", est.mean},
            {"std_error", est.std_error},
            {"n_paths", est.n_paths},
            {"alpha", est.alpha},
            {"n_clamped", est.n_clamped}};
}

namespace
{
SolveResult solve_on_grid(Scenario const& sc, TimeGrid const& grid)
{
    auto spec = build_market(sc, grid);
    auto delay = build_delay(sc, grid);
    auto pm = prepare_market(spec);
    auto sol = solve(pm, delay);

    // Sensitivity of c to the eigenvalue cutoff.
    json sensitivity = json::object();
    for (double cutoff : {1e-12, 1e-10, 1e-9})
    {
        std::ostringstream key;
        key << cutoff;
        sensitivity[key.str()] = compute_c(pm.a, spec.a_tilde(), pm.f, cutoff);
    }

    json prepared = header(sc, grid);
    prepared["c"] = pm.c;
    prepared["nonzero_eigs"] = pm.nonzero_eigs;
    prepared["eigen_cutoff"] = kEigenCutoff;
    prepared["c_cutoff_sensitivity"] = sensitivity;
    prepared["resolvent_residual"] = pm.resolvent_residual;
    prepared["files"] = {{"f", "f.csv"}, {"a", "a.csv"}};

    auto const& d = sol.diagnostics;
    json solution = header(sc, grid);
    solution["value"] = sol.value;
    solution["c"] = sol.c_ref;
    solution["residuals"] = {{"system_max", d.system_residual}, {"orthogonality_max", d.orthogonality}};
    solution["support"] = {{"kappa_nonzeros", d.kappa_nonzeros},
                           {"g_nonzeros", d.g_nonzeros},
                           {"overlaps", d.support_overlaps}};
    solution["g_spectral_bound"] = d.g_spectral_bound;
    solution["files"] = {{"kappa", "kappa.csv"}, {"g", "g.csv"}, {"g_tilde", "gtilde.csv"}};
    if (auto ex = example_params(sc, grid))
        solution["oracle_value"] = oracle::value(*ex);

    return SolveResult{std::move(pm), std::move(sol), std::move(prepared), std::move(solution)};
}

void write_kernels(fs::path const& out, SolveResult const& r)
{
    write_csv((out / "kappa.csv").string(), r.solution.kappa.values());
    write_csv((out / "g.csv").string(), r.solution.g.values());
    write_csv((out / "gtilde.csv").string(), r.solution.g_tilde.values());
    write_csv((out / "f.csv").string(), r.market.f.values());
}
}  // namespace

SolveResult solve_scenario(Scenario const& sc)
{
    return solve_on_grid(sc, TimeGrid(sc.horizon, sc.n_steps));
}

SolveResult run_solve(Scenario const& sc, fs::path const& out_dir)
{
    auto result = solve_scenario(sc);
    ensure_dir(out_dir);
    write_json(out_dir / "prepared.json", result.prepared_report);
    write_json(out_dir / "solution.json", result.solution_report);
    write_kernels(out_dir, result);
    write_csv((out_dir / "a.csv").string(), result.market.a.transpose());
    return result;
}

void run_dump_kernels(Scenario const& sc, fs::path const& out_dir)
{
    auto result = solve_scenario(sc);
    ensure_dir(out_dir);
    write_kernels(out_dir, result);
}

json run_oracle(Scenario const& sc)
{
    TimeGrid grid(sc.horizon, sc.n_steps);
    auto ex = example_params(sc, grid);
    if (!ex)
        throw ValidationError("the oracle subcommand needs an example market");
    auto consts = oracle::prepared(*ex);
    json j = header(sc, grid);
    j["mu"] = ex->mu;
    j["sigma2"] = ex->sigma2;
    j["f"] = consts.f;
    j["a"] = consts.a;
    j["c"] = consts.c;
    j["penalty"] = oracle::penalty(*ex);
    j["value"] = oracle::value(*ex);
    j["covariance_T_T"] = oracle::covariance(*ex, 1.0, 1.0);
    return j;
}

std::vector<ConvergenceRow> run_convergence(Scenario const& sc, std::vector<int> const& levels)
{
    if (levels.empty())
        throw ValidationError("convergence needs at least one level");
    for (std::size_t k = 1; k < levels.size(); ++k)
    {
        if (levels[k] <= levels[k - 1])
            throw ValidationError("convergence levels must be increasing");
    }
    std::vector<ConvergenceRow> rows;
    for (int n : levels)
    {
        if (n < 16)
            throw ValidationError("convergence levels must be at least 16");
        TimeGrid grid(sc.horizon, n);
        auto r = solve_on_grid(sc, grid);
        ConvergenceRow row{n, r.solution.value, r.solution.diagnostics.system_residual, {}, {}, {}};
        if (auto ex = example_params(sc, grid))
        {
            double ov = oracle::value(*ex);
            row.oracle_value = ov;
            row.oracle_gap = std::abs(r.solution.value - ov) / std::abs(ov);
            double err = 0.0;
            for (int j = 0; j < n; ++j)
            {
                for (int i = j; i < n; ++i)
                    err = std::max(err, std::abs(r.solution.g(i, j)
                                                 - oracle::g(*ex, grid.node(i), grid.node(j))));
            }
            row.g_oracle_error = err;
        }
        rows.push_back(row);
    }
    return rows;
}

void write_convergence_csv(fs::path const& path, Scenario const& sc,
                           std::vector<ConvergenceRow> const& rows)
{
    std::ofstream os(path);
    if (!os)
        throw ValidationError("cannot open " + path.string() + " for writing");
    os << std::setprecision(17);
    os << "scenario_hash,horizon_T,n_steps,value,system_residual,oracle_value,oracle_gap,g_oracle_error\n";
    auto opt = [](std::optional<double> const& v) {
        std::ostringstream s;
        s << std::setprecision(17);
        if (v)
            s << *v;
        return s.str();
    };
    for (auto const& r : rows)
    {
        os << scenario_hash(sc) << ',' << sc.horizon << ',' << r.n_steps << ',' << r.value << ','
           << r.system_residual << ',' << opt(r.oracle_value) << ',' << opt(r.oracle_gap) << ','
           << opt(r.g_oracle_error) << '\n';
    }
}

ValidateResult run_validate(Scenario const& sc, ValidateOptions const& opts)
{
    TimeGrid grid(sc.horizon, sc.n_steps);
    auto r = solve_on_grid(sc, grid);
    auto const& pm = r.market;
    auto const& sol = r.solution;
    auto ens = sample_paths(pm, sc.mc.n_paths, sc.mc.seed);

    json report = header(sc, grid);
    report["mc"] = {{"n_paths", sc.mc.n_paths}, {"seed", sc.mc.seed}, {"alpha", sc.mc.alpha}};
    json checks = json::array();
    bool all_pass = true;
    auto add = [&](std::string name, bool pass, json detail) {
        detail["name"] = std::move(name);
        detail["status"] = pass ? "PASS" : "FAIL";
        checks.push_back(std::move(detail));
        all_pass = all_pass && pass;
    };

    if (opts.zero_strategy)
    {
        int n = grid.n_steps();
        LinearStrategy zero{GridFunction::Zero(n), Eigen::MatrixXd::Zero(n, n)};
        auto est = summarize(path_utilities(wealth(zero, ens), sc.mc.alpha), sc.mc.alpha);
        add("zero_strategy", est.mean == -1.0 && est.std_error == 0.0, {{"estimate", to_json(est)}});
        report["checks"] = checks;
        report["status"] = all_pass ? "PASS" : "FAIL";
        return {report, all_pass};
    }

    // Expected utility of the optimizer against the closed-form-free value.
    auto est = estimate_utility(pm, sol, ens, sc.mc.alpha);
    double z = std::abs(est.mean - sol.value) / est.std_error;
    add("utility_matches_value", z <= 3.0,
        {{"estimate", to_json(est)}, {"value", sol.value}, {"z", z}});

    // Risk-aversion invariance: (1/alpha) gamma_hat under -exp(-alpha x).
    {
        auto base = estimate_utility(pm, sol, ens, 1.0);
        json per_alpha = json::array();
        bool pass = true;
        for (double alpha : opts.alphas)
        {
            auto e = estimate_utility(pm, sol, ens, alpha);
            double se = std::hypot(e.std_error, base.std_error);
            bool ok = std::abs(e.mean - base.mean) <= 3.0 * se;
            pass = pass && ok;
            per_alpha.push_back({{"estimate", to_json(e)}, {"within_3se", ok}});
        }
        add("risk_aversion_invariance", pass, {{"estimates", per_alpha}});
    }

    // No admissible perturbation should do better.
    {
        auto dirs = random_perturbations(grid, sol.inverse_index, opts.n_perturbations,
                                         sc.mc.seed ^ 0xa5a5a5a5ULL);
        auto rep = perturbation_test(pm, sol, ens, dirs, opts.magnitudes);
        json rows = json::array();
        double worst = -INFINITY;
        for (auto const& pr : rep.results)
        {
            worst = std::max(worst, pr.gap / pr.combined_se);
            rows.push_back({{"direction", pr.direction},
                            {"magnitude", pr.magnitude},
                            {"mean", pr.estimate.mean},
                            {"gap", pr.gap},
                            {"combined_se", pr.combined_se},
                            {"pass", pr.pass}});
        }
        add("perturbation", rep.pass,
            {{"optimum", to_json(rep.optimum)}, {"max_gap_in_se", worst}, {"results", rows}});
    }

    // Density normalization of dP/dW over Wiener paths.
    {
        auto wiener_spec = MarketSpec(GridFunction::Zero(grid.n_steps()), Kernel::zero(grid));
        auto wiener = sample_paths(wiener_spec, sc.mc.n_paths, sc.mc.seed + 1);
        auto nc = rn_normalization(pm, wiener);
        add("rn_normalization", nc.pass, {{"mean", nc.mean}, {"std_error", nc.std_error}});
    }

    report["checks"] = checks;
    report["status"] = all_pass ? "PASS" : "FAIL";
    return {report, all_pass};
}

ExitCode classify_error(std::exception const& err, json& diagnostic)
{
    diagnostic = {{"error", err.what()}};
    if (auto const* sv = dynamic_cast<SpectrumViolation const*>(&err))
    {
        diagnostic["kind"] = "SpectrumViolation";
        diagnostic["bound"] = sv->bound();
        return ExitCode::numerical;
    }
    if (auto const* ce = dynamic_cast<ConditioningError const*>(&err))
    {
        diagnostic["kind"] = "ConditioningError";
        diagnostic["smallest_eigenvalue"] = ce->smallest_eigenvalue();
        return ExitCode::numerical;
    }
    if (dynamic_cast<ValidationError const*>(&err) || dynamic_cast<DomainError const*>(&err)
        || dynamic_cast<ShapeError const*>(&err) || dynamic_cast<InvalidPerturbation const*>(&err)
        || dynamic_cast<json::exception const*>(&err))
    {
        diagnostic["kind"] = "ValidationError";
        return ExitCode::validation;
    }
    diagnostic["kind"] = "InternalError";
    return ExitCode::numerical;
}

}  // namespace expdelay

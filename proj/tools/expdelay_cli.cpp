// Command-line driver: solve, oracle, convergence, validate, dump-kernels.
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "expdelay/errors.hpp"
#include "expdelay/scenario.hpp"

namespace fs = std::filesystem;
using expdelay::ExitCode;
using nlohmann::json;

namespace
{
std::vector<int> parse_levels(std::string const& text)
{
    std::vector<int> levels;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        try
        {
            levels.push_back(std::stoi(item));
        }
        catch (std::exception const&)
        {
            throw expdelay::ValidationError("--levels expects comma-separated integers");
        }
    }
    return levels;
}

int finish(ExitCode code)
{
    return static_cast<int>(code);
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exponential utility maximization with delayed information"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string levels_text;
    bool zero_strategy = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (default: config 'outputs')");
        sub->add_option("--seed", seed, "Monte Carlo seed, overrides the config");
    };
    auto* solve = app.add_subcommand("solve", "Prepare the market and solve for (kappa, g) and the value");
    auto* oracle = app.add_subcommand("oracle", "Closed-form quantities of the example market");
    auto* convergence = app.add_subcommand("convergence", "Grid refinement study");
    auto* validate = app.add_subcommand("validate", "Monte Carlo checks of the solution");
    auto* dump = app.add_subcommand("dump-kernels", "Write kappa, g, g_tilde and f as CSV");
    for (auto* sub : {solve, oracle, convergence, validate, dump})
        add_common(sub);
    convergence->add_option("--levels", levels_text, "Comma-separated n_steps values")->required();
    validate->add_flag("--zero-strategy", zero_strategy, "Estimate the zero strategy only");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int rc = app.exit(e);
        return rc == 0 ? 0 : finish(ExitCode::validation);
    }

    // Known up front when given, so load errors still leave error.json behind.
    fs::path out = out_dir;
    try
    {
        auto sc = expdelay::load_scenario(config);
        if (seed)
            sc.mc.seed = *seed;
        out = out_dir.empty() ? sc.base_dir / sc.outputs : fs::path(out_dir);

        if (*solve)
        {
            auto r = expdelay::run_solve(sc, out);
            std::cout << r.solution_report.dump(2) << '\n';
        }
        else if (*oracle)
        {
            auto j = expdelay::run_oracle(sc);
            fs::create_directories(out);
            std::ofstream(out / "oracle.json") << j.dump(2) << '\n';
            std::cout << j.dump(2) << '\n';
        }
        else if (*convergence)
        {
            auto rows = expdelay::run_convergence(sc, parse_levels(levels_text));
            fs::create_directories(out);
            expdelay::write_convergence_csv(out / "convergence.csv", sc, rows);
            std::ifstream is(out / "convergence.csv");
            std::cout << is.rdbuf();
        }
        else if (*validate)
        {
            expdelay::ValidateOptions opts;
            opts.zero_strategy = zero_strategy;
            auto r = expdelay::run_validate(sc, opts);
            fs::create_directories(out);
            std::ofstream(out / "validate.json") << r.report.dump(2) << '\n';
            for (auto const& check : r.report["checks"])
                std::cout << check["status"].get<std::string>() << "  " << check["name"].get<std::string>() << '\n';
            if (!r.pass)
                return finish(ExitCode::statistical_fail);
        }
        else if (*dump)
        {
            expdelay::run_dump_kernels(sc, out);
        }
    }
    catch (std::exception const& e)
    {
        json diagnostic;
        auto code = expdelay::classify_error(e, diagnostic);
        std::cerr << diagnostic.dump(2) << '\n';
        if (!out.empty())
        {
            std::error_code ec;
            fs::create_directories(out, ec);
            if (!ec)
                std::ofstream(out / "error.json") << diagnostic.dump(2) << '\n';
        }
        return finish(code);
    }
    return finish(ExitCode::success);
}

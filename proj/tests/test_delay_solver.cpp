#include <cmath>
#include <map>

#include <doctest.h>

#include "expdelay/delay_solver.hpp"
#include "expdelay/errors.hpp"
#include "expdelay/oracle.hpp"
#include "helpers.hpp"

using namespace expdelay;

namespace
{
struct Case
{
    PreparedMarket pm;
    DelayMap delay;
};

Case example_case(int n, double mu, double sigma2, double lag)
{
    TimeGrid grid(1.0, n);
    return {prepare_market(MarketSpec::gaussian_drift(grid, mu, sigma2)),
            DelayMap::constant_lag(lag, 1.0)};
}

Case random_case(int n, std::uint64_t seed, DelayMap delay)
{
    TimeGrid grid(1.0, n);
    auto ft = testing::random_contraction(grid, 0.8, seed);
    return {prepare_market(MarketSpec(testing::random_vector(n, seed + 100), ft)), std::move(delay)};
}

// Solves the whole discrete system with one dense LU per stage, without the
// column and row structure the solver exploits.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dense_reference(PreparedMarket const& pm,
                                                            DelayMap const& delay)
{
    auto const& grid = pm.f.grid();
    int n = grid.n_steps();
    double h = grid.step();
    auto inv = delay.inverse_index_map(grid);
    auto const& f = pm.f.values();

    // g unknowns: pairs j <= i < inv[j]
    std::map<std::pair<int, int>, int> gid;
    for (int j = 0; j < n; ++j)
        for (int i = j; i < std::min(inv[j], n); ++i)
            gid[{i, j}] = static_cast<int>(gid.size());
    int m = static_cast<int>(gid.size());
    Eigen::MatrixXd gmat = Eigen::MatrixXd::Zero(n, n);
    if (m > 0)
    {
        Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(m, m);
        Eigen::VectorXd rhs(m);
        for (auto const& [ij, row] : gid)
        {
            auto [i, j] = ij;
            rhs(row) = -f(i, j);
            for (int u = j; u < n; ++u)
            {
                auto it = gid.find({u, j});
                if (it != gid.end())
                    sys(row, it->second) -= h * f(i, u);
            }
        }
        Eigen::VectorXd sol = sys.fullPivLu().solve(rhs);
        for (auto const& [ij, row] : gid)
            gmat(ij.first, ij.second) = sol(row);
    }
    Eigen::MatrixXd gsym = gmat;
    gsym.triangularView<Eigen::StrictlyUpper>() = gmat.transpose();

    // kappa, row by row: unknowns h(i, j) for pairs with i >= inv[j]
    Eigen::MatrixXd kappa = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
    {
        std::vector<int> cols;
        for (int j = 0; j <= i; ++j)
            if (i >= inv[j])
                cols.push_back(j);
        if (cols.empty())
            continue;
        int k = static_cast<int>(cols.size());
        std::vector<int> pos(n, -1);
        for (int q = 0; q < k; ++q)
            pos[cols[q]] = q;
        Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(k, k);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
        for (int q = 0; q < k; ++q)
        {
            int j = cols[q];
            // h(i,j) - h sum_{u >= j} h(i,u) g(u,j) = 0
            sys(q, q) += 1.0;
            for (int u = j; u < n; ++u)
            {
                double guj = gmat(u, j);
                if (guj == 0.0)
                    continue;
                if (pos[u] >= 0)
                    sys(q, pos[u]) -= h * guj;
                else
                    rhs(q) += h * f(i, u) * guj;
            }
        }
        Eigen::VectorXd hv = sys.fullPivLu().solve(rhs);
        for (int q = 0; q < k; ++q)
            kappa(i, cols[q]) = f(i, cols[q]) - hv(q);
    }
    return {kappa, gsym};
}
}  // namespace

TEST_CASE("g matches the closed form of the example market")
{
    for (double sigma2 : {1.0, 3.0})
    {
        auto c = example_case(200, 0.0, sigma2, 0.25);
        auto g = solve_g(c.pm, c.delay);
        oracle::ExampleParams p(0.0, sigma2, c.delay);
        auto const& grid = c.pm.f.grid();
        double worst = 0;
        for (int i = 0; i < 200; ++i)
            for (int j = 0; j <= i; ++j)
                worst = std::max(worst, std::abs(g(i, j) - oracle::g(p, grid.node(i), grid.node(j))));
        CHECK(worst < 1e-10);
        // spot value: -sigma2 / (1 + sigma2 (1 + t - tau^{-1}(t))) at t = s = 0.5
        CHECK(g(100, 100) == doctest::Approx(-sigma2 / (1 + sigma2 * 0.75)).epsilon(1e-10));
    }
}

TEST_CASE("zero-delay limit: g vanishes and kappa equals f")
{
    TimeGrid grid(1.0, 40);
    auto pm = prepare_market(MarketSpec::gaussian_drift(grid, 0.5, 2.0));
    auto sol = solve(pm, DelayMap::zero_delay_limit(1.0));
    CHECK(sol.g.values().cwiseAbs().maxCoeff() == 0.0);
    Eigen::MatrixXd lower = pm.f.values().triangularView<Eigen::Lower>();
    CHECK((sol.kappa.values() - lower).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.value == doctest::Approx(-std::exp(pm.c)).epsilon(1e-14));
}

TEST_CASE("solution satisfies the discrete system")
{
    std::vector<Case> cases;
    cases.push_back(example_case(60, 1.0, 3.0, 0.25));
    cases.push_back(example_case(60, 0.0, 1.0, 0.137));
    for (std::uint64_t seed = 0; seed < 3; ++seed)
        cases.push_back(random_case(60, seed, DelayMap::constant_lag(0.1 + 0.1 * seed, 1.0)));
    cases.push_back(random_case(
        60, 7, DelayMap::piecewise_linear({{0, 0}, {0.2, 0}, {0.5, 0.3}, {0.7, 0.3}, {1, 0.6}}, 0.2, 1.0)));

    for (auto const& c : cases)
    {
        auto sol = solve(c.pm, c.delay);
        CHECK(sol.diagnostics.system_residual < 1e-8);
        CHECK(system_residual(c.pm.f, sol.kappa, sol.g) == sol.diagnostics.system_residual);
        CHECK(sol.diagnostics.support_overlaps == 0);
        CHECK(sol.diagnostics.orthogonality < 1e-10);
        CHECK(sol.value < 0.0);

        auto const& inv = sol.inverse_index;
        int n = c.pm.f.size();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
            {
                bool kappa_allowed = j <= i && i >= inv[j];
                bool g_allowed = (j <= i && i < inv[j]) || (i < j && j < inv[i]);
                if (!kappa_allowed)
                    CHECK(sol.kappa(i, j) == 0.0);
                if (!g_allowed)
                    CHECK(sol.g(i, j) == 0.0);
            }

        // independent dense solve gives the same pair
        auto [kappa_ref, g_ref] = dense_reference(c.pm, c.delay);
        double scale = std::max(1.0, c.pm.f.values().cwiseAbs().maxCoeff());
        CHECK((sol.kappa.values() - kappa_ref).cwiseAbs().maxCoeff() < 1e-9 * scale);
        CHECK((sol.g.values() - g_ref).cwiseAbs().maxCoeff() < 1e-9 * scale);
    }
}

TEST_CASE("system_residual flags a wrong pair")
{
    auto c = example_case(60, 0.0, 1.0, 0.25);
    auto sol = solve(c.pm, c.delay);
    Eigen::MatrixXd bad = sol.kappa.values();
    bad(50, 10) += 1e-3;
    CHECK(system_residual(c.pm.f, Kernel(c.pm.f.grid(), bad, KernelShape::volterra), sol.g) > 5e-4);
}

TEST_CASE("g_tilde against a double loop")
{
    TimeGrid grid(1.0, 30);
    Eigen::MatrixXd m = testing::random_matrix(30, 2);
    m = 0.5 * (m + m.transpose()).eval();
    Kernel g(grid, m, KernelShape::symmetric);
    auto gt = g_tilde(g);
    for (int s = 0; s < 30; ++s)
        for (int u = 0; u < 30; ++u)
        {
            double expected = 0;
            if (u <= s)
            {
                double sum = 0;
                for (int v = 0; v < u; ++v)
                    sum += m(s, v) * m(u, v);
                expected = m(s, u) - grid.step() * sum;
            }
            CHECK(gt(s, u) == doctest::Approx(expected).epsilon(1e-12));
        }
}

TEST_CASE("optimal value special cases")
{
    TimeGrid grid(1.0, 50);
    GridFunction drift(50);
    for (int i = 0; i < 50; ++i)
        drift(i) = 1 + grid.node(i);
    auto pd = prepare_market(MarketSpec(drift, Kernel::zero(grid)));
    auto sol = solve(pd, DelayMap::constant_lag(0.3, 1.0));
    CHECK(sol.value == doctest::Approx(-std::exp(-0.5 * grid.step() * drift.squaredNorm())).epsilon(1e-14));
    CHECK(sol.c_ref == pd.c);

    // direct double sum
    auto c = example_case(80, 0.4, 2.0, 0.3);
    auto s2 = solve(c.pm, c.delay);
    double h = c.pm.f.grid().step();
    double e = c.pm.c;
    for (int s = 0; s < 80; ++s)
        for (int u = 0; u < s; ++u)
            e -= h * h * (c.pm.f(s, u) * s2.g_tilde(s, u) + 0.5 * s2.g(s, u) * s2.g(s, u));
    CHECK(s2.value == doctest::Approx(-std::exp(e)).epsilon(1e-12));
}

TEST_CASE("strategy evaluation")
{
    auto c = example_case(64, 1.0, 1.0, 0.25);
    auto sol = solve(c.pm, c.delay);
    int n = 64;
    Eigen::VectorXd path(n + 1);
    path(0) = 0;
    Eigen::VectorXd z = testing::random_vector(n, 3);
    for (int i = 1; i <= n; ++i)
        path(i) = path(i - 1) + 0.125 * z(i - 1);

    auto gamma = evaluate_strategy(sol, c.pm.a, path);
    for (int i = 0; i < n; ++i)
    {
        double expected = c.pm.a(i);
        for (int j = 1; j <= i; ++j)
            expected += sol.kappa(i, j) * (path(j) - path(j - 1));
        CHECK(gamma(i) == doctest::Approx(expected).epsilon(1e-13));
    }

    // gamma(t_i) only reads the path up to tau(t_i)
    auto const& grid = c.pm.f.grid();
    for (int i = 0; i < n; ++i)
    {
        double known = c.delay.tau_at(grid.node(i));
        Eigen::VectorXd moved = path;
        for (int k = 0; k <= n; ++k)
            if (grid.node(k) > known + 1e-12)
                moved(k) += 10.0 + k;
        CHECK(evaluate_strategy(sol, c.pm.a, moved)(i) == doctest::Approx(gamma(i)).epsilon(1e-13));
    }

    CHECK_THROWS_AS(evaluate_strategy(sol, c.pm.a, path.head(n)), ShapeError);
}

TEST_CASE("scale_strategy")
{
    GridFunction g = GridFunction::Constant(5, 2.0);
    CHECK(scale_strategy(g, 2.0)(3) == 1.0);
    CHECK(scale_strategy(g, 0.5)(0) == 4.0);
    CHECK_THROWS_AS(scale_strategy(g, 0.0), DomainError);
    CHECK_THROWS_AS(scale_strategy(g, -1.0), DomainError);
    CHECK_THROWS_AS(scale_strategy(g, std::nan("")), DomainError);
}

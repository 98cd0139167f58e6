#include <cmath>

#include <doctest.h>

#include "expdelay/errors.hpp"
#include "expdelay/market.hpp"
#include "helpers.hpp"

using namespace expdelay;

namespace
{
// Cov(X_{t_i}, X_{t_k}) by summing cell contributions directly.
double brute_covariance(Kernel const& ft, int i, int k)
{
    double h = ft.grid().step();
    double s = 0;
    for (int u = 0; u < i; ++u)
        for (int v = 0; v < k; ++v)
            s += ft(u, v);
    return std::min(i, k) * h - h * h * s;
}
}  // namespace

TEST_CASE("market construction checks")
{
    TimeGrid grid(1.0, 20);
    CHECK_THROWS_AS(MarketSpec(GridFunction::Zero(20), Kernel::constant(grid, 1.0)), SpectrumViolation);
    CHECK_THROWS_AS(MarketSpec(GridFunction::Zero(20), Kernel::constant(grid, 1.0 - 1e-8)),
                    SpectrumViolation);
    CHECK_NOTHROW(MarketSpec(GridFunction::Zero(20), Kernel::constant(grid, 0.99)));
    CHECK_THROWS_AS(MarketSpec(GridFunction::Zero(19), Kernel::zero(grid)), ShapeError);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(20, 20);
    asym(3, 1) = 0.5;
    CHECK_THROWS_AS(MarketSpec(GridFunction::Zero(20), Kernel(grid, asym)), ValidationError);
    CHECK_THROWS_AS(MarketSpec::gaussian_drift(grid, 0, -1), ValidationError);
}

TEST_CASE("resolvent")
{
    TimeGrid grid(1.0, 50);

    SUBCASE("constant kernel")
    {
        for (double sigma2 : {0.5, 1.0, 3.0})
        {
            auto f = solve_resolvent(Kernel::constant(grid, -sigma2));
            CHECK((f.values().array() - sigma2 / (1 + sigma2)).abs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("zero kernel")
    {
        CHECK(solve_resolvent(Kernel::zero(grid)).values().cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("random contraction: defining relation and involution")
    {
        for (std::uint64_t seed = 0; seed < 5; ++seed)
        {
            auto ft = testing::random_contraction(grid, 0.45, seed);
            auto f = solve_resolvent(ft);
            Eigen::MatrixXd fo = testing::triple_loop_compose(f.values(), ft.values(), grid.step());
            CHECK((f.values() + ft.values() - fo).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(is_symmetric(f.values()));
            auto back = solve_resolvent(f);
            CHECK((back.values() - ft.values()).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    CHECK_THROWS_AS(solve_resolvent(Kernel::constant(grid, 1.0)), SpectrumViolation);
}

TEST_CASE("drift and constant")
{
    TimeGrid grid(1.0, 40);
    for (double mu : {0.0, 1.0, -0.7})
    {
        for (double sigma2 : {1.0, 3.0})
        {
            auto pm = prepare_market(MarketSpec::gaussian_drift(grid, mu, sigma2));
            CHECK((pm.a.array() - mu / (1 + sigma2)).abs().maxCoeff() < 1e-12);
            double lambda = sigma2 / (1 + sigma2);
            double expected = 0.5 * (lambda + std::log(1 - lambda) - mu * mu / (1 + sigma2));
            CHECK(pm.c == doctest::Approx(expected).epsilon(1e-12));
            REQUIRE(pm.nonzero_eigs.size() == 1);
            CHECK(pm.nonzero_eigs[0] == doctest::Approx(lambda).epsilon(1e-12));
            CHECK(pm.resolvent_residual < 1e-12);
        }
    }
    auto pm = prepare_market(MarketSpec::gaussian_drift(grid, 0, 1));
    CHECK(pm.c == doctest::Approx(-0.0965735902799727).epsilon(1e-12));

    // pure drift: Girsanov constant -1/2 int a^2
    GridFunction drift(40);
    for (int i = 0; i < 40; ++i)
        drift(i) = std::sin(3 * grid.node(i));
    auto pd = prepare_market(MarketSpec(drift, Kernel::zero(grid)));
    CHECK((pd.a - drift).cwiseAbs().maxCoeff() == 0.0);
    CHECK(pd.c == doctest::Approx(-0.5 * grid.step() * drift.squaredNorm()).epsilon(1e-14));
    CHECK(pd.nonzero_eigs.empty());

    CHECK_THROWS_AS(compute_c(GridFunction::Zero(40), GridFunction::Zero(40), Kernel::constant(grid, 1.5)),
                    SpectrumViolation);
}

TEST_CASE("compute_a against a direct sum")
{
    TimeGrid grid(1.0, 30);
    auto f = testing::random_contraction(grid, 0.3, 4);
    GridFunction at = testing::random_vector(30, 5);
    auto a = compute_a(at, f);
    for (int i = 0; i < 30; ++i)
    {
        double s = 0;
        for (int j = 0; j < 30; ++j)
            s += f(i, j) * at(j);
        CHECK(a(i) == doctest::Approx(at(i) - grid.step() * s).epsilon(1e-12));
    }
}

TEST_CASE("property: c does not depend on the cutoff within reason")
{
    TimeGrid grid(1.0, 60);
    auto pm = prepare_market(MarketSpec::gaussian_drift(grid, 0.3, 2.0));
    for (double cutoff : {1e-12, 1e-10, 1e-8})
        CHECK(std::abs(compute_c(pm.a, pm.spec.a_tilde(), pm.f, cutoff) - pm.c) < 1e-12);

    for (std::uint64_t seed = 0; seed < 3; ++seed)
    {
        auto ft = testing::random_contraction(grid, 0.45, seed);
        auto rm = prepare_market(MarketSpec(testing::random_vector(60, seed), ft));
        double c1 = compute_c(rm.a, rm.spec.a_tilde(), rm.f, 1e-12);
        double c2 = compute_c(rm.a, rm.spec.a_tilde(), rm.f, 1e-8);
        CHECK(std::abs(c1 - c2) < 1e-6);
    }
}

TEST_CASE("mean and covariance")
{
    TimeGrid grid(1.0, 16);
    auto spec = MarketSpec::gaussian_drift(grid, 0.8, 2.0);
    auto mean = mean_vector(spec);
    auto cov = covariance_matrix(spec);
    REQUIRE(mean.size() == 17);
    REQUIRE(cov.rows() == 17);
    for (int i = 0; i <= 16; ++i)
    {
        CHECK(mean(i) == doctest::Approx(0.8 * grid.node(i)).epsilon(1e-14));
        for (int k = 0; k <= 16; ++k)
        {
            double t = grid.node(i), s = grid.node(k);
            CHECK(cov(i, k) == doctest::Approx(std::min(t, s) + 2.0 * t * s).epsilon(1e-12));
        }
    }

    for (std::uint64_t seed = 0; seed < 5; ++seed)
    {
        auto ft = testing::random_contraction(grid, 0.9, seed);
        MarketSpec rs(testing::random_vector(16, seed), ft);
        auto rc = covariance_matrix(rs);
        auto rmean = mean_vector(rs);
        double run = 0;
        for (int i = 0; i <= 16; ++i)
        {
            CHECK(std::abs(rmean(i) - run) < 1e-12);
            if (i < 16)
                run += grid.step() * rs.a_tilde()(i);
            for (int k = 0; k <= 16; ++k)
                CHECK(std::abs(rc(i, k) - brute_covariance(ft, i, k)) < 1e-12);
        }
    }
}

TEST_CASE("log Radon-Nikodym derivative")
{
    TimeGrid grid(1.0, 32);
    Eigen::VectorXd path(33);
    path(0) = 0;
    Eigen::VectorXd z = testing::random_vector(32, 9);
    for (int i = 1; i <= 32; ++i)
        path(i) = path(i - 1) + std::sqrt(grid.step()) * z(i - 1);

    auto pz = prepare_market(MarketSpec(GridFunction::Zero(32), Kernel::zero(grid)));
    CHECK(log_rn_derivative(pz, path) == 0.0);

    auto pd = prepare_market(MarketSpec(GridFunction::Constant(32, 0.7), Kernel::zero(grid)));
    CHECK(log_rn_derivative(pd, path) == doctest::Approx(0.7 * path(32) - 0.5 * 0.49).epsilon(1e-12));

    auto ft = testing::random_contraction(grid, 0.4, 3);
    auto pm = prepare_market(MarketSpec(testing::random_vector(32, 4), ft));
    double expected = pm.c;
    for (int i = 0; i < 32; ++i)
    {
        double dxi = path(i + 1) - path(i);
        expected += pm.a(i) * dxi;
        for (int k = 0; k < i; ++k)
            expected += pm.f(i, k) * (path(k + 1) - path(k)) * dxi;
    }
    CHECK(log_rn_derivative(pm, path) == doctest::Approx(expected).epsilon(1e-12));
    CHECK_THROWS_AS(log_rn_derivative(pm, path.head(32)), ShapeError);
}

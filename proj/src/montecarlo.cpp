#include "expdelay/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "expdelay/errors.hpp"

namespace expdelay
{
namespace
{
constexpr Eigen::Index kChunk = 2048;
constexpr double kMaxExponent = 700.0;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index)
{
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Increments X_{i+1} - X_i of a column block.
Eigen::MatrixXd increments(PathEnsemble const& ens, Eigen::Index first, Eigen::Index count)
{
    Eigen::Index n = ens.grid.n_steps();
    return ens.paths.block(1, first, n, count) - ens.paths.block(0, first, n, count);
}

// Kernel acting on increments that end at nodes 1..n-1:
// shifted(i, c) = kernel(i, c + 1) for c + 1 <= i.
Eigen::MatrixXd backward_kernel(Eigen::MatrixXd const& kernel)
{
    Eigen::Index n = kernel.rows();
    Eigen::MatrixXd shifted = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index c = 0; c + 1 < n; ++c)
        shifted.col(c).tail(n - c - 1) = kernel.col(c + 1).tail(n - c - 1);
    return shifted;
}
}  // namespace

PathEnsemble sample_paths(MarketSpec const& spec, long m, std::uint64_t seed)
{
    if (m < 1)
        throw ValidationError("sample_paths needs at least one path");
    auto const& grid = spec.grid();
    int const n = grid.n_steps();
    Eigen::MatrixXd cov = covariance_matrix(spec);
    Eigen::LLT<Eigen::MatrixXd> llt(cov.bottomRightCorner(n, n));
    Eigen::MatrixXd factor = llt.matrixL();
    GridFunction mean = mean_vector(spec);

    Eigen::MatrixXd paths(n + 1, m);
#pragma omp parallel for schedule(static)
    for (long p = 0; p < m; ++p)
    {
        std::mt19937_64 engine(path_seed(seed, static_cast<std::uint64_t>(p)));
        std::normal_distribution<double> normal;
        paths(0, p) = 0.0;
        for (int i = 1; i <= n; ++i)
            paths(i, p) = normal(engine);
    }
    for (Eigen::Index first = 0; first < m; first += kChunk)
    {
        Eigen::Index count = std::min<Eigen::Index>(kChunk, m - first);
        auto block = paths.block(1, first, n, count);
        Eigen::MatrixXd correlated = factor.triangularView<Eigen::Lower>() * block;
        block = correlated.colwise() + mean.tail(n);
    }
    return PathEnsemble{grid, seed, std::move(paths), std::move(factor)};
}

PathEnsemble sample_paths(PreparedMarket const& pm, long m, std::uint64_t seed)
{
    return sample_paths(pm.spec, m, seed);
}

double ito_integral(Eigen::Ref<Eigen::VectorXd const> const& integrand,
                    Eigen::Ref<Eigen::VectorXd const> const& path)
{
    auto n = integrand.size();
    if (path.size() != n + 1)
        throw ShapeError("ito_integral: path must have one more value than the integrand");
    return integrand.dot(path.tail(n) - path.head(n));
}

Eigen::VectorXd wealth(LinearStrategy const& strategy, PathEnsemble const& ens)
{
    Eigen::Index n = ens.grid.n_steps();
    if (strategy.intercept.size() != n || strategy.kernel.rows() != n || strategy.kernel.cols() != n)
        throw ShapeError("wealth: strategy does not match the ensemble grid");
    Eigen::MatrixXd shifted = backward_kernel(strategy.kernel);
    Eigen::Index m = ens.size();
    Eigen::VectorXd w(m);
    for (Eigen::Index first = 0; first < m; first += kChunk)
    {
        Eigen::Index count = std::min<Eigen::Index>(kChunk, m - first);
        Eigen::MatrixXd dx = increments(ens, first, count);
        Eigen::MatrixXd gamma = shifted.triangularView<Eigen::Lower>() * dx;
        gamma.colwise() += strategy.intercept;
        w.segment(first, count) = gamma.cwiseProduct(dx).colwise().sum().transpose();
    }
    return w;
}

std::vector<double> path_utilities(Eigen::Ref<Eigen::VectorXd const> const& w, double alpha,
                                   long* n_clamped)
{
    if (!(alpha > 0.0))
        throw DomainError("risk aversion must be positive");
    std::vector<double> u(static_cast<std::size_t>(w.size()));
    long clamped = 0;
    for (Eigen::Index p = 0; p < w.size(); ++p)
    {
        double exponent = -alpha * w(p);
        if (exponent > kMaxExponent)
        {
            exponent = kMaxExponent;
            ++clamped;
        }
        u[static_cast<std::size_t>(p)] = -std::exp(exponent);
    }
    if (n_clamped)
        *n_clamped = clamped;
    return u;
}

double pairwise_sum(double const* data, std::size_t count)
{
    if (count <= 16)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i)
            s += data[i];
        return s;
    }
    std::size_t half = count / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

UtilityEstimate summarize(std::vector<double> const& values, double alpha, long n_clamped)
{
    UtilityEstimate est;
    est.n_paths = static_cast<long>(values.size());
    est.alpha = alpha;
    est.n_clamped = n_clamped;
    if (values.empty())
        return est;
    est.mean = pairwise_sum(values.data(), values.size()) / static_cast<double>(values.size());
    if (values.size() > 1)
    {
        std::vector<double> sq(values.size());
        std::transform(values.begin(), values.end(), sq.begin(),
                       [m = est.mean](double v) { return (v - m) * (v - m); });
        double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(values.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    return est;
}

LinearStrategy optimal_strategy(PreparedMarket const& pm, OptimalSolution const& sol)
{
    return LinearStrategy{pm.a, sol.kappa.values()};
}

UtilityEstimate estimate_utility(PreparedMarket const& pm, OptimalSolution const& sol,
                                 PathEnsemble const& ens, double alpha)
{
    if (!(alpha > 0.0))
        throw DomainError("risk aversion must be positive");
    auto base = optimal_strategy(pm, sol);
    LinearStrategy scaled{scale_strategy(base.intercept, alpha), base.kernel / alpha};
    Eigen::VectorXd w = wealth(scaled, ens);
    long clamped = 0;
    auto u = path_utilities(w, alpha, &clamped);
    return summarize(u, alpha, clamped);
}

//---------------------------------------------------------------------------//

void check_adapted(Perturbation const& eta, std::vector<int> const& inverse_index)
{
    auto n = eta.kernel.rows();
    if (eta.kernel.cols() != n || eta.intercept.size() != n
        || static_cast<Eigen::Index>(inverse_index.size()) < n)
        throw ShapeError("perturbation does not match the grid");
    for (Eigen::Index j = 0; j < n; ++j)
    {
        for (Eigen::Index i = 0; i < n; ++i)
        {
            bool allowed = j <= i && i >= inverse_index[static_cast<std::size_t>(j)];
            if (!allowed && eta.kernel(i, j) != 0.0)
                throw InvalidPerturbation("perturbation kernel uses information not yet available to the trader");
        }
    }
}

std::vector<Perturbation> random_perturbations(TimeGrid const& grid,
                                               std::vector<int> const& inverse_index,
                                               int count, std::uint64_t seed)
{
    int const n = grid.n_steps();
    double const step = grid.step();
    std::vector<Perturbation> result;
    for (int q = 0; q < count; ++q)
    {
        std::mt19937_64 engine(path_seed(seed, 0x5eed0000ULL + static_cast<std::uint64_t>(q)));
        std::normal_distribution<double> normal;
        double c0 = normal(engine), c1 = normal(engine), c2 = normal(engine);
        double d0 = normal(engine), d1 = normal(engine);

        Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(n, n);
        for (int j = 0; j < n; ++j)
        {
            for (int i = std::max(j, inverse_index[static_cast<std::size_t>(j)]); i < n; ++i)
                kernel(i, j) = c0 + c1 * grid.node(i) + c2 * grid.node(j);
        }
        double knorm = step * kernel.norm();
        if (knorm > 0)
            kernel /= knorm;

        GridFunction intercept(n);
        for (int i = 0; i < n; ++i)
            intercept(i) = d0 + d1 * grid.node(i);
        double inorm = std::sqrt(step) * intercept.norm();
        if (inorm > 0)
            intercept /= inorm;
        result.push_back(Perturbation{std::move(intercept), std::move(kernel)});
    }
    return result;
}

PerturbationReport perturbation_test(PreparedMarket const& pm, OptimalSolution const& sol,
                                     PathEnsemble const& ens,
                                     std::vector<Perturbation> const& perturbations,
                                     std::vector<double> const& magnitudes)
{
    for (auto const& eta : perturbations)
        check_adapted(eta, sol.inverse_index);

    PerturbationReport report;
    Eigen::VectorXd w_opt = wealth(optimal_strategy(pm, sol), ens);
    report.optimum = summarize(path_utilities(w_opt, 1.0));

    for (std::size_t q = 0; q < perturbations.size(); ++q)
    {
        // Wealth is linear in the strategy.
        Eigen::VectorXd w_eta = wealth(perturbations[q], ens);
        for (double mag : magnitudes)
        {
            Eigen::VectorXd w = w_opt + mag * w_eta;
            long clamped = 0;
            auto est = summarize(path_utilities(w, 1.0, &clamped), 1.0, clamped);
            double gap = est.mean - report.optimum.mean;
            double se = std::hypot(est.std_error, report.optimum.std_error);
            bool pass = gap <= 3.0 * se;
            report.pass = report.pass && pass;
            report.results.push_back({static_cast<int>(q), mag, est, gap, se, pass});
        }
    }
    return report;
}

Eigen::VectorXd log_rn_derivatives(PreparedMarket const& pm, PathEnsemble const& ens)
{
    Eigen::Index n = ens.grid.n_steps();
    if (pm.f.size() != n)
        throw ShapeError("log_rn_derivatives: market and ensemble grids differ");
    Eigen::Index m = ens.size();
    Eigen::VectorXd out(m);
    Eigen::MatrixXd strict = pm.f.values().triangularView<Eigen::StrictlyLower>();
    for (Eigen::Index first = 0; first < m; first += kChunk)
    {
        Eigen::Index count = std::min<Eigen::Index>(kChunk, m - first);
        Eigen::MatrixXd dx = increments(ens, first, count);
        Eigen::MatrixXd inner = strict.triangularView<Eigen::StrictlyLower>() * dx;
        Eigen::VectorXd quad = inner.cwiseProduct(dx).colwise().sum().transpose();
        Eigen::VectorXd lin = (pm.a.transpose() * dx).transpose();
        out.segment(first, count) = (quad + lin).array() + pm.c;
    }
    return out;
}

NormalizationCheck rn_normalization(PreparedMarket const& pm, PathEnsemble const& wiener)
{
    Eigen::VectorXd logs = log_rn_derivatives(pm, wiener);
    std::vector<double> density(static_cast<std::size_t>(logs.size()));
    for (Eigen::Index p = 0; p < logs.size(); ++p)
        density[static_cast<std::size_t>(p)] = std::exp(std::min(logs(p), kMaxExponent));
    auto est = summarize(density);
    return {est.mean, est.std_error, std::abs(est.mean - 1.0) <= 3.0 * est.std_error};
}

}  // namespace expdelay

#include "expdelay/market.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

#include "expdelay/errors.hpp"

namespace expdelay
{
namespace
{
// Throws unless every eigenvalue of the symmetric operator matrix lies below
// 1 - kSpectrumMargin.
void require_spectrum_below_one(Eigen::MatrixXd const& op, char const* what)
{
    Eigen::MatrixXd shifted = -op;
    shifted.diagonal().array() += 1.0 - kSpectrumMargin;
    if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() == Eigen::Success)
        return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op, Eigen::EigenvaluesOnly);
    double top = es.eigenvalues().maxCoeff();
    std::ostringstream os;
    os << what << ": operator spectrum reaches " << top;
    throw SpectrumViolation(os.str(), top);
}
}  // namespace

MarketSpec::MarketSpec(GridFunction a_tilde, Kernel f_tilde)
    : a_tilde_(std::move(a_tilde)), f_tilde_(std::move(f_tilde))
{
    if (a_tilde_.size() != f_tilde_.size())
        throw ShapeError("a_tilde length differs from the kernel grid");
    if (!is_symmetric(f_tilde_.values()))
        throw ValidationError("f_tilde must be symmetric");
    if (f_tilde_.shape() != KernelShape::symmetric)
        f_tilde_ = Kernel(f_tilde_.grid(), f_tilde_.values(), KernelShape::symmetric);
    require_spectrum_below_one(f_tilde_.operator_matrix(), "f_tilde");
}

MarketSpec MarketSpec::gaussian_drift(TimeGrid const& grid, double mu, double sigma2)
{
    if (!(sigma2 >= 0.0))
        throw ValidationError("sigma2 must be nonnegative");
    int n = grid.n_steps();
    return MarketSpec(GridFunction::Constant(n, mu), Kernel::constant(grid, -sigma2));
}

Kernel solve_resolvent(Kernel const& f_tilde)
{
    if (!is_symmetric(f_tilde.values()))
        throw ValidationError("solve_resolvent: f_tilde must be symmetric");
    Eigen::MatrixXd ft = f_tilde.operator_matrix();
    require_spectrum_below_one(ft, "solve_resolvent");

    int n = f_tilde.size();
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - ft;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    // (I - Ft) F = -Ft; Ft commutes with (I - Ft)^{-1} so F is symmetric.
    Eigen::MatrixXd f = llt.solve(-ft) / f_tilde.grid().step();
    f = 0.5 * (f + f.transpose()).eval();
    return Kernel(f_tilde.grid(), std::move(f), KernelShape::symmetric);
}

GridFunction compute_a(GridFunction const& a_tilde, Kernel const& f)
{
    if (a_tilde.size() != f.size())
        throw ShapeError("compute_a: a_tilde length differs from the kernel grid");
    return a_tilde - f.grid().step() * (f.values() * a_tilde);
}

std::vector<double> nonzero_eigenvalues(Kernel const& f, double cutoff)
{
    auto all = eigenvalues_sym(f);
    double largest = 0.0;
    for (double v : all)
        largest = std::max(largest, std::abs(v));
    double threshold = cutoff * std::max(1.0, largest);
    std::vector<double> kept;
    std::copy_if(all.begin(), all.end(), std::back_inserter(kept),
                 [threshold](double v) { return std::abs(v) > threshold; });
    return kept;
}

namespace
{
double c_from_eigs(std::vector<double> const& eigs, GridFunction const& a,
                   GridFunction const& a_tilde, double step)
{
    double sum = 0.0;
    for (double lambda : eigs)
    {
        if (!(lambda < 1.0))
            throw SpectrumViolation("compute_c: eigenvalue >= 1 in f's operator", lambda);
        sum += lambda + std::log1p(-lambda);
    }
    return 0.5 * (sum - step * a.dot(a_tilde));
}
}  // namespace

double compute_c(GridFunction const& a, GridFunction const& a_tilde, Kernel const& f,
                 double cutoff)
{
    if (a.size() != f.size() || a_tilde.size() != f.size())
        throw ShapeError("compute_c: length mismatch");
    return c_from_eigs(nonzero_eigenvalues(f, cutoff), a, a_tilde, f.grid().step());
}

PreparedMarket prepare_market(MarketSpec const& spec, double cutoff)
{
    Kernel f = solve_resolvent(spec.f_tilde());
    GridFunction a = compute_a(spec.a_tilde(), f);
    auto eigs = nonzero_eigenvalues(f, cutoff);
    double c = c_from_eigs(eigs, a, spec.a_tilde(), spec.grid().step());

    Kernel ff = compose(f, spec.f_tilde());
    double residual = l2_norm(Kernel(spec.grid(), f.values() + spec.f_tilde().values() - ff.values()));
    if (residual > 1e-8 * (1.0 + l2_norm(spec.f_tilde())))
    {
        std::ostringstream os;
        os << "resolvent residual " << residual << " exceeds tolerance";
        throw ConditioningError(os.str(), std::nan(""));
    }
    return PreparedMarket{spec, std::move(f), std::move(a), c, std::move(eigs), residual};
}

GridFunction mean_vector(MarketSpec const& spec)
{
    int n = spec.grid().n_steps();
    double step = spec.grid().step();
    GridFunction m(n + 1);
    m(0) = 0.0;
    for (int i = 0; i < n; ++i)
        m(i + 1) = m(i) + step * spec.a_tilde()(i);
    return m;
}

Eigen::MatrixXd covariance_matrix(MarketSpec const& spec)
{
    auto const& grid = spec.grid();
    int n = grid.n_steps();
    double step = grid.step();
    auto const& ft = spec.f_tilde().values();

    // prefix(i, j) = sum_{u<i} sum_{v<j} f_tilde(u, v)
    Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int j = 0; j < n; ++j)
    {
        for (int i = 0; i < n; ++i)
            prefix(i + 1, j + 1) = ft(i, j) + prefix(i, j + 1) + prefix(i + 1, j) - prefix(i, j);
    }

    Eigen::MatrixXd cov(n + 1, n + 1);
    for (int j = 0; j <= n; ++j)
    {
        for (int i = 0; i <= n; ++i)
            cov(i, j) = std::min(grid.node(i), grid.node(j)) - step * step * prefix(i, j);
    }
    cov = 0.5 * (cov + cov.transpose()).eval();

    Eigen::LLT<Eigen::MatrixXd> llt(cov.bottomRightCorner(n, n));
    if (llt.info() != Eigen::Success)
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.bottomRightCorner(n, n),
                                                          Eigen::EigenvaluesOnly);
        double smallest = es.eigenvalues().minCoeff();
        std::ostringstream os;
        os << "node covariance is not positive definite (smallest eigenvalue " << smallest << ")";
        throw ConditioningError(os.str(), smallest);
    }
    return cov;
}

double log_rn_derivative(PreparedMarket const& pm, Eigen::Ref<Eigen::VectorXd const> const& path)
{
    int n = pm.f.size();
    if (path.size() != n + 1)
        throw ShapeError("log_rn_derivative: path must have n_steps + 1 values");
    Eigen::VectorXd dx = path.tail(n) - path.head(n);
    Eigen::VectorXd inner = pm.f.values().triangularView<Eigen::StrictlyLower>() * dx;
    return pm.c + pm.a.dot(dx) + inner.dot(dx);
}

}  // namespace expdelay

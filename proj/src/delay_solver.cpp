#include "expdelay/delay_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "expdelay/errors.hpp"

namespace expdelay
{
namespace
{
void check_grid(PreparedMarket const& pm, DelayMap const& delay)
{
    if (pm.f.grid().horizon() != delay.horizon())
        throw ShapeError("delay horizon differs from the market grid");
}
}  // namespace

Kernel solve_g(PreparedMarket const& pm, DelayMap const& delay)
{
    check_grid(pm, delay);
    auto const& grid = pm.f.grid();
    int const n = grid.n_steps();
    double const step = grid.step();
    auto inv = delay.inverse_index_map(grid);
    auto const& f = pm.f.values();

    // Window compressions inherit the spectral bound of the full operator, so
    // one global check covers every column.
    double top = pm.nonzero_eigs.empty() ? 0.0 : pm.nonzero_eigs.front();
    bool const global_ok = top < 1.0 - kSpectrumMargin;

    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 8)
    for (int j = 0; j < n; ++j)
    {
        int const hi = std::min(inv[j], n);
        int const w = hi - j;
        if (w <= 0)
            continue;
        if (global_ok)
        {
            Eigen::MatrixXd system = -step * f.block(j, j, w, w);
            system.diagonal().array() += 1.0;
            Eigen::LLT<Eigen::MatrixXd> llt(system);
            g.col(j).segment(j, w) = llt.solve(-f.col(j).segment(j, w));
        }
        else
        {
            Eigen::VectorXd rhs = -f.col(j);
            g.col(j).segment(j, w) = solve_shifted(pm.f, rhs, j, hi);
        }
    }
    // Mirror the lower triangle; the diagonal stays as solved.
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return Kernel(grid, std::move(g), KernelShape::symmetric);
}

Kernel solve_kappa(PreparedMarket const& pm, DelayMap const& delay, Kernel const& g)
{
    check_grid(pm, delay);
    auto const& grid = pm.f.grid();
    if (!(g.grid() == grid))
        throw ShapeError("solve_kappa: g lives on a different grid");
    int const n = grid.n_steps();
    double const step = grid.step();
    auto inv = delay.inverse_index_map(grid);
    auto const& f = pm.f.values();
    auto const& gv = g.values();

    Eigen::MatrixXd kappa = Eigen::MatrixXd::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i)
    {
        // Columns j with tau(t_i) >= t_j are exactly j <= top.
        int top = -1;
        while (top + 1 <= n - 1 && inv[top + 1] <= i)
            ++top;
        if (top < 0)
            continue;
        // h = f - kappa along row i; beyond top kappa vanishes.
        Eigen::VectorXd h = f.row(i).transpose();
        for (int j = top; j >= 0; --j)
        {
            int const hi = std::min(inv[j], n);
            double h_ij = 0.0;
            if (hi > j)
            {
                int const w = hi - j - 1;
                double tail = w > 0 ? h.segment(j + 1, w).dot(gv.col(j).segment(j + 1, w)) : 0.0;
                double denom = 1.0 - step * gv(j, j);
                if (std::abs(denom) < 1e-12)
                    throw SpectrumViolation("solve_kappa: singular diagonal cell", step * gv(j, j));
                h_ij = step * tail / denom;
            }
            h(j) = h_ij;
            kappa(i, j) = f(i, j) - h_ij;
        }
    }
    return Kernel(grid, std::move(kappa), KernelShape::volterra);
}

Kernel g_tilde(Kernel const& g)
{
    auto const& grid = g.grid();
    Eigen::MatrixXd lower = g.values().triangularView<Eigen::Lower>();
    Eigen::MatrixXd strict = g.values().triangularView<Eigen::StrictlyLower>();
    // (lower * strict^T)(i, j) = sum_{v < j} g(i, v) g(j, v) for j <= i
    Eigen::MatrixXd correction = lower * strict.transpose();
    Eigen::MatrixXd gt = lower - grid.step() * correction;
    gt.triangularView<Eigen::StrictlyUpper>().setZero();
    return Kernel(grid, std::move(gt), KernelShape::volterra);
}

double optimal_value(PreparedMarket const& pm, Kernel const& g, Kernel const& gt)
{
    if (!(g.grid() == pm.f.grid()) || !(gt.grid() == pm.f.grid()))
        throw ShapeError("optimal_value: kernels live on different grids");
    double const step = pm.f.grid().step();
    int const n = pm.f.size();
    double cross = 0.0;
    double square = 0.0;
    for (int u = 0; u < n; ++u)
    {
        for (int s = u + 1; s < n; ++s)
        {
            cross += pm.f(s, u) * gt(s, u);
            square += g(s, u) * g(s, u);
        }
    }
    return -std::exp(pm.c - step * step * cross - 0.5 * step * step * square);
}

double system_residual(Kernel const& f, Kernel const& kappa, Kernel const& g)
{
    if (!(f.grid() == kappa.grid()) || !(f.grid() == g.grid()))
        throw ShapeError("system_residual: kernels live on different grids");
    double const step = f.grid().step();
    Eigen::MatrixXd h = f.values() - kappa.values();
    Eigen::MatrixXd g_lower = g.values().triangularView<Eigen::Lower>();
    // sum over u >= j of h(i,u) g(u,j)
    Eigen::MatrixXd integral = h * g_lower;
    Eigen::MatrixXd r = h + g_lower - step * integral;
    return r.triangularView<Eigen::Lower>().toDenseMatrix().cwiseAbs().maxCoeff();
}

namespace
{
SolutionDiagnostics diagnose(PreparedMarket const& pm, Kernel const& kappa, Kernel const& g,
                             Kernel const& gt)
{
    SolutionDiagnostics d;
    int const n = pm.f.size();
    double const step = pm.f.grid().step();
    d.system_residual = system_residual(pm.f, kappa, g);
    for (int i = 0; i < n; ++i)
    {
        double ortho = 0.0;
        for (int j = 0; j <= i; ++j)
        {
            bool k_on = kappa(i, j) != 0.0;
            bool g_on = g(i, j) != 0.0;
            d.kappa_nonzeros += k_on;
            d.g_nonzeros += g_on;
            d.support_overlaps += (k_on && g_on);
            ortho += kappa(i, j) * gt(i, j);
        }
        d.orthogonality = std::max(d.orthogonality, std::abs(step * ortho));
    }
    auto eigs = eigenvalues_sym(g);
    d.g_spectral_bound = eigs.empty() ? 0.0 : eigs.front();
    return d;
}
}  // namespace

OptimalSolution solve(PreparedMarket const& pm, DelayMap const& delay)
{
    Kernel g = solve_g(pm, delay);
    Kernel kappa = solve_kappa(pm, delay, g);
    Kernel gt = g_tilde(g);
    double value = optimal_value(pm, g, gt);
    auto diagnostics = diagnose(pm, kappa, g, gt);
    return OptimalSolution{std::move(kappa),
                           std::move(g),
                           std::move(gt),
                           value,
                           pm.c,
                           delay.inverse_index_map(pm.f.grid()),
                           diagnostics};
}

GridFunction evaluate_strategy(GridFunction const& intercept, Eigen::MatrixXd const& kernel,
                               Eigen::Ref<Eigen::VectorXd const> const& path)
{
    auto const n = intercept.size();
    if (kernel.rows() != n || kernel.cols() != n)
        throw ShapeError("evaluate_strategy: kernel size differs from intercept");
    if (path.size() != n + 1)
        throw ShapeError("evaluate_strategy: path must have n_steps + 1 values");
    GridFunction gamma = intercept;
    for (Eigen::Index i = 1; i < n; ++i)
    {
        for (Eigen::Index j = 1; j <= i; ++j)
            gamma(i) += kernel(i, j) * (path(j) - path(j - 1));
    }
    return gamma;
}

GridFunction evaluate_strategy(OptimalSolution const& sol, GridFunction const& a,
                               Eigen::Ref<Eigen::VectorXd const> const& path)
{
    return evaluate_strategy(a, sol.kappa.values(), path);
}

GridFunction scale_strategy(GridFunction const& gamma, double alpha)
{
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw DomainError("risk aversion must be positive");
    return gamma / alpha;
}

}  // namespace expdelay

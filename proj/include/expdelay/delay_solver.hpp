#pragma once

#include <vector>

#include "market.hpp"

namespace expdelay
{

//! Residual and support checks on a solved (kappa, g) pair.
struct SolutionDiagnostics
{
    double system_residual = 0;          //!< max |f - kappa + g - int (f - kappa) g| over j <= i
    double orthogonality = 0;         //!< max_s |int_0^s kappa g_tilde du|
    long support_overlaps = 0;        //!< pairs where kappa and g are both nonzero
    long kappa_nonzeros = 0;
    long g_nonzeros = 0;              //!< lower triangle only
    double g_spectral_bound = 0;      //!< largest eigenvalue of g's operator
};

struct OptimalSolution
{
    Kernel kappa;     //!< volterra; zero for t_i < tau^{-1}(t_j)
    Kernel g;         //!< symmetric; lower support s <= t < tau^{-1}(s)
    Kernel g_tilde;   //!< lower triangular
    double value;     //!< optimal expected utility, < 0
    double c_ref;
    std::vector<int> inverse_index;
    SolutionDiagnostics diagnostics;
};

/*!
 * Column-wise Fredholm solves: for each j, g(i, j) on i in [j, inv(j)) solves
 * (I - F_j) g(., j) = -f(., j) with F_j the window compression of f.
 */
Kernel solve_g(PreparedMarket const& pm, DelayMap const& delay);

/*!
 * Row-wise Volterra solves for kappa(t_i, .), descending in s from tau(t_i).
 *
 * The discrete equation at s = t_j involves (f - kappa)(t_i, t_j) on both
 * sides through the diagonal window cell; it is solved for that unknown
 * directly, so the discrete system holds exactly.
 */
Kernel solve_kappa(PreparedMarket const& pm, DelayMap const& delay, Kernel const& g);

//! g_tilde(s,u) = g(s,u) - int_0^u g(s,v) g(u,v) dv on the lower triangle.
Kernel g_tilde(Kernel const& g);

//! -exp(c - int int_{u<s} f g_tilde - 1/2 int int_{u<s} g^2)
double optimal_value(PreparedMarket const& pm, Kernel const& g, Kernel const& gt);

//! Full pipeline with diagnostics.
OptimalSolution solve(PreparedMarket const& pm, DelayMap const& delay);

//! Max abs residual of the discrete (kappa, g) equation over pairs j <= i.
double system_residual(Kernel const& f, Kernel const& kappa, Kernel const& g);

/*!
 * gamma(t_i) = intercept(i) + sum_{j=1}^{i} kernel(i, j) (X_j - X_{j-1}).
 *
 * The kernel column for s = t_j pairs with the increment ending at t_j, so a
 * kernel vanishing for t_i < tau^{-1}(t_j) only reads X at nodes <= tau(t_i).
 */
GridFunction evaluate_strategy(GridFunction const& intercept, Eigen::MatrixXd const& kernel,
                               Eigen::Ref<Eigen::VectorXd const> const& path);

//! Optimal strategy a + int kappa dX on a path with n_steps + 1 nodes.
GridFunction evaluate_strategy(OptimalSolution const& sol, GridFunction const& a,
                               Eigen::Ref<Eigen::VectorXd const> const& path);

//! Optimizer for risk aversion alpha: gamma / alpha.
GridFunction scale_strategy(GridFunction const& gamma, double alpha);

}  // namespace expdelay

#pragma once

#include <vector>

#include "kernel.hpp"

namespace expdelay
{

/*!
 * Gaussian market law equivalent to Wiener measure.
 *
 * E[X_t] = int_0^t a_tilde, Cov(X_t, X_s) = min(t,s) - int_0^t int_0^s f_tilde.
 * Construction checks that f_tilde is symmetric with operator spectrum below
 * 1 - 1e-6.
 */
class MarketSpec
{
  public:
    MarketSpec(GridFunction a_tilde, Kernel f_tilde);

    //! Z ~ N(mu, sigma2) drift: X = B + tZ, so a_tilde = mu, f_tilde = -sigma2.
    static MarketSpec gaussian_drift(TimeGrid const& grid, double mu, double sigma2);

    TimeGrid const& grid() const noexcept { return f_tilde_.grid(); }
    GridFunction const& a_tilde() const noexcept { return a_tilde_; }
    Kernel const& f_tilde() const noexcept { return f_tilde_; }

  private:
    GridFunction a_tilde_;
    Kernel f_tilde_;
};

//! Radon-Nikodym data dP/dW = exp(c + int a dX + int int f dX dX).
struct PreparedMarket
{
    MarketSpec spec;
    Kernel f;
    GridFunction a;
    double c;
    std::vector<double> nonzero_eigs;  //!< of f's operator, descending
    double resolvent_residual;         //!< L^2 norm of f + f_tilde - f o f_tilde
};

//! Default relative cutoff separating eigenvalues from discretization noise.
inline constexpr double kEigenCutoff = 1e-10;

//! f with f + f_tilde = f o f_tilde, i.e. F = -Ft (I - Ft)^{-1} in operator form.
Kernel solve_resolvent(Kernel const& f_tilde);

//! a = a_tilde - int f(., s) a_tilde(s) ds
GridFunction compute_a(GridFunction const& a_tilde, Kernel const& f);

//! Eigenvalues of f's operator with |lambda| > cutoff * max(1, |lambda|_max).
std::vector<double> nonzero_eigenvalues(Kernel const& f, double cutoff = kEigenCutoff);

double compute_c(GridFunction const& a, GridFunction const& a_tilde, Kernel const& f,
                 double cutoff = kEigenCutoff);

PreparedMarket prepare_market(MarketSpec const& spec, double cutoff = kEigenCutoff);

//! Mean at nodes t_0..t_n.
GridFunction mean_vector(MarketSpec const& spec);

/*!
 * Covariance at nodes t_0..t_n, (n+1) x (n+1). Row and column 0 vanish
 * (X_0 = 0); the block over t_1..t_n is checked to be positive definite and
 * ConditioningError is thrown otherwise.
 */
Eigen::MatrixXd covariance_matrix(MarketSpec const& spec);

//! log dP/dW on a path sampled at all n + 1 nodes, Ito sums throughout.
double log_rn_derivative(PreparedMarket const& pm, Eigen::Ref<Eigen::VectorXd const> const& path);

}  // namespace expdelay

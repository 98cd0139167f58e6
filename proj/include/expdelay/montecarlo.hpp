#pragma once

#include <cstdint>
#include <vector>

#include "delay_solver.hpp"

namespace expdelay
{

/*!
 * Market paths sampled at every grid node.
 *
 * Column p holds X_{t_0..t_n} for path p. Path p is drawn from its own
 * generator seeded by (seed, p), so results do not depend on the order in
 * which paths are produced or evaluated.
 */
struct PathEnsemble
{
    TimeGrid grid;
    std::uint64_t seed;
    Eigen::MatrixXd paths;   //!< (n_steps + 1) x m
    Eigen::MatrixXd factor;  //!< lower Cholesky factor of the covariance over t_1..t_n

    Eigen::Index size() const noexcept { return paths.cols(); }
    Eigen::VectorXd path(Eigen::Index p) const { return paths.col(p); }
};

struct UtilityEstimate
{
    double mean = 0;
    double std_error = 0;
    long n_paths = 0;
    double alpha = 1;
    long n_clamped = 0;  //!< paths whose exponent -alpha W was clamped at 700
};

//! Linear strategy gamma(t_i) = intercept(i) + sum_{j=1}^{i} kernel(i,j) (X_j - X_{j-1}).
struct LinearStrategy
{
    GridFunction intercept;
    Eigen::MatrixXd kernel;
};

PathEnsemble sample_paths(MarketSpec const& spec, long m, std::uint64_t seed);
PathEnsemble sample_paths(PreparedMarket const& pm, long m, std::uint64_t seed);

//! sum_i integrand(i) (path(i+1) - path(i))
double ito_integral(Eigen::Ref<Eigen::VectorXd const> const& integrand,
                    Eigen::Ref<Eigen::VectorXd const> const& path);

//! Terminal wealth int gamma dX on every path of the ensemble.
Eigen::VectorXd wealth(LinearStrategy const& strategy, PathEnsemble const& ens);

//! -exp(-alpha * w) per path, with the exponent clamped at 700.
std::vector<double> path_utilities(Eigen::Ref<Eigen::VectorXd const> const& w, double alpha,
                                   long* n_clamped = nullptr);

//! Mean and standard error by fixed-order pairwise summation.
UtilityEstimate summarize(std::vector<double> const& values, double alpha = 1, long n_clamped = 0);

double pairwise_sum(double const* data, std::size_t count);

//! Expected utility of (1/alpha) * gamma_hat under u(x) = -exp(-alpha x).
UtilityEstimate estimate_utility(PreparedMarket const& pm, OptimalSolution const& sol,
                                 PathEnsemble const& ens, double alpha = 1);

//! Optimal strategy as a LinearStrategy.
LinearStrategy optimal_strategy(PreparedMarket const& pm, OptimalSolution const& sol);

//---------------------------------------------------------------------------//
// Perturbation test
//---------------------------------------------------------------------------//

//! Direction eta added to gamma_hat; must be adapted to the delayed filtration.
using Perturbation = LinearStrategy;

//! Throws InvalidPerturbation unless kernel(i,j) = 0 whenever j > i or i < inv[j].
void check_adapted(Perturbation const& eta, std::vector<int> const& inverse_index);

/*!
 * Smooth random admissible directions: kernel (c0 + c1 t + c2 s) masked to
 * kappa's support and intercept (d0 + d1 t), each normalized to unit L^2 norm.
 */
std::vector<Perturbation> random_perturbations(TimeGrid const& grid,
                                               std::vector<int> const& inverse_index,
                                               int count, std::uint64_t seed);

struct PerturbationResult
{
    int direction;
    double magnitude;
    UtilityEstimate estimate;
    double gap;          //!< estimate - optimum (positive: perturbation did better)
    double combined_se;  //!< sqrt(se_opt^2 + se_pert^2)
    bool pass;
};

struct PerturbationReport
{
    UtilityEstimate optimum;
    std::vector<PerturbationResult> results;
    bool pass = true;
};

//! Checks that no gamma_hat + magnitude * eta beats gamma_hat by more than 3 combined SE.
PerturbationReport perturbation_test(PreparedMarket const& pm, OptimalSolution const& sol,
                                     PathEnsemble const& ens,
                                     std::vector<Perturbation> const& perturbations,
                                     std::vector<double> const& magnitudes);

//---------------------------------------------------------------------------//

//! log dP/dW on every path of the ensemble.
Eigen::VectorXd log_rn_derivatives(PreparedMarket const& pm, PathEnsemble const& ens);

struct NormalizationCheck
{
    double mean;
    double std_error;
    bool pass;  //!< |mean - 1| <= 3 SE
};

//! E[dP/dW] over an ensemble that should be Wiener distributed.
NormalizationCheck rn_normalization(PreparedMarket const& pm, PathEnsemble const& wiener);

}  // namespace expdelay

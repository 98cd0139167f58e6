// Brute-force oracles and random generators shared by the unit tests.
#pragma once

#include <random>

#include <Eigen/Dense>

#include "expdelay/kernel.hpp"

namespace testing
{

inline Eigen::MatrixXd random_matrix(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            m(i, j) = normal(rng);
    return m;
}

inline Eigen::VectorXd random_vector(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v(i) = normal(rng);
    return v;
}

//! Symmetric kernel whose operator has spectral radius exactly `radius`.
inline expdelay::Kernel random_contraction(expdelay::TimeGrid const& grid, double radius,
                                           std::uint64_t seed)
{
    int n = grid.n_steps();
    Eigen::MatrixXd m = random_matrix(n, seed);
    m = 0.5 * (m + m.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(grid.step() * m, Eigen::EigenvaluesOnly);
    double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    m *= radius / rho;
    return expdelay::Kernel(grid, m, expdelay::KernelShape::symmetric);
}

inline Eigen::MatrixXd triple_loop_compose(Eigen::MatrixXd const& a, Eigen::MatrixXd const& b,
                                           double step)
{
    auto n = a.rows();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
        {
            double s = 0;
            for (Eigen::Index k = 0; k < n; ++k)
                s += a(i, k) * b(k, j);
            r(i, j) = step * s;
        }
    return r;
}

}  // namespace testing

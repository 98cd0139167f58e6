#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "timegrid.hpp"

namespace expdelay
{

//! Function sampled at the left endpoints t_0..t_{n-1} (or nodes, when noted).
using GridFunction = Eigen::VectorXd;

enum class KernelShape
{
    general,
    symmetric,  //!< psi(t,s) = psi(s,t)
    volterra,   //!< psi(t,s) = 0 for s > t
};

/*!
 * Grid-sampled element of L^2([0,T]^2).
 *
 * Entry (i, j) is the value at (t_i, t_j) for i, j in [0, n). The induced
 * operator acts by the left-endpoint rule: (K phi)(t_i) = step * sum_j K(i,j) phi(t_j).
 * The shape flag is checked on construction.
 */
class Kernel
{
  public:
    Kernel(TimeGrid grid, Eigen::MatrixXd values, KernelShape shape = KernelShape::general);

    static Kernel zero(TimeGrid const& grid, KernelShape shape = KernelShape::general);
    static Kernel constant(TimeGrid const& grid, double value);

    TimeGrid const& grid() const noexcept { return grid_; }
    Eigen::MatrixXd const& values() const noexcept { return values_; }
    KernelShape shape() const noexcept { return shape_; }
    int size() const noexcept { return static_cast<int>(values_.rows()); }
    double operator()(int i, int j) const { return values_(i, j); }

    //! Matrix of the discretized operator, step * values.
    Eigen::MatrixXd operator_matrix() const { return grid_.step() * values_; }

  private:
    TimeGrid grid_;
    Eigen::MatrixXd values_;
    KernelShape shape_;
};

//! True when |K(i,j) - K(j,i)| <= 1e-10 * max|K| everywhere.
bool is_symmetric(Eigen::Ref<Eigen::MatrixXd const> const& values);

//! Operator product: result(i,j) = step * sum_k K1(i,k) K2(k,j).
Kernel compose(Kernel const& lhs, Kernel const& rhs);

//! Eigenvalues of the induced operator, sorted descending.
std::vector<double> eigenvalues_sym(Kernel const& k);

//! Window eigenvalues at or above this value are rejected as non-invertible.
inline constexpr double kSpectrumMargin = 1e-6;

/*!
 * Solve x(i) - step * sum_{k in [lo,hi)} K(i,k) x(k) = rhs(i) for i in [lo,hi).
 *
 * Uses a dense Cholesky factorization of the window block. Throws
 * SpectrumViolation when the window operator has an eigenvalue >= 1 - 1e-6.
 * Returns the hi - lo window entries.
 */
Eigen::VectorXd solve_shifted(Kernel const& k, Eigen::Ref<Eigen::VectorXd const> const& rhs,
                              int lo, int hi);

//! L^2([0,T]^2) norm under the rectangle rule.
double l2_norm(Kernel const& k);

//---------------------------------------------------------------------------//
// CSV: one row per first-argument index, comma separated.
//---------------------------------------------------------------------------//

void write_csv(std::ostream& os, Eigen::Ref<Eigen::MatrixXd const> const& values);
void write_csv(std::string const& path, Eigen::Ref<Eigen::MatrixXd const> const& values);
Eigen::MatrixXd read_csv_matrix(std::istream& is);
Eigen::MatrixXd read_csv_matrix(std::string const& path);
//! Vector from a CSV file: either one row or one value per line.
Eigen::VectorXd read_csv_vector(std::string const& path);

}  // namespace expdelay

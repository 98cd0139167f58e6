#include "expdelay/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "expdelay/errors.hpp"

namespace expdelay
{

Kernel::Kernel(TimeGrid grid, Eigen::MatrixXd values, KernelShape shape)
    : grid_(grid), values_(std::move(values)), shape_(shape)
{
    int n = grid_.n_steps();
    if (values_.rows() != n || values_.cols() != n)
        throw ShapeError("kernel values must be n_steps x n_steps");
    if (shape_ == KernelShape::symmetric && !is_symmetric(values_))
        throw ValidationError("kernel flagged symmetric is not symmetric");
    if (shape_ == KernelShape::volterra)
    {
        for (int j = 1; j < n; ++j)
        {
            for (int i = 0; i < j; ++i)
            {
                if (values_(i, j) != 0.0)
                    throw ValidationError("kernel flagged volterra has entries above the diagonal");
            }
        }
    }
}

Kernel Kernel::zero(TimeGrid const& grid, KernelShape shape)
{
    int n = grid.n_steps();
    return Kernel(grid, Eigen::MatrixXd::Zero(n, n), shape);
}

Kernel Kernel::constant(TimeGrid const& grid, double value)
{
    int n = grid.n_steps();
    return Kernel(grid, Eigen::MatrixXd::Constant(n, n, value), KernelShape::symmetric);
}

bool is_symmetric(Eigen::Ref<Eigen::MatrixXd const> const& values)
{
    if (values.rows() != values.cols())
        return false;
    double scale = values.cwiseAbs().maxCoeff();
    if (values.size() == 0 || scale == 0.0)
        return true;
    return (values - values.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

Kernel compose(Kernel const& lhs, Kernel const& rhs)
{
    if (!(lhs.grid() == rhs.grid()))
        throw ShapeError("compose: kernels live on different grids");
    Eigen::MatrixXd product = lhs.grid().step() * (lhs.values() * rhs.values());
    return Kernel(lhs.grid(), std::move(product));
}

std::vector<double> eigenvalues_sym(Kernel const& k)
{
    if (!is_symmetric(k.values()))
        throw ValidationError("eigenvalues_sym: kernel is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.operator_matrix(),
                                                      Eigen::EigenvaluesOnly);
    auto const& ev = es.eigenvalues();
    std::vector<double> result(ev.data(), ev.data() + ev.size());
    std::sort(result.begin(), result.end(), std::greater<>());
    return result;
}

Eigen::VectorXd solve_shifted(Kernel const& k, Eigen::Ref<Eigen::VectorXd const> const& rhs,
                              int lo, int hi)
{
    int const n = k.size();
    if (rhs.size() != n)
        throw ShapeError("solve_shifted: rhs length differs from grid");
    if (lo < 0 || hi > n || lo > hi)
        throw DomainError("solve_shifted: window out of range");
    int const w = hi - lo;
    if (w == 0)
        return Eigen::VectorXd(0);

    auto block = k.values().block(lo, lo, w, w);
    if (!is_symmetric(block))
        throw ValidationError("solve_shifted: kernel not symmetric on the window");

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(w, w) - k.grid().step() * block;
    // I - step*K - margin*I is positive definite iff every window eigenvalue
    // lies below 1 - margin.
    Eigen::MatrixXd shifted = system;
    shifted.diagonal().array() -= kSpectrumMargin;
    if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() != Eigen::Success)
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.grid().step() * block,
                                                          Eigen::EigenvaluesOnly);
        double top = es.eigenvalues().maxCoeff();
        std::ostringstream os;
        os << "window operator spectrum reaches " << top << " (must stay below 1 - "
           << kSpectrumMargin << ")";
        throw SpectrumViolation(os.str(), top);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    return llt.solve(rhs.segment(lo, w));
}

double l2_norm(Kernel const& k)
{
    return k.grid().step() * k.values().norm();
}

//---------------------------------------------------------------------------//

void write_csv(std::ostream& os, Eigen::Ref<Eigen::MatrixXd const> const& values)
{
    auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index i = 0; i < values.rows(); ++i)
    {
        for (Eigen::Index j = 0; j < values.cols(); ++j)
        {
            if (j)
                os << ',';
            os << values(i, j);
        }
        os << '\n';
    }
    os.precision(old_precision);
}

void write_csv(std::string const& path, Eigen::Ref<Eigen::MatrixXd const> const& values)
{
    std::ofstream os(path);
    if (!os)
        throw ValidationError("cannot open " + path + " for writing");
    write_csv(os, values);
}

namespace
{
std::vector<std::vector<double>> read_rows(std::istream& is)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line))
    {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
        {
            try
            {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos)
                    throw std::invalid_argument(cell);
            }
            catch (std::exception const&)
            {
                throw ValidationError("malformed CSV cell '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::ifstream open_or_throw(std::string const& path)
{
    std::ifstream is(path);
    if (!is)
        throw ValidationError("cannot open " + path);
    return is;
}
}  // namespace

Eigen::MatrixXd read_csv_matrix(std::istream& is)
{
    auto rows = read_rows(is);
    if (rows.empty())
        throw ValidationError("empty CSV matrix");
    auto cols = rows.front().size();
    Eigen::MatrixXd m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        if (rows[i].size() != cols)
            throw ValidationError("ragged CSV matrix");
        for (std::size_t j = 0; j < cols; ++j)
            m(i, j) = rows[i][j];
    }
    return m;
}

Eigen::MatrixXd read_csv_matrix(std::string const& path)
{
    auto is = open_or_throw(path);
    return read_csv_matrix(is);
}

Eigen::VectorXd read_csv_vector(std::string const& path)
{
    auto is = open_or_throw(path);
    auto rows = read_rows(is);
    std::vector<double> flat;
    for (auto const& r : rows)
        flat.insert(flat.end(), r.begin(), r.end());
    if (rows.size() > 1)
    {
        for (auto const& r : rows)
        {
            if (r.size() != 1)
                throw ValidationError("CSV vector must be a single row or a single column");
        }
    }
    return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

}  // namespace expdelay

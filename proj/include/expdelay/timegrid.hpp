#pragma once

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

namespace expdelay
{

//! Uniform discretization t_i = i * T / n of [0, T].
class TimeGrid
{
  public:
    TimeGrid(double horizon, int n_steps);

    double horizon() const noexcept { return horizon_; }
    int n_steps() const noexcept { return n_steps_; }
    double step() const noexcept { return step_; }

    //! Node i in [0, n_steps]; exact at both ends.
    double node(int i) const;
    std::vector<double> nodes() const;

    bool operator==(TimeGrid const& other) const noexcept
    {
        return horizon_ == other.horizon_ && n_steps_ == other.n_steps_;
    }

  private:
    double horizon_;
    int n_steps_;
    double step_;
};

//---------------------------------------------------------------------------//
// Delay specifications
//---------------------------------------------------------------------------//

//! tau(t) = (t - lag)^+
struct ConstantLag
{
    double lag;
};

//! Linear interpolation between (time, value) breakpoints. A repeated time
//! encodes a jump; the later value is the right limit (right-continuity).
struct PiecewiseLinear
{
    std::vector<std::pair<double, double>> breakpoints;
};

//! Step function: tau(t) = values[i] for t in [t_i, t_{i+1}).
struct Tabulated
{
    std::vector<double> values;
};

//! tau(t) = t. Only meaningful as the analytic zero-delay limit.
struct ZeroDelayLimit
{
};

using DelaySpec = std::variant<ConstantLag, PiecewiseLinear, Tabulated, ZeroDelayLimit>;

/*!
 * Delay function tau on [0,T] together with its left-continuous inverse.
 *
 * tau is nondecreasing, right-continuous and satisfies the strict-delay
 * margin tau(t) <= (t - epsilon)^+. Specs are validated on construction;
 * violations throw ValidationError.
 */
class DelayMap
{
  public:
    static DelayMap constant_lag(double lag, double horizon);
    static DelayMap piecewise_linear(std::vector<std::pair<double, double>> breakpoints,
                                     double epsilon, double horizon);
    static DelayMap tabulated(std::vector<double> values, double epsilon, TimeGrid const& grid);
    //! Not a valid market delay (epsilon = 0); for oracle limit checks.
    static DelayMap zero_delay_limit(double horizon);

    double horizon() const noexcept { return horizon_; }
    double epsilon() const noexcept { return epsilon_; }
    DelaySpec const& spec() const noexcept { return spec_; }
    bool is_strict() const noexcept { return epsilon_ > 0; }

    double tau_at(double t) const;
    //! T ^ inf{u : tau(u) >= s}
    double tau_inverse_at(double s) const;

    //! tau(t) >= s, with a relative tolerance that resolves exact node ties.
    bool reaches(double t, double s) const;

    //! Smallest k with tau(t_k) >= t_j, capped at n_steps.
    int inverse_index(TimeGrid const& grid, int j) const;
    //! inverse_index for every j in [0, n_steps], by a single monotone scan.
    std::vector<int> inverse_index_map(TimeGrid const& grid) const;

    //! Points in (0,T) where tau^{-1} may fail to be smooth.
    std::vector<double> inverse_kinks() const;

  private:
    DelayMap(DelaySpec spec, double epsilon, double horizon, double table_step = 0);

    void validate() const;

    DelaySpec spec_;
    double epsilon_;
    double horizon_;
    double table_step_;
};

}  // namespace expdelay

#include "expdelay/timegrid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "expdelay/errors.hpp"

namespace expdelay
{
namespace
{
template<class... Ts>
struct Overloaded : Ts...
{
    using Ts::operator()...;
};
template<class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kTieTolerance = 1e-12;

void check_time(double t, double horizon, char const* what)
{
    if (!(t >= 0.0 && t <= horizon))
    {
        std::ostringstream os;
        os << what << "=" << t << " outside [0, " << horizon << "]";
        throw DomainError(os.str());
    }
}
}  // namespace

TimeGrid::TimeGrid(double horizon, int n_steps)
    : horizon_(horizon), n_steps_(n_steps), step_(horizon / n_steps)
{
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ValidationError("time grid horizon must be positive and finite");
    if (n_steps < 1)
        throw ValidationError("time grid needs at least one step");
}

double TimeGrid::node(int i) const
{
    if (i < 0 || i > n_steps_)
        throw DomainError("grid index out of range");
    if (i == n_steps_)
        return horizon_;
    return horizon_ * static_cast<double>(i) / static_cast<double>(n_steps_);
}

std::vector<double> TimeGrid::nodes() const
{
    std::vector<double> result(n_steps_ + 1);
    for (int i = 0; i <= n_steps_; ++i)
        result[i] = node(i);
    return result;
}

//---------------------------------------------------------------------------//

DelayMap::DelayMap(DelaySpec spec, double epsilon, double horizon, double table_step)
    : spec_(std::move(spec)), epsilon_(epsilon), horizon_(horizon), table_step_(table_step)
{
    if (!(horizon > 0.0))
        throw ValidationError("delay horizon must be positive");
    validate();
}

DelayMap DelayMap::constant_lag(double lag, double horizon)
{
    if (!(lag > 0.0) || !std::isfinite(lag))
        throw ValidationError("constant lag must be positive");
    return DelayMap(ConstantLag{lag}, lag, horizon);
}

DelayMap DelayMap::piecewise_linear(std::vector<std::pair<double, double>> breakpoints,
                                    double epsilon, double horizon)
{
    return DelayMap(PiecewiseLinear{std::move(breakpoints)}, epsilon, horizon);
}

DelayMap DelayMap::tabulated(std::vector<double> values, double epsilon, TimeGrid const& grid)
{
    if (static_cast<int>(values.size()) != grid.n_steps() + 1)
        throw ValidationError("tabulated delay needs exactly n_steps + 1 values");
    return DelayMap(Tabulated{std::move(values)}, epsilon, grid.horizon(), grid.step());
}

DelayMap DelayMap::zero_delay_limit(double horizon)
{
    DelayMap d(ConstantLag{1.0}, 1.0, horizon);
    d.spec_ = ZeroDelayLimit{};
    d.epsilon_ = 0;
    return d;
}

void DelayMap::validate() const
{
    if (!(epsilon_ > 0.0))
        throw ValidationError("strict delay requires epsilon > 0");
    auto bound = [this](double t) { return std::max(t - epsilon_, 0.0); };
    double const slack = kTieTolerance * std::max(1.0, horizon_);

    std::visit(
        Overloaded{
            [](ConstantLag const&) {},
            [](ZeroDelayLimit const&) {},
            [&](PiecewiseLinear const& pl) {
                auto const& bp = pl.breakpoints;
                if (bp.size() < 2)
                    throw ValidationError("piecewise-linear delay needs >= 2 breakpoints");
                if (bp.front().first != 0.0 || bp.back().first != horizon_)
                    throw ValidationError("piecewise-linear delay must span [0, T] exactly");
                for (std::size_t k = 0; k < bp.size(); ++k)
                {
                    auto [t, v] = bp[k];
                    if (!(v >= 0.0 && v <= horizon_))
                        throw ValidationError("delay values must lie in [0, T]");
                    if (k > 0 && (t < bp[k - 1].first || v < bp[k - 1].second))
                        throw ValidationError("piecewise-linear delay must be nondecreasing");
                    if (k > 1 && t == bp[k - 1].first && t == bp[k - 2].first)
                        throw ValidationError("at most two breakpoints may share a time");
                    if (v > bound(t) + slack)
                        throw ValidationError("delay violates tau(t) <= (t - epsilon)^+");
                }
                // Between breakpoints both tau and the bound are linear except at
                // t = epsilon, so one extra check suffices.
                if (epsilon_ < horizon_ && tau_at(epsilon_) > slack)
                    throw ValidationError("delay violates tau(t) <= (t - epsilon)^+");
            },
            [&](Tabulated const& tab) {
                double prev = 0.0;
                for (std::size_t i = 0; i < tab.values.size(); ++i)
                {
                    double v = tab.values[i];
                    double t = (i + 1 == tab.values.size())
                                   ? horizon_
                                   : horizon_ * static_cast<double>(i)
                                         / static_cast<double>(tab.values.size() - 1);
                    if (!(v >= 0.0) || v < prev)
                        throw ValidationError("tabulated delay must be nonnegative and nondecreasing");
                    if (v > bound(t) + slack)
                        throw ValidationError("tabulated delay violates tau(t) <= (t - epsilon)^+");
                    prev = v;
                }
            },
        },
        spec_);
}

double DelayMap::tau_at(double t) const
{
    check_time(t, horizon_, "t");
    return std::visit(
        Overloaded{
            [&](ConstantLag const& c) { return std::max(t - c.lag, 0.0); },
            [&](ZeroDelayLimit const&) { return t; },
            [&](PiecewiseLinear const& pl) {
                auto const& bp = pl.breakpoints;
                // Last breakpoint with time <= t; with a jump this picks the right value.
                auto it = std::upper_bound(bp.begin(), bp.end(), t,
                                           [](double x, auto const& p) { return x < p.first; });
                auto k = static_cast<std::size_t>(std::distance(bp.begin(), it)) - 1;
                if (k + 1 >= bp.size() || bp[k].first == t)
                    return bp[k].second;
                auto [t0, v0] = bp[k];
                auto [t1, v1] = bp[k + 1];
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            },
            [&](Tabulated const& tab) {
                auto n = tab.values.size() - 1;
                if (t >= horizon_)
                    return tab.values[n];
                auto i = static_cast<std::size_t>(std::floor(t / table_step_));
                // Guard against t slightly below a node rounding down.
                if (i + 1 <= n && t >= horizon_ * static_cast<double>(i + 1) / static_cast<double>(n))
                    ++i;
                return tab.values[std::min(i, n)];
            },
        },
        spec_);
}

double DelayMap::tau_inverse_at(double s) const
{
    check_time(s, horizon_, "s");
    double const T = horizon_;
    return std::visit(
        Overloaded{
            [&](ConstantLag const& c) { return s <= 0.0 ? 0.0 : std::min(s + c.lag, T); },
            [&](ZeroDelayLimit const&) { return s; },
            [&](PiecewiseLinear const& pl) {
                auto const& bp = pl.breakpoints;
                for (std::size_t k = 0; k + 1 < bp.size(); ++k)
                {
                    auto [t0, v0] = bp[k];
                    auto [t1, v1] = bp[k + 1];
                    if (v0 >= s)
                        return std::min(t0, T);
                    if (t1 > t0 && v1 >= s)
                        return std::min(t0 + (s - v0) / (v1 - v0) * (t1 - t0), T);
                }
                return T;
            },
            [&](Tabulated const& tab) {
                auto n = tab.values.size() - 1;
                for (std::size_t i = 0; i <= n; ++i)
                {
                    if (tab.values[i] >= s)
                        return i == n ? T : T * static_cast<double>(i) / static_cast<double>(n);
                }
                return T;
            },
        },
        spec_);
}

bool DelayMap::reaches(double t, double s) const
{
    return tau_at(t) >= s - kTieTolerance * std::max(1.0, horizon_);
}

int DelayMap::inverse_index(TimeGrid const& grid, int j) const
{
    if (j < 0 || j > grid.n_steps())
        throw DomainError("grid index out of range");
    double s = grid.node(j);
    for (int k = 0; k < grid.n_steps(); ++k)
    {
        if (reaches(grid.node(k), s))
            return k;
    }
    return grid.n_steps();
}

std::vector<int> DelayMap::inverse_index_map(TimeGrid const& grid) const
{
    if (grid.horizon() != horizon_)
        throw ShapeError("delay map and grid have different horizons");
    int const n = grid.n_steps();
    std::vector<int> result(n + 1);
    int k = 0;
    for (int j = 0; j <= n; ++j)
    {
        double s = grid.node(j);
        while (k < n && !reaches(grid.node(k), s))
            ++k;
        result[j] = k;
    }
    return result;
}

std::vector<double> DelayMap::inverse_kinks() const
{
    std::vector<double> pts = std::visit(
        Overloaded{
            [&](ConstantLag const& c) { return std::vector<double>{c.lag, horizon_ - c.lag}; },
            [&](ZeroDelayLimit const&) { return std::vector<double>{}; },
            [&](PiecewiseLinear const& pl) {
                std::vector<double> v;
                for (auto const& [t, val] : pl.breakpoints)
                    v.push_back(val);
                return v;
            },
            [&](Tabulated const& tab) { return tab.values; },
        },
        spec_);
    std::vector<double> result;
    for (double p : pts)
    {
        if (p > 0.0 && p < horizon_)
            result.push_back(p);
    }
    std::sort(result.begin(), result.end());
    result.erase(std::unique(result.begin(), result.end()), result.end());
    return result;
}

}  // namespace expdelay

#include "expdelay/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "expdelay/errors.hpp"

namespace expdelay::oracle
{
namespace
{
constexpr int kPenaltyPanels = 20000;

// Interval length tau^{-1}(t) - t over which the trader stays blind to dX_t.
double blind_length(DelayMap const& d, double t)
{
    return d.tau_inverse_at(t) - t;
}
}  // namespace

ExampleParams::ExampleParams(double mu_, double sigma2_, DelayMap delay_)
    : mu(mu_), sigma2(sigma2_), delay(std::move(delay_))
{
    if (!(sigma2 >= 0.0))
        throw ValidationError("sigma2 must be nonnegative");
    if (delay.horizon() != 1.0)
        throw ValidationError("the closed-form example lives on [0, 1]");
}

PreparedConstants prepared(ExampleParams const& p)
{
    double s2 = p.sigma2;
    return {s2 / (1 + s2), p.mu / (1 + s2),
            (s2 - p.mu * p.mu) / (2 * (1 + s2)) - 0.5 * std::log1p(s2)};
}

double g(ExampleParams const& p, double t, double s)
{
    if (!(0.0 <= s && s <= t && t <= 1.0))
        throw DomainError("oracle g needs 0 <= s <= t <= 1");
    double inv = p.delay.tau_inverse_at(s);
    // t == tau^{-1}(s) up to rounding belongs to kappa's side
    if (t >= inv - 1e-12)
        return 0.0;
    return -p.sigma2 / (1 + p.sigma2 * (1 + s - inv));
}

double integrate(std::function<double(double)> const& fn, double lo, double hi,
                 std::vector<double> const& breaks, int panels)
{
    // 5-point Gauss-Legendre nodes and weights on [-1, 1]
    static constexpr std::array<double, 5> x{0.0,
                                             0.5384693101056831,
                                             -0.5384693101056831,
                                             0.9061798459386640,
                                             -0.9061798459386640};
    static constexpr std::array<double, 5> w{0.5688888888888889,
                                             0.4786286704993665,
                                             0.4786286704993665,
                                             0.2369268850561891,
                                             0.2369268850561891};
    std::vector<double> cuts{lo};
    for (double b : breaks)
    {
        if (b > lo && b < hi)
            cuts.push_back(b);
    }
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    {
        double a = cuts[k];
        double b = cuts[k + 1];
        if (b <= a)
            continue;
        int m = std::max(1, static_cast<int>(std::ceil(panels * (b - a) / (hi - lo))));
        double h = (b - a) / m;
        for (int q = 0; q < m; ++q)
        {
            double mid = a + (q + 0.5) * h;
            double sum = 0.0;
            for (std::size_t r = 0; r < x.size(); ++r)
                sum += w[r] * fn(mid + 0.5 * h * x[r]);
            total += 0.5 * h * sum;
        }
    }
    return total;
}

double penalty(ExampleParams const& p)
{
    double s2 = p.sigma2;
    if (s2 == 0.0)
        return 0.0;
    auto integrand = [&](double t) {
        double len = blind_length(p.delay, t);
        return len / (1 + s2 * (1 - len));
    };
    double integral = integrate(integrand, 0.0, 1.0, p.delay.inverse_kinks(), kPenaltyPanels);
    return s2 * s2 / (2 * (1 + s2)) * integral;
}

double value(ExampleParams const& p)
{
    double s2 = p.sigma2;
    return -std::exp((s2 - p.mu * p.mu) / (2 * (1 + s2)) + penalty(p)) / std::sqrt(1 + s2);
}

double covariance(ExampleParams const& p, double t, double s)
{
    if (!(t >= 0.0 && t <= 1.0 && s >= 0.0 && s <= 1.0))
        throw DomainError("oracle covariance needs t, s in [0, 1]");
    return std::min(t, s) * (1 + p.sigma2 * std::max(t, s));
}

}  // namespace expdelay::oracle

#pragma once

#include <functional>
#include <vector>

#include "timegrid.hpp"

namespace expdelay::oracle
{

/*!
 * Closed-form reference for the market X_t = B_t + t Z, Z ~ N(mu, sigma2),
 * on [0, 1]. Everything here is computed from the analytic formulas only and
 * shares no code path with the numerical solver.
 */
struct ExampleParams
{
    double mu;
    double sigma2;
    DelayMap delay;

    ExampleParams(double mu, double sigma2, DelayMap delay);
};

struct PreparedConstants
{
    double f;  //!< constant resolvent kernel
    double a;  //!< constant drift
    double c;
};

PreparedConstants prepared(ExampleParams const& p);

//! Closed-form g(t, s) for s <= t; zero once t reaches tau^{-1}(s) within 1e-12.
double g(ExampleParams const& p, double t, double s);

//! sigma^4 / (2(1+sigma^2)) * int_0^1 (tau^{-1}(t) - t) / (1 + sigma^2 (1 + t - tau^{-1}(t))) dt
double penalty(ExampleParams const& p);

//! -(1+sigma^2)^{-1/2} exp((sigma^2 - mu^2)/(2(1+sigma^2)) + penalty)
double value(ExampleParams const& p);

//! min(t,s) (1 + sigma^2 max(t,s))
double covariance(ExampleParams const& p, double t, double s);

//! Composite Gauss-Legendre on [lo, hi] split at `breaks`, ~`panels` panels in total.
double integrate(std::function<double(double)> const& fn, double lo, double hi,
                 std::vector<double> const& breaks, int panels);

}  // namespace expdelay::oracle

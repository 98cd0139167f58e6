#pragma once

#include <stdexcept>
#include <string>

namespace expdelay
{

//! Argument outside the domain of a function (times outside [0,T], alpha <= 0).
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

//! Grid or length mismatch between operands.
class ShapeError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! Malformed input: configs, delay specs, flags that do not hold.
class ValidationError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! An operator spectrum reaches the forbidden region [1, inf).
class SpectrumViolation : public std::runtime_error
{
  public:
    SpectrumViolation(std::string const& what, double bound)
        : std::runtime_error(what), bound_(bound)
    {
    }

    //! Largest offending eigenvalue (NaN when not computed).
    double bound() const noexcept { return bound_; }

  private:
    double bound_;
};

//! A covariance that should be positive definite is not, numerically.
class ConditioningError : public std::runtime_error
{
  public:
    ConditioningError(std::string const& what, double smallest_eigenvalue)
        : std::runtime_error(what), smallest_(smallest_eigenvalue)
    {
    }

    double smallest_eigenvalue() const noexcept { return smallest_; }

  private:
    double smallest_;
};

//! Perturbation kernel that is not adapted to the delayed filtration.
class InvalidPerturbation : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace expdelay

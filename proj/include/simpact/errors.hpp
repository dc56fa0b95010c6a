#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace simpact
{

/// Covector or configuration length does not match the metric/model dimension.
class DimensionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Mass matrix is asymmetric or not positive definite.
class NotPositiveDefiniteError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A set of contact normals is linearly dependent under the kinetic metric.
/// `subset()` names the normal indices that span the dependency.
class DegenerateNormalsError : public std::runtime_error
{
public:
  DegenerateNormalsError(std::vector<std::size_t> subset, const std::string& what);

  const std::vector<std::size_t>& subset() const noexcept { return subset_; }

private:
  std::vector<std::size_t> subset_;
};

/// An iterative solve (Newton, Gauss-Newton) failed to reach its tolerance.
class ConvergenceError : public std::runtime_error
{
public:
  ConvergenceError(const std::string& what, double residual, int iterations)
    : std::runtime_error(what), residual_(residual), iterations_(iterations)
  {
  }

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double residual_;
  int iterations_;
};

/// The time stepper could not advance past `time()`.
class StepFailure : public std::runtime_error
{
public:
  StepFailure(const std::string& what, double time) : std::runtime_error(what), time_(time) {}

  double time() const noexcept { return time_; }

private:
  double time_;
};

}  // namespace simpact

#pragma once

// Covector algebra under the kinetic energy metric <a, b> = a M^{-1} b^T.

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "simpact/errors.hpp"

namespace simpact
{

enum class CovectorRole
{
  momentum,
  normal
};

/// Row covector in the cotangent space at some configuration. Momenta
/// p = qdot^T M and gap gradients Dphi both live here.
class Covector
{
public:
  Covector() = default;
  explicit Covector(Eigen::VectorXd values, CovectorRole role = CovectorRole::momentum)
    : values_(std::move(values)), role_(role)
  {
  }
  Covector(std::initializer_list<double> values, CovectorRole role = CovectorRole::momentum);

  static Covector zero(Eigen::Index n, CovectorRole role = CovectorRole::momentum)
  {
    return Covector(Eigen::VectorXd::Zero(n), role);
  }

  Eigen::Index size() const noexcept { return values_.size(); }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }
  CovectorRole role() const noexcept { return role_; }

  Covector as(CovectorRole role) const { return Covector(values_, role); }

  Covector& operator+=(const Covector& other);
  Covector& operator-=(const Covector& other);
  Covector& operator*=(double s)
  {
    values_ *= s;
    return *this;
  }

private:
  Eigen::VectorXd values_;
  CovectorRole role_ = CovectorRole::momentum;
};

Covector operator+(Covector a, const Covector& b);
Covector operator-(Covector a, const Covector& b);
Covector operator-(Covector a);
Covector operator*(double s, Covector a);
Covector operator*(Covector a, double s);

/// Mass matrix at one configuration together with its Cholesky factor.
/// Immutable after construction.
class KineticMetric
{
public:
  /// Throws NotPositiveDefiniteError unless `mass` is symmetric (1e-12
  /// relative) with strictly positive Cholesky pivots.
  explicit KineticMetric(Eigen::MatrixXd mass);

  static KineticMetric identity(Eigen::Index n) { return KineticMetric(Eigen::MatrixXd::Identity(n, n)); }

  Eigen::Index dim() const noexcept { return mass_.rows(); }
  const Eigen::MatrixXd& mass() const noexcept { return mass_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return mass_ * x; }
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& x) const { return factor_.solve(x); }

private:
  Eigen::MatrixXd mass_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

double inner(const KineticMetric& metric, const Covector& a, const Covector& b);
double norm(const KineticMetric& metric, const Covector& a);

/// a / norm(a). Throws std::invalid_argument for a zero covector.
Covector normalized(const KineticMetric& metric, const Covector& a);

enum class Feasibility
{
  feasible,
  infeasible
};

/// Optional round-off dead band for feasibility tests.
inline constexpr double kRoundoffDeadBand = 1e-12;

/// Per-normal classification: infeasible iff inner(p, u) < -dead_band.
/// The boundary inner(p, u) = 0 is feasible.
std::vector<Feasibility> feasibility(const KineticMetric& metric,
                                     const Covector& p,
                                     std::span<const Covector> normals,
                                     double dead_band = 0.0);

bool all_feasible(const KineticMetric& metric,
                  const Covector& p,
                  std::span<const Covector> normals,
                  double dead_band = 0.0);

/// G_ij = inner(u_i, u_j).
Eigen::MatrixXd gram_matrix(const KineticMetric& metric, std::span<const Covector> normals);

/// Throws DegenerateNormalsError when the normals are linearly dependent
/// under the metric (including zero normals and +/- parallel pairs).
void require_independent(const KineticMetric& metric, std::span<const Covector> normals);

/// Throws DegenerateNormalsError when some pair is metric-parallel or a
/// normal is zero. Weaker than require_independent.
void require_pairwise_distinct(const KineticMetric& metric, std::span<const Covector> normals);

struct SpanDecomposition
{
  Covector span;                 ///< component in span{normals}
  Covector null;                 ///< metric-orthogonal complement, p - span
  Eigen::VectorXd coefficients;  ///< span = sum_i coefficients[i] * normals[i]
};

SpanDecomposition decompose(const KineticMetric& metric,
                            const Covector& p,
                            std::span<const Covector> normals);

Covector project_null(const KineticMetric& metric, const Covector& p, std::span<const Covector> normals);
Covector project_span(const KineticMetric& metric, const Covector& p, std::span<const Covector> normals);

}  // namespace simpact

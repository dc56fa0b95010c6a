#include "simpact/metric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace simpact
{

DegenerateNormalsError::DegenerateNormalsError(std::vector<std::size_t> subset, const std::string& what)
  : std::runtime_error(what), subset_(std::move(subset))
{
}

namespace
{

// Squared sine of the angle between a normal and the span of its
// predecessors below which the set counts as dependent.
constexpr double kDependencyPivot = 1e-12;

void check_dim(const KineticMetric& metric, const Covector& a, const char* what)
{
  if (a.size() != metric.dim())
  {
    std::ostringstream os;
    os << what << ": covector length " << a.size() << " does not match metric dimension " << metric.dim();
    throw DimensionError(os.str());
  }
}

std::string subset_message(const std::vector<std::size_t>& subset, const char* why)
{
  std::ostringstream os;
  os << "degenerate contact normals {";
  for (std::size_t i = 0; i < subset.size(); ++i)
  {
    os << (i ? ", " : "") << subset[i];
  }
  os << "}: " << why;
  return os.str();
}

}  // namespace

Covector::Covector(std::initializer_list<double> values, CovectorRole role)
  : values_(static_cast<Eigen::Index>(values.size())), role_(role)
{
  Eigen::Index i = 0;
  for (double v : values)
  {
    values_[i++] = v;
  }
}

Covector& Covector::operator+=(const Covector& other)
{
  if (other.size() != size())
  {
    throw DimensionError("covector addition: length mismatch");
  }
  values_ += other.values_;
  return *this;
}

Covector& Covector::operator-=(const Covector& other)
{
  if (other.size() != size())
  {
    throw DimensionError("covector subtraction: length mismatch");
  }
  values_ -= other.values_;
  return *this;
}

Covector operator+(Covector a, const Covector& b) { return a += b; }
Covector operator-(Covector a, const Covector& b) { return a -= b; }
Covector operator-(Covector a) { return a *= -1.0; }
Covector operator*(double s, Covector a) { return a *= s; }
Covector operator*(Covector a, double s) { return a *= s; }

KineticMetric::KineticMetric(Eigen::MatrixXd mass) : mass_(std::move(mass))
{
  if (mass_.rows() == 0 || mass_.rows() != mass_.cols())
  {
    throw NotPositiveDefiniteError("mass matrix must be square and non-empty");
  }
  const double scale = mass_.cwiseAbs().maxCoeff();
  const double asym = (mass_ - mass_.transpose()).cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || asym > 1e-12 * scale)
  {
    throw NotPositiveDefiniteError("mass matrix is not symmetric");
  }
  factor_.compute(mass_);
  if (factor_.info() != Eigen::Success)
  {
    throw NotPositiveDefiniteError("mass matrix is not positive definite");
  }
  const Eigen::MatrixXd lower = factor_.matrixL();
  if ((lower.diagonal().array() <= 0.0).any() || !lower.allFinite())
  {
    throw NotPositiveDefiniteError("mass matrix has a non-positive Cholesky pivot");
  }
}

double inner(const KineticMetric& metric, const Covector& a, const Covector& b)
{
  check_dim(metric, a, "inner");
  check_dim(metric, b, "inner");
  return a.values().dot(metric.apply_inverse(b.values()));
}

double norm(const KineticMetric& metric, const Covector& a)
{
  return std::sqrt(std::max(0.0, inner(metric, a, a)));
}

Covector normalized(const KineticMetric& metric, const Covector& a)
{
  const double n = norm(metric, a);
  if (!(n > 0.0))
  {
    throw std::invalid_argument("cannot normalize a zero covector");
  }
  return a * (1.0 / n);
}

std::vector<Feasibility> feasibility(const KineticMetric& metric,
                                     const Covector& p,
                                     std::span<const Covector> normals,
                                     double dead_band)
{
  std::vector<Feasibility> out;
  out.reserve(normals.size());
  for (const Covector& u : normals)
  {
    out.push_back(inner(metric, p, u) < -dead_band ? Feasibility::infeasible : Feasibility::feasible);
  }
  return out;
}

bool all_feasible(const KineticMetric& metric,
                  const Covector& p,
                  std::span<const Covector> normals,
                  double dead_band)
{
  const auto cls = feasibility(metric, p, normals, dead_band);
  return std::all_of(cls.begin(), cls.end(), [](Feasibility f) { return f == Feasibility::feasible; });
}

Eigen::MatrixXd gram_matrix(const KineticMetric& metric, std::span<const Covector> normals)
{
  const auto k = static_cast<Eigen::Index>(normals.size());
  Eigen::MatrixXd inv_u(metric.dim(), k);
  for (Eigen::Index j = 0; j < k; ++j)
  {
    check_dim(metric, normals[j], "gram_matrix");
    inv_u.col(j) = metric.apply_inverse(normals[j].values());
  }
  Eigen::MatrixXd g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
  {
    for (Eigen::Index j = i; j < k; ++j)
    {
      g(i, j) = normals[i].values().dot(inv_u.col(j));
      g(j, i) = g(i, j);
    }
  }
  return g;
}

void require_pairwise_distinct(const KineticMetric& metric, std::span<const Covector> normals)
{
  const Eigen::MatrixXd g = gram_matrix(metric, normals);
  const auto k = g.rows();
  for (Eigen::Index i = 0; i < k; ++i)
  {
    if (!(g(i, i) > 0.0))
    {
      std::vector<std::size_t> s{static_cast<std::size_t>(i)};
      throw DegenerateNormalsError(s, subset_message(s, "zero-norm normal"));
    }
  }
  for (Eigen::Index i = 0; i < k; ++i)
  {
    for (Eigen::Index j = i + 1; j < k; ++j)
    {
      const double c = g(i, j) / std::sqrt(g(i, i) * g(j, j));
      if (1.0 - c * c < kDependencyPivot)
      {
        std::vector<std::size_t> s{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
        throw DegenerateNormalsError(s, subset_message(s, "metric-parallel normals"));
      }
    }
  }
}

void require_independent(const KineticMetric& metric, std::span<const Covector> normals)
{
  require_pairwise_distinct(metric, normals);
  const Eigen::MatrixXd g = gram_matrix(metric, normals);
  const auto k = g.rows();
  const Eigen::VectorXd d = g.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd corr = d.asDiagonal() * g * d.asDiagonal();

  // Grow the accepted prefix one normal at a time; the Schur complement of
  // the new normal is the squared sine of its angle to the previous span.
  for (Eigen::Index m = 1; m < k; ++m)
  {
    const Eigen::MatrixXd prev = corr.topLeftCorner(m, m);
    const Eigen::VectorXd cross = corr.col(m).head(m);
    const Eigen::VectorXd coeff = prev.ldlt().solve(cross);
    const double pivot = 1.0 - cross.dot(coeff);
    if (pivot < kDependencyPivot)
    {
      std::vector<std::size_t> s;
      for (Eigen::Index i = 0; i < m; ++i)
      {
        if (std::abs(coeff[i]) > 1e-8)
        {
          s.push_back(static_cast<std::size_t>(i));
        }
      }
      s.push_back(static_cast<std::size_t>(m));
      throw DegenerateNormalsError(s, subset_message(s, "linearly dependent under the kinetic metric"));
    }
  }
}

SpanDecomposition decompose(const KineticMetric& metric, const Covector& p, std::span<const Covector> normals)
{
  check_dim(metric, p, "decompose");
  if (normals.empty())
  {
    return {Covector::zero(metric.dim(), p.role()), p, Eigen::VectorXd()};
  }
  require_independent(metric, normals);

  const Eigen::MatrixXd g = gram_matrix(metric, normals);
  Eigen::VectorXd rhs(g.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i)
  {
    rhs[i] = inner(metric, p, normals[i]);
  }
  const Eigen::VectorXd c = g.ldlt().solve(rhs);

  Eigen::VectorXd span = Eigen::VectorXd::Zero(metric.dim());
  for (Eigen::Index i = 0; i < c.size(); ++i)
  {
    span += c[i] * normals[i].values();
  }
  Covector span_part(span, p.role());
  Covector null_part(p.values() - span, p.role());
  return {std::move(span_part), std::move(null_part), c};
}

Covector project_null(const KineticMetric& metric, const Covector& p, std::span<const Covector> normals)
{
  return decompose(metric, p, normals).null;
}

Covector project_span(const KineticMetric& metric, const Covector& p, std::span<const Covector> normals)
{
  return decompose(metric, p, normals).span;
}

}  // namespace simpact

#include "simpact/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace simpact
{

namespace
{

void require_positive(double value, const char* what)
{
  if (!(value > 0.0) || !std::isfinite(value))
  {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

void require_nonnegative(double value, const char* what)
{
  if (!(value >= 0.0) || !std::isfinite(value))
  {
    throw std::invalid_argument(std::string(what) + " must be non-negative and finite");
  }
}

void require_dim(const Eigen::VectorXd& q, Eigen::Index n)
{
  if (q.size() != n)
  {
    throw DimensionError("configuration has length " + std::to_string(q.size()) + ", expected " + std::to_string(n));
  }
}

Eigen::Vector2d disk(const Eigen::VectorXd& q, int i) { return {q[2 * i], q[2 * i + 1]}; }

}  // namespace

// ---------------------------------------------------------------- cradle

CradleModel::CradleModel(std::vector<double> masses, std::vector<double> radii)
  : masses_(std::move(masses)), radii_(std::move(radii))
{
  if (masses_.size() < 2 || masses_.size() != radii_.size())
  {
    throw std::invalid_argument("cradle needs at least two balls with one mass and one radius each");
  }
  if (masses_.size() > 26)
  {
    throw std::invalid_argument("cradle supports at most 26 balls");
  }
  for (double m : masses_)
  {
    require_positive(m, "cradle mass");
  }
  for (double r : radii_)
  {
    require_positive(r, "cradle radius");
  }
}

Eigen::MatrixXd CradleModel::mass_matrix(const Eigen::VectorXd&) const
{
  return Eigen::Map<const Eigen::VectorXd>(masses_.data(), dim()).asDiagonal();
}

Eigen::VectorXd CradleModel::gaps(const Eigen::VectorXd& q) const
{
  require_dim(q, dim());
  Eigen::VectorXd g(static_cast<Eigen::Index>(num_contacts()));
  for (Eigen::Index i = 0; i < g.size(); ++i)
  {
    g[i] = q[i + 1] - q[i] - (radii_[i] + radii_[i + 1]);
  }
  return g;
}

Eigen::MatrixXd CradleModel::gap_jacobian(const Eigen::VectorXd& q) const
{
  require_dim(q, dim());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_contacts()), dim());
  for (Eigen::Index i = 0; i < j.rows(); ++i)
  {
    j(i, i) = -1.0;
    j(i, i + 1) = 1.0;
  }
  return j;
}

std::string CradleModel::contact_name(std::size_t i) const
{
  return {static_cast<char>('A' + i), static_cast<char>('A' + i + 1)};
}

double CradleModel::length_scale() const { return *std::max_element(radii_.begin(), radii_.end()); }

Eigen::VectorXd CradleModel::touching_configuration(double x0) const
{
  Eigen::VectorXd q(dim());
  q[0] = x0;
  for (Eigen::Index i = 1; i < dim(); ++i)
  {
    q[i] = q[i - 1] + radii_[i - 1] + radii_[i];
  }
  return q;
}

// ------------------------------------------------------------- billiards

BilliardsModel::BilliardsModel(std::array<double, 3> masses, std::array<double, 3> radii)
  : masses_(masses), radii_(radii)
{
  for (double m : masses_)
  {
    require_positive(m, "billiards mass");
  }
  for (double r : radii_)
  {
    require_positive(r, "billiards radius");
  }
}

Eigen::MatrixXd BilliardsModel::mass_matrix(const Eigen::VectorXd&) const
{
  Eigen::VectorXd d(6);
  d << masses_[0], masses_[0], masses_[1], masses_[1], masses_[2], masses_[2];
  return d.asDiagonal();
}

Eigen::VectorXd BilliardsModel::gaps(const Eigen::VectorXd& q) const
{
  require_dim(q, 6);
  const Eigen::Vector2d c = disk(q, 2);
  Eigen::VectorXd g(2);
  g[0] = (c - disk(q, 0)).norm() - (radii_[0] + radii_[2]);
  g[1] = (c - disk(q, 1)).norm() - (radii_[1] + radii_[2]);
  return g;
}

Eigen::MatrixXd BilliardsModel::gap_jacobian(const Eigen::VectorXd& q) const
{
  require_dim(q, 6);
  const Eigen::Vector2d c = disk(q, 2);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, 6);
  for (int i = 0; i < 2; ++i)
  {
    const Eigen::Vector2d d = c - disk(q, i);
    const double len = d.norm();
    if (!(len > 0.0))
    {
      throw std::domain_error("billiards: coincident disk centers");
    }
    const Eigen::Vector2d n = d / len;
    j.block<1, 2>(i, 2 * i) = -n.transpose();
    j.block<1, 2>(i, 4) = n.transpose();
  }
  return j;
}

double BilliardsModel::length_scale() const { return *std::max_element(radii_.begin(), radii_.end()); }

double BilliardsModel::min_theta() const
{
  const double da = radii_[0] + radii_[2];
  const double db = radii_[1] + radii_[2];
  const double ab = radii_[0] + radii_[1];
  const double c = (da * da + db * db - ab * ab) / (2.0 * da * db);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Eigen::VectorXd BilliardsModel::configuration(double theta) const
{
  const double lo = min_theta();
  if (!(theta >= lo * (1.0 - 1e-12) && theta <= std::numbers::pi))
  {
    throw std::out_of_range("billiards angle " + std::to_string(theta) + " outside [" + std::to_string(lo) +
                            ", pi]: below the limit a and b overlap");
  }
  const double da = radii_[0] + radii_[2];
  const double db = radii_[1] + radii_[2];
  const double s = std::sin(theta / 2.0);
  const double co = std::cos(theta / 2.0);
  Eigen::VectorXd q(6);
  q << -da * s, da * co, db * s, db * co, 0.0, 0.0;
  return q;
}

double BilliardsModel::theta(const Eigen::VectorXd& q)
{
  require_dim(q, 6);
  const Eigen::Vector2d c = disk(q, 2);
  const Eigen::Vector2d a = disk(q, 0) - c;
  const Eigen::Vector2d b = disk(q, 1) - c;
  return std::atan2(std::abs(a.x() * b.y() - a.y() * b.x()), a.dot(b));
}

Eigen::VectorXd BilliardsModel::cue_momentum(double speed) const
{
  Eigen::VectorXd p = Eigen::VectorXd::Zero(6);
  p[5] = masses_[2] * speed;
  return p;
}

double BilliardsModel::ab_gap(const Eigen::VectorXd& q) const
{
  require_dim(q, 6);
  return (disk(q, 0) - disk(q, 1)).norm() - (radii_[0] + radii_[1]);
}

BilliardsPairInner billiards_pair_inner(const BilliardsModel& model, const Eigen::VectorXd& q)
{
  const Eigen::VectorXd g = model.gaps(q);
  const double tol = 1e-9 * model.length_scale();
  if (std::abs(g[0]) > tol || std::abs(g[1]) > tol)
  {
    throw std::invalid_argument("billiards_pair_inner: both contacts must be closed");
  }
  const auto normals = contact_normals(model, q);
  const KineticMetric metric = metric_at(model, q);

  BilliardsPairInner out;
  out.inner = inner(metric, normals[0], normals[1]);

  const Eigen::Vector2d c = disk(q, 2);
  const double da = (disk(q, 0) - c).norm();
  const double db = (disk(q, 1) - c).norm();
  const double ab = (disk(q, 0) - disk(q, 1)).norm();
  const double cos_theta = (da * da + db * db - ab * ab) / (2.0 * da * db);
  const double mc = model.masses()[2];
  out.closed_form = cos_theta / mc;
  if (std::abs(out.inner - out.closed_form) > 1e-12 / mc)
  {
    throw std::logic_error("billiards_pair_inner: metric inner product disagrees with cos(theta)/m_c");
  }
  return out;
}

BilliardsModel billiards_build(std::array<double, 3> masses,
                               std::array<double, 3> radii,
                               const std::optional<Eigen::VectorXd>& initial)
{
  BilliardsModel model(masses, radii);
  if (initial)
  {
    const Eigen::VectorXd g = model.gaps(*initial);
    const double tol = 1e-12 * model.length_scale();
    if (g[0] < -tol || g[1] < -tol || model.ab_gap(*initial) < -tol)
    {
      throw std::invalid_argument("billiards: disks overlap in the initial configuration");
    }
  }
  return model;
}

// --------------------------------------------------------------- legtail

LegTailModel::LegTailModel(LegTailParams params) : params_(std::move(params))
{
  require_positive(params_.mass, "legtail mass");
  require_positive(params_.inertia, "legtail inertia");
  require_nonnegative(params_.gravity, "legtail gravity");
  if (!params_.offset_a.allFinite() || !params_.offset_b.allFinite())
  {
    throw std::invalid_argument("legtail offsets must be finite");
  }
}

Eigen::MatrixXd LegTailModel::mass_matrix(const Eigen::VectorXd&) const
{
  return Eigen::Vector3d(params_.mass, params_.mass, params_.inertia).asDiagonal();
}

double LegTailModel::potential(const Eigen::VectorXd& q) const
{
  require_dim(q, 3);
  return params_.mass * params_.gravity * q[1];
}

Eigen::VectorXd LegTailModel::potential_gradient(const Eigen::VectorXd& q) const
{
  require_dim(q, 3);
  return Eigen::Vector3d(0.0, params_.mass * params_.gravity, 0.0);
}

Eigen::VectorXd LegTailModel::gaps(const Eigen::VectorXd& q) const
{
  require_dim(q, 3);
  const double s = std::sin(q[2]);
  const double c = std::cos(q[2]);
  Eigen::VectorXd g(2);
  g[0] = q[1] + s * params_.offset_a.x() + c * params_.offset_a.y();
  g[1] = q[1] + s * params_.offset_b.x() + c * params_.offset_b.y();
  return g;
}

Eigen::MatrixXd LegTailModel::gap_jacobian(const Eigen::VectorXd& q) const
{
  require_dim(q, 3);
  const double s = std::sin(q[2]);
  const double c = std::cos(q[2]);
  Eigen::MatrixXd j(2, 3);
  j << 0.0, 1.0, c * params_.offset_a.x() - s * params_.offset_a.y(),
       0.0, 1.0, c * params_.offset_b.x() - s * params_.offset_b.y();
  return j;
}

std::optional<Eigen::VectorXd> LegTailModel::contact_tangent(const Eigen::VectorXd& q, std::size_t i) const
{
  require_dim(q, 3);
  const Eigen::Vector2d& r = i == 0 ? params_.offset_a : params_.offset_b;
  return Eigen::Vector3d(1.0, 0.0, -std::sin(q[2]) * r.x() - std::cos(q[2]) * r.y());
}

double LegTailModel::length_scale() const { return std::max(params_.offset_a.norm(), params_.offset_b.norm()); }

std::optional<Eigen::VectorXd> LegTailModel::double_contact_pose(double x) const
{
  const Eigen::Vector2d d = params_.offset_a - params_.offset_b;
  if (d.x() == 0.0)
  {
    return std::nullopt;
  }
  const double theta = std::atan(-d.y() / d.x());
  const double y = -(std::sin(theta) * params_.offset_a.x() + std::cos(theta) * params_.offset_a.y());
  return Eigen::Vector3d(x, y, theta);
}

LegTailModel legtail_build(const LegTailParams& params)
{
  LegTailModel model(params);
  if ((params.offset_a - params.offset_b).norm() <= 1e-12 * std::max(1.0, params.offset_a.norm()))
  {
    throw DegenerateNormalsError({0, 1}, "legtail: contacts A and B share one offset, so their normals coincide");
  }
  return model;
}

// ------------------------------------------------------------ point mass

PointMassModel::PointMassModel(double mass, double gravity, Eigen::Vector2d applied)
  : mass_(mass), gravity_(gravity), applied_(applied)
{
  require_positive(mass_, "point mass");
  require_nonnegative(gravity_, "gravity");
}

Eigen::MatrixXd PointMassModel::mass_matrix(const Eigen::VectorXd&) const
{
  return mass_ * Eigen::MatrixXd::Identity(2, 2);
}

double PointMassModel::potential(const Eigen::VectorXd& q) const { return mass_ * gravity_ * q[1]; }

Eigen::VectorXd PointMassModel::potential_gradient(const Eigen::VectorXd&) const
{
  return Eigen::Vector2d(0.0, mass_ * gravity_);
}

Eigen::VectorXd PointMassModel::gaps(const Eigen::VectorXd& q) const
{
  require_dim(q, 2);
  return Eigen::VectorXd::Constant(1, q[1]);
}

Eigen::MatrixXd PointMassModel::gap_jacobian(const Eigen::VectorXd&) const
{
  Eigen::MatrixXd j(1, 2);
  j << 0.0, 1.0;
  return j;
}

std::optional<Eigen::VectorXd> PointMassModel::contact_tangent(const Eigen::VectorXd&, std::size_t) const
{
  return Eigen::Vector2d(1.0, 0.0);
}

Eigen::VectorXd PointMassModel::force(const Eigen::VectorXd&, const Eigen::VectorXd&, double) const
{
  return applied_;
}

// --------------------------------------------------------- bouncing ball

BouncingBallModel::BouncingBallModel(double mass, double gravity, bool floor, double radius,
                                     std::optional<ForcePulse> pulse)
  : mass_(mass), gravity_(gravity), floor_(floor), radius_(radius), pulse_(pulse)
{
  require_positive(mass_, "ball mass");
  require_nonnegative(gravity_, "gravity");
  require_nonnegative(radius_, "ball radius");
  if (pulse_ && !(pulse_->t_off >= pulse_->t_on))
  {
    throw std::invalid_argument("force pulse must end after it starts");
  }
}

Eigen::MatrixXd BouncingBallModel::mass_matrix(const Eigen::VectorXd&) const
{
  return Eigen::MatrixXd::Constant(1, 1, mass_);
}

double BouncingBallModel::potential(const Eigen::VectorXd& q) const { return mass_ * gravity_ * q[0]; }

Eigen::VectorXd BouncingBallModel::potential_gradient(const Eigen::VectorXd&) const
{
  return Eigen::VectorXd::Constant(1, mass_ * gravity_);
}

Eigen::VectorXd BouncingBallModel::gaps(const Eigen::VectorXd& q) const
{
  require_dim(q, 1);
  return floor_ ? Eigen::VectorXd::Constant(1, q[0] - radius_) : Eigen::VectorXd(0);
}

Eigen::MatrixXd BouncingBallModel::gap_jacobian(const Eigen::VectorXd&) const
{
  return floor_ ? Eigen::MatrixXd::Constant(1, 1, 1.0) : Eigen::MatrixXd(0, 1);
}

Eigen::VectorXd BouncingBallModel::force(const Eigen::VectorXd&, const Eigen::VectorXd&, double t) const
{
  const bool on = pulse_ && t >= pulse_->t_on && t < pulse_->t_off;
  return Eigen::VectorXd::Constant(1, on ? pulse_->magnitude : 0.0);
}

// ------------------------------------------------------------- harmonic

HarmonicOscillatorModel::HarmonicOscillatorModel(double mass, double stiffness) : mass_(mass), stiffness_(stiffness)
{
  require_positive(mass_, "oscillator mass");
  require_positive(stiffness_, "oscillator stiffness");
}

Eigen::MatrixXd HarmonicOscillatorModel::mass_matrix(const Eigen::VectorXd&) const
{
  return Eigen::MatrixXd::Constant(1, 1, mass_);
}

double HarmonicOscillatorModel::potential(const Eigen::VectorXd& q) const { return 0.5 * stiffness_ * q[0] * q[0]; }

Eigen::VectorXd HarmonicOscillatorModel::potential_gradient(const Eigen::VectorXd& q) const
{
  return Eigen::VectorXd::Constant(1, stiffness_ * q[0]);
}

double HarmonicOscillatorModel::period() const { return 2.0 * std::numbers::pi * std::sqrt(mass_ / stiffness_); }

// ------------------------------------------------------------- pendulum

PendulumModel::PendulumModel(double mass, double length, double gravity)
  : mass_(mass), length_(length), gravity_(gravity)
{
  require_positive(mass_, "pendulum mass");
  require_positive(length_, "pendulum length");
  require_nonnegative(gravity_, "gravity");
}

Eigen::MatrixXd PendulumModel::mass_matrix(const Eigen::VectorXd&) const
{
  return Eigen::MatrixXd::Constant(1, 1, mass_ * length_ * length_);
}

double PendulumModel::potential(const Eigen::VectorXd& q) const
{
  return -mass_ * gravity_ * length_ * std::cos(q[0]);
}

Eigen::VectorXd PendulumModel::potential_gradient(const Eigen::VectorXd& q) const
{
  return Eigen::VectorXd::Constant(1, mass_ * gravity_ * length_ * std::sin(q[0]));
}

// ------------------------------------------------------- polar particle

PolarParticleModel::PolarParticleModel(double mass, double gravity) : mass_(mass), gravity_(gravity)
{
  require_positive(mass_, "particle mass");
  require_nonnegative(gravity_, "gravity");
}

Eigen::MatrixXd PolarParticleModel::mass_matrix(const Eigen::VectorXd& q) const
{
  require_dim(q, 2);
  return Eigen::Vector2d(mass_, mass_ * q[0] * q[0]).asDiagonal();
}

Eigen::MatrixXd PolarParticleModel::mass_matrix_partial(const Eigen::VectorXd& q, Eigen::Index k) const
{
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  if (k == 0)
  {
    d(1, 1) = 2.0 * mass_ * q[0];
  }
  return d;
}

double PolarParticleModel::potential(const Eigen::VectorXd& q) const
{
  return mass_ * gravity_ * q[0] * std::sin(q[1]);
}

Eigen::VectorXd PolarParticleModel::potential_gradient(const Eigen::VectorXd& q) const
{
  return Eigen::Vector2d(mass_ * gravity_ * std::sin(q[1]), mass_ * gravity_ * q[0] * std::cos(q[1]));
}

// -------------------------------------------------------------- builders

CradleModel cradle_build(std::size_t n, std::vector<double> masses, std::vector<double> radii)
{
  if (masses.size() != n || radii.size() != n)
  {
    throw std::invalid_argument("cradle_build: expected " + std::to_string(n) + " masses and radii");
  }
  return CradleModel(std::move(masses), std::move(radii));
}

}  // namespace simpact

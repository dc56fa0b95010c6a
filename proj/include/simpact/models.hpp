#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "simpact/model.hpp"

namespace simpact
{

/// Balls on a line, q = ball centers. Contact i sits between balls i and i+1.
class CradleModel final : public MechModel
{
public:
  CradleModel(std::vector<double> masses, std::vector<double> radii);

  std::string name() const override { return "cradle"; }
  Eigen::Index dim() const override { return static_cast<Eigen::Index>(masses_.size()); }
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
  std::size_t num_contacts() const override { return masses_.size() - 1; }
  Eigen::VectorXd gaps(const Eigen::VectorXd& q) const override;
  Eigen::MatrixXd gap_jacobian(const Eigen::VectorXd& q) const override;
  std::string contact_name(std::size_t i) const override;
  double length_scale() const override;

  const std::vector<double>& masses() const noexcept { return masses_; }
  const std::vector<double>& radii() const noexcept { return radii_; }

  /// Centers with every neighbouring pair exactly touching, first ball at x0.
  Eigen::VectorXd touching_configuration(double x0 = 0.0) const;

private:
  std::vector<double> masses_;
  std::vector<double> radii_;
};

/// Three disks in the plane, q = [xa, ya, xb, yb, xc, yc]. The cue disk c
/// touches a (contact 0) and b (contact 1). Rotational inertia is ignored.
class BilliardsModel final : public MechModel
{
public:
  BilliardsModel(std::array<double, 3> masses, std::array<double, 3> radii);

  std::string name() const override { return "billiards"; }
  Eigen::Index dim() const override { return 6; }
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
  std::size_t num_contacts() const override { return 2; }
  Eigen::VectorXd gaps(const Eigen::VectorXd& q) const override;
  Eigen::MatrixXd gap_jacobian(const Eigen::VectorXd& q) const override;
  std::string contact_name(std::size_t i) const override { return i == 0 ? "ac" : "bc"; }
  double length_scale() const override;

  const std::array<double, 3>& masses() const noexcept { return masses_; }
  const std::array<double, 3>& radii() const noexcept { return radii_; }

  /// Double-contact configuration: c at the origin, a and b placed
  /// symmetrically about the +y axis with angle theta between them as seen
  /// from c. Throws std::out_of_range below min_theta() or above pi.
  Eigen::VectorXd configuration(double theta) const;
  /// Angle at c between the directions to a and b.
  static double theta(const Eigen::VectorXd& q);
  /// Smallest angle at which a and b do not overlap while both touch c.
  double min_theta() const;
  /// Cue ball moving along the bisector (+y) with the given speed.
  Eigen::VectorXd cue_momentum(double speed) const;
  /// Distance between a and b minus their radius sum.
  double ab_gap(const Eigen::VectorXd& q) const;

private:
  std::array<double, 3> masses_;
  std::array<double, 3> radii_;
};

struct BilliardsPairInner
{
  double inner = 0.0;       ///< <Dphi_a, Dphi_b> under the metric
  double closed_form = 0.0; ///< cos(theta) / m_c from the law of cosines
};

/// Throws std::invalid_argument unless both contacts are closed, and
/// std::logic_error if the two evaluations disagree beyond 1e-12.
BilliardsPairInner billiards_pair_inner(const BilliardsModel& model, const Eigen::VectorXd& q);

struct LegTailParams
{
  double mass = 1.0;
  double inertia = 0.1;
  Eigen::Vector2d offset_a{-0.3, -0.5}; ///< body-frame contact A
  Eigen::Vector2d offset_b{0.3, -0.5};  ///< body-frame contact B
  double gravity = 9.81;
};

/// Planar rigid body q = [x, y, theta] standing on a floor through two
/// body-fixed contact points.
class LegTailModel final : public MechModel
{
public:
  explicit LegTailModel(LegTailParams params);

  std::string name() const override { return "legtail"; }
  Eigen::Index dim() const override { return 3; }
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
  double potential(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd potential_gradient(const Eigen::VectorXd& q) const override;
  std::size_t num_contacts() const override { return 2; }
  Eigen::VectorXd gaps(const Eigen::VectorXd& q) const override;
  Eigen::MatrixXd gap_jacobian(const Eigen::VectorXd& q) const override;
  std::string contact_name(std::size_t i) const override { return i == 0 ? "A" : "B"; }
  std::optional<Eigen::VectorXd> contact_tangent(const Eigen::VectorXd& q, std::size_t i) const override;
  double length_scale() const override;

  const LegTailParams& params() const noexcept { return params_; }

  /// Height and angle at which both contact points touch the floor, or
  /// nullopt when the offsets share a body-frame x coordinate.
  std::optional<Eigen::VectorXd> double_contact_pose(double x = 0.0) const;

private:
  LegTailParams params_;
};

/// Point mass in the plane above the floor y = 0 with an optional constant
/// applied force. Contact 0 is the floor, with tangent along x.
class PointMassModel final : public MechModel
{
public:
  PointMassModel(double mass, double gravity, Eigen::Vector2d applied = Eigen::Vector2d::Zero());

  std::string name() const override { return "point_mass"; }
  Eigen::Index dim() const override { return 2; }
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
  double potential(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd potential_gradient(const Eigen::VectorXd& q) const override;
  std::size_t num_contacts() const override { return 1; }
  Eigen::VectorXd gaps(const Eigen::VectorXd& q) const override;
  Eigen::MatrixXd gap_jacobian(const Eigen::VectorXd& q) const override;
  std::string contact_name(std::size_t) const override { return "floor"; }
  std::optional<Eigen::VectorXd> contact_tangent(const Eigen::VectorXd& q, std::size_t i) const override;
  bool has_force() const override { return applied_.squaredNorm() > 0.0; }
  Eigen::VectorXd force(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot, double t) const override;

private:
  double mass_;
  double gravity_;
  Eigen::Vector2d applied_;
};

/// Upward force applied to the ball on [t_on, t_off).
struct ForcePulse
{
  double t_on = 0.0;
  double t_off = 0.0;
  double magnitude = 0.0;
};

/// Vertical ball, q = [height]. With a floor, contact 0 is y = radius.
class BouncingBallModel final : public MechModel
{
public:
  BouncingBallModel(double mass, double gravity, bool floor = true, double radius = 0.0,
                    std::optional<ForcePulse> pulse = std::nullopt);

  std::string name() const override { return "bouncing_ball"; }
  Eigen::Index dim() const override { return 1; }
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
  double potential(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd potential_gradient(const Eigen::VectorXd& q) const override;
  std::size_t num_contacts() const override { return floor_ ? 1 : 0; }
  Eigen::VectorXd gaps(const Eigen::VectorXd& q) const override;
  Eigen::MatrixXd gap_jacobian(const Eigen::VectorXd& q) const override;
  std::string contact_name(std::size_t) const override { return "floor"; }
  bool has_force() const override { return pulse_.has_value(); }
  Eigen::VectorXd force(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot, double t) const override;
  double length_scale() const override { return std::max(1.0, radius_); }

  double mass() const noexcept { return mass_; }
  double gravity() const noexcept { return gravity_; }

private:
  double mass_;
  double gravity_;
  bool floor_;
  double radius_;
  std::optional<ForcePulse> pulse_;
};

/// q = [x], V = k x^2 / 2.
class HarmonicOscillatorModel final : public MechModel
{
public:
  HarmonicOscillatorModel(double mass, double stiffness);

  std::string name() const override { return "harmonic"; }
  Eigen::Index dim() const override { return 1; }
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
  double potential(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd potential_gradient(const Eigen::VectorXd& q) const override;

  double period() const;

private:
  double mass_;
  double stiffness_;
};

/// q = [angle from the downward vertical].
class PendulumModel final : public MechModel
{
public:
  PendulumModel(double mass, double length, double gravity);

  std::string name() const override { return "pendulum"; }
  Eigen::Index dim() const override { return 1; }
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
  double potential(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd potential_gradient(const Eigen::VectorXd& q) const override;

private:
  double mass_;
  double length_;
  double gravity_;
};

/// Particle in polar coordinates q = [r, angle] under uniform gravity along
/// -y. Its mass matrix diag(m, m r^2) depends on the configuration.
class PolarParticleModel final : public MechModel
{
public:
  PolarParticleModel(double mass, double gravity);

  std::string name() const override { return "polar_particle"; }
  Eigen::Index dim() const override { return 2; }
  Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const override;
  Eigen::MatrixXd mass_matrix_partial(const Eigen::VectorXd& q, Eigen::Index k) const override;
  double potential(const Eigen::VectorXd& q) const override;
  Eigen::VectorXd potential_gradient(const Eigen::VectorXd& q) const override;

private:
  double mass_;
  double gravity_;
};

/// Throws std::invalid_argument for fewer than two balls or non-positive
/// masses or radii.
CradleModel cradle_build(std::size_t n, std::vector<double> masses, std::vector<double> radii);

/// Throws std::invalid_argument for non-physical parameters or when the
/// given initial configuration has overlapping disks.
BilliardsModel billiards_build(std::array<double, 3> masses,
                               std::array<double, 3> radii,
                               const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Throws std::invalid_argument for non-physical parameters and
/// DegenerateNormalsError when both contacts share one body-frame offset.
LegTailModel legtail_build(const LegTailParams& params);

}  // namespace simpact

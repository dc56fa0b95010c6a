#pragma once

// Drive the metric inner product of two contact normals to zero while both
// contacts stay closed.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "simpact/models.hpp"

namespace simpact
{

/// A parameterized mechanism. Design variables stack the configuration
/// first and the model parameters after it.
class DesignFamily
{
public:
  virtual ~DesignFamily() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> variable_names() const = 0;
  virtual Eigen::Index config_size() const = 0;
  /// Full configuration and model for a design vector.
  virtual std::unique_ptr<MechModel> build(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd configuration(const Eigen::VectorXd& x) const = 0;
  /// Typical magnitude per variable, used to scale steps and differences.
  virtual Eigen::VectorXd variable_scale() const = 0;
  virtual double length_scale() const = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(variable_names().size()); }
};

/// x = [x, y, theta, ax, ay, bx, by]: leg-tail pose and body-frame contact
/// offsets. Mass, inertia and gravity stay fixed.
class LegTailFamily final : public DesignFamily
{
public:
  LegTailFamily(double mass, double inertia, double gravity);

  std::string name() const override { return "legtail"; }
  std::vector<std::string> variable_names() const override;
  Eigen::Index config_size() const override { return 3; }
  std::unique_ptr<MechModel> build(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd configuration(const Eigen::VectorXd& x) const override { return x.head(3); }
  Eigen::VectorXd variable_scale() const override;
  double length_scale() const override { return 0.5; }

  static Eigen::VectorXd pack(const LegTailParams& params, const Eigen::Vector3d& pose);
  LegTailParams params(const Eigen::VectorXd& x) const;

  /// Random two-contact pose with offsets on either side of the body,
  /// away from orthogonality.
  Eigen::VectorXd random_start(std::mt19937_64& rng) const;

private:
  double mass_;
  double inertia_;
  double gravity_;
};

/// x = [xa, ya, xb, yb]: positions of the object disks with the cue disk
/// fixed at the origin.
class BilliardsFamily final : public DesignFamily
{
public:
  BilliardsFamily(std::array<double, 3> masses, std::array<double, 3> radii);

  std::string name() const override { return "billiards"; }
  std::vector<std::string> variable_names() const override { return {"xa", "ya", "xb", "yb"}; }
  Eigen::Index config_size() const override { return 4; }
  std::unique_ptr<MechModel> build(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd configuration(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd variable_scale() const override;
  double length_scale() const override { return model_.length_scale(); }

  const BilliardsModel& model() const noexcept { return model_; }
  Eigen::VectorXd start(double theta) const;

private:
  BilliardsModel model_;
};

struct DesignProblem
{
  const DesignFamily* family = nullptr;
  std::vector<bool> free;           ///< one flag per design variable
  std::size_t contact_a = 0;
  std::size_t contact_b = 1;
  double inner_tol = 1e-6;
  double gap_tol = 1e-9;            ///< relative to the family length scale
  double start_gap_tol = 1e-3;      ///< closure required of the initial guess
  int max_iter = 200;
  int polish_steps = 3;
};

struct DesignResult
{
  Eigen::VectorXd initial;
  Eigen::VectorXd solution;
  Eigen::Vector3d initial_residual;  ///< [phi_a / l, phi_b / l, <u_a_hat, u_b_hat>]
  Eigen::Vector3d final_residual;
  int iterations = 0;
  double displacement = 0.0;         ///< scaled free-variable distance from the start
};

/// [phi_a / l, phi_b / l, <u_a_hat, u_b_hat>] at a design vector.
Eigen::Vector3d design_residual(const DesignProblem& problem, const Eigen::VectorXd& x);

/// Gauss-Newton with minimum-norm steps over the scaled free variables.
/// Throws std::invalid_argument for a bad problem or an open starting
/// contact and ConvergenceError on rank collapse or the iteration cap.
DesignResult solve_orthogonal(const DesignProblem& problem, const Eigen::VectorXd& initial);

/// Table-style text report: variables before and after, residuals, iterations.
std::string format_report(const DesignProblem& problem, const DesignResult& result);

struct SweepPoint
{
  double theta = 0.0;
  double xi = 0.0;
  double inner = 0.0;  ///< <u_a_hat, u_b_hat>
};

/// xi over theta in (theta_lo, theta_hi], evenly spaced and ending at
/// theta_hi, for a cue ball moving along the bisector. Points run
/// concurrently; the result is ordered by theta. Throws std::out_of_range
/// when theta_lo lies below the contact limit or theta_hi above pi.
std::vector<SweepPoint> theta_sweep(const BilliardsModel& model,
                                    double theta_lo,
                                    double theta_hi,
                                    std::size_t samples,
                                    double cue_speed = 1.0,
                                    unsigned threads = 0);

}  // namespace simpact

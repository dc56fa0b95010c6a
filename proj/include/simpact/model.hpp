#pragma once

// Mechanical model interface: L(q, qdot) = 1/2 qdot^T M(q) qdot - V(q) with
// unilateral gap functions phi_i(q) >= 0.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simpact/metric.hpp"

namespace simpact
{

class MechModel
{
public:
  virtual ~MechModel() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index dim() const = 0;

  virtual Eigen::MatrixXd mass_matrix(const Eigen::VectorXd& q) const = 0;
  /// dM/dq_k. Zero for constant mass matrices.
  virtual Eigen::MatrixXd mass_matrix_partial(const Eigen::VectorXd& q, Eigen::Index k) const;

  virtual double potential(const Eigen::VectorXd& q) const;
  virtual Eigen::VectorXd potential_gradient(const Eigen::VectorXd& q) const;

  virtual std::size_t num_contacts() const { return 0; }
  virtual Eigen::VectorXd gaps(const Eigen::VectorXd& q) const;
  /// Row i is Dphi_i(q).
  virtual Eigen::MatrixXd gap_jacobian(const Eigen::VectorXd& q) const;
  virtual std::string contact_name(std::size_t i) const;

  /// Tangential velocity direction of a planar contact, as a covector
  /// (v_t = T . qdot). Models without a tangent return nullopt.
  virtual std::optional<Eigen::VectorXd> contact_tangent(const Eigen::VectorXd& q, std::size_t i) const;

  virtual bool has_force() const { return false; }
  /// Generalized non-conservative force f(q, qdot, t).
  virtual Eigen::VectorXd force(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot, double t) const;

  /// Characteristic length used to scale gap tolerances.
  virtual double length_scale() const { return 1.0; }

  double lagrangian(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) const;
  double kinetic_energy(const Eigen::VectorXd& q, const Eigen::VectorXd& p) const;
  double total_energy(const Eigen::VectorXd& q, const Eigen::VectorXd& p) const;
};

KineticMetric metric_at(const MechModel& model, const Eigen::VectorXd& q);

/// Dphi_i(q) for the given contacts, tagged as normals.
std::vector<Covector> contact_normals(const MechModel& model,
                                      const Eigen::VectorXd& q,
                                      std::span<const std::size_t> contacts);
std::vector<Covector> contact_normals(const MechModel& model, const Eigen::VectorXd& q);

struct ModelCheck
{
  double max_gap_gradient_error = 0.0;       ///< max abs error over all entries
  double max_potential_gradient_error = 0.0; ///< relative to max(1, |grad V|)
  double max_mass_partial_error = 0.0;       ///< relative to max(1, |dM/dq|)
  double min_mass_eigenvalue = 0.0;
};

/// Central finite-difference audit of the analytic derivatives at each
/// configuration.
ModelCheck validate_model(const MechModel& model, std::span<const Eigen::VectorXd> configurations);

}  // namespace simpact

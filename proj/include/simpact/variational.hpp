#pragma once

// Midpoint discrete mechanics: L_d(q_a, q_b) = (t_b - t_a) L(qbar, vbar) with
// qbar = (q_a + q_b) / 2 and vbar = (q_b - q_a) / (t_b - t_a).

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "simpact/metric.hpp"
#include "simpact/model.hpp"
#include "simpact/newton.hpp"

namespace simpact
{

/// Throws std::invalid_argument unless t_b > t_a.
double discrete_lagrangian(const MechModel& model, const Eigen::VectorXd& q_a, double t_a,
                           const Eigen::VectorXd& q_b, double t_b);

struct DiscreteMomenta
{
  Covector minus; ///< dL_d / dq_a
  Covector plus;  ///< dL_d / dq_b
};

DiscreteMomenta discrete_momenta(const MechModel& model, const Eigen::VectorXd& q_a, double t_a,
                                 const Eigen::VectorXd& q_b, double t_b);

/// Midpoint forcing on one interval, (h/2) f(qbar, vbar, tbar), the same on
/// both slots. `extra` is added to the model force and may be empty.
Eigen::VectorXd discrete_force(const MechModel& model, const Eigen::VectorXd& q_a, double t_a,
                               const Eigen::VectorXd& q_b, double t_b, const Eigen::VectorXd& extra = {});

/// Node momentum at q_b after the interval [a, b]: F+ plus the forcing on the b slot.
Covector node_momentum(const MechModel& model, const Eigen::VectorXd& q_a, double t_a,
                       const Eigen::VectorXd& q_b, double t_b, const Eigen::VectorXd& extra = {});

struct ForwardStep
{
  Eigen::VectorXd q_next;
  Eigen::VectorXd multipliers; ///< one per held contact, impulse units; positive pushes apart
  double residual = 0.0;
  int iterations = 0;
};

/// Solve p_k + F-(q_k, q_next) + f- + sum_j lambda_j Dphi_j(q_k) = 0 for
/// q_next, with phi_j(q_next) = 0 for each held contact j. Momentum rows
/// are scaled by the incoming momentum magnitude, gap rows by the length scale.
ForwardStep solve_forward(const MechModel& model,
                          const Eigen::VectorXd& q_k,
                          double t_k,
                          const Eigen::VectorXd& p_k,
                          double t_next,
                          std::span<const std::size_t> held = {},
                          const Eigen::VectorXd& extra_force = {},
                          const NewtonOptions& options = {});

/// Discrete Euler-Lagrange step: q_next such that
/// F+(prev, curr) + F-(curr, next) plus forcing vanishes.
Eigen::VectorXd del_step(const MechModel& model,
                         const Eigen::VectorXd& q_prev,
                         const Eigen::VectorXd& q_curr,
                         double t_prev,
                         double t_curr,
                         double t_next,
                         const NewtonOptions& options = {});

/// Reference magnitude used to scale momentum residuals.
double momentum_scale(const MechModel& model, const Eigen::VectorXd& q_k, const Eigen::VectorXd& p_k, double h);

}  // namespace simpact

#pragma once

// Damped Newton iteration for small dense nonlinear systems.

#include <Eigen/Dense>

#include <functional>

namespace simpact
{

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct NewtonOptions
{
  double tol = 1e-12;  ///< on the max-norm of the (caller-scaled) residual
  int max_iter = 50;
  double fd_rel_step = 1e-7;
};

struct NewtonResult
{
  Eigen::VectorXd x;
  double residual = 0.0;
  int iterations = 0;
};

/// Central differences with step fd_rel_step * typical[i] per column.
Eigen::MatrixXd fd_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& typical,
                            double rel_step = 1e-7);

/// Newton with backtracking on the residual norm. `typical` sets the
/// finite-difference step per unknown and must be positive; it is unused
/// when `jacobian` is given. Throws ConvergenceError after max_iter.
NewtonResult newton_solve(const ResidualFn& f,
                          Eigen::VectorXd x0,
                          const Eigen::VectorXd& typical,
                          const NewtonOptions& options = {},
                          const JacobianFn& jacobian = {});

}  // namespace simpact

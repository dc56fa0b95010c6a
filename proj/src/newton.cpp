#include "simpact/newton.hpp"

#include <cmath>
#include <sstream>

#include "simpact/errors.hpp"

namespace simpact
{

Eigen::MatrixXd fd_jacobian(const ResidualFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& typical,
                            double rel_step)
{
  Eigen::MatrixXd jac;
  for (Eigen::Index k = 0; k < x.size(); ++k)
  {
    const double h = rel_step * typical[k];
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const Eigen::VectorXd col = (f(xp) - f(xm)) / (xp[k] - xm[k]);
    if (jac.size() == 0)
    {
      jac.resize(col.size(), x.size());
    }
    jac.col(k) = col;
  }
  return jac;
}

NewtonResult newton_solve(const ResidualFn& f,
                          Eigen::VectorXd x0,
                          const Eigen::VectorXd& typical,
                          const NewtonOptions& options,
                          const JacobianFn& jacobian)
{
  NewtonResult out;
  out.x = std::move(x0);
  Eigen::VectorXd r = f(out.x);
  out.residual = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;

  while (out.residual > options.tol)
  {
    if (out.iterations >= options.max_iter || !std::isfinite(out.residual))
    {
      std::ostringstream os;
      os << "Newton iteration did not converge: residual " << out.residual << " after " << out.iterations
         << " iterations (tolerance " << options.tol << ")";
      throw ConvergenceError(os.str(), out.residual, out.iterations);
    }
    ++out.iterations;

    const Eigen::MatrixXd jac = jacobian ? jacobian(out.x) : fd_jacobian(f, out.x, typical, options.fd_rel_step);
    const Eigen::VectorXd dx = jac.colPivHouseholderQr().solve(-r);

    double step = 1.0;
    Eigen::VectorXd x_try, r_try;
    double res_try = 0.0;
    for (int halvings = 0; halvings < 30; ++halvings, step *= 0.5)
    {
      x_try = out.x + step * dx;
      r_try = f(x_try);
      res_try = r_try.cwiseAbs().maxCoeff();
      if (std::isfinite(res_try) && res_try < (1.0 - 1e-4 * step) * out.residual)
      {
        break;
      }
    }

    const bool stalled = !(res_try < out.residual);
    if (stalled)
    {
      // At the round-off floor a full step no longer reduces the residual;
      // accept a residual that is within reach of the tolerance.
      if (out.residual <= 1e3 * options.tol)
      {
        return out;
      }
      std::ostringstream os;
      os << "Newton iteration stalled at residual " << out.residual << " after " << out.iterations
         << " iterations (tolerance " << options.tol << ")";
      throw ConvergenceError(os.str(), out.residual, out.iterations);
    }
    out.x = std::move(x_try);
    r = std::move(r_try);
    out.residual = res_try;
  }

  // One more full step once converged. Stopping right at tol leaves an error
  // of one sign from step to step, which shows up as drift in long runs.
  if (out.residual > 0.0)
  {
    const Eigen::MatrixXd jac = jacobian ? jacobian(out.x) : fd_jacobian(f, out.x, typical, options.fd_rel_step);
    Eigen::VectorXd x_try = out.x + jac.colPivHouseholderQr().solve(-r);
    const Eigen::VectorXd r_try = f(x_try);
    const double res_try = r_try.cwiseAbs().maxCoeff();
    if (std::isfinite(res_try) && res_try < out.residual)
    {
      out.x = std::move(x_try);
      out.residual = res_try;
    }
  }
  return out;
}

}  // namespace simpact

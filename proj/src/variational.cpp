#include "simpact/variational.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace simpact
{

namespace
{

void check_interval(const MechModel& model, const Eigen::VectorXd& q_a, double t_a, const Eigen::VectorXd& q_b,
                    double t_b)
{
  if (!(t_b > t_a))
  {
    throw std::invalid_argument("discrete interval must have t_b > t_a");
  }
  if (q_a.size() != model.dim() || q_b.size() != model.dim())
  {
    throw DimensionError("configuration length does not match model dimension");
  }
}

// (h/2) dL/dq at the midpoint: (h/2) (1/2 vbar^T M_k vbar - dV/dq_k).
Eigen::VectorXd half_config_derivative(const MechModel& model, const Eigen::VectorXd& qbar,
                                       const Eigen::VectorXd& vbar, double h)
{
  Eigen::VectorXd d = -model.potential_gradient(qbar);
  for (Eigen::Index k = 0; k < d.size(); ++k)
  {
    const Eigen::MatrixXd mk = model.mass_matrix_partial(qbar, k);
    if (mk.size() && mk.cwiseAbs().maxCoeff() > 0.0)
    {
      d[k] += 0.5 * vbar.dot(mk * vbar);
    }
  }
  return 0.5 * h * d;
}

}  // namespace

double discrete_lagrangian(const MechModel& model, const Eigen::VectorXd& q_a, double t_a,
                           const Eigen::VectorXd& q_b, double t_b)
{
  check_interval(model, q_a, t_a, q_b, t_b);
  const double h = t_b - t_a;
  return h * model.lagrangian(0.5 * (q_a + q_b), (q_b - q_a) / h);
}

DiscreteMomenta discrete_momenta(const MechModel& model, const Eigen::VectorXd& q_a, double t_a,
                                 const Eigen::VectorXd& q_b, double t_b)
{
  check_interval(model, q_a, t_a, q_b, t_b);
  const double h = t_b - t_a;
  const Eigen::VectorXd qbar = 0.5 * (q_a + q_b);
  const Eigen::VectorXd vbar = (q_b - q_a) / h;
  const Eigen::VectorXd mv = model.mass_matrix(qbar) * vbar;
  const Eigen::VectorXd half = half_config_derivative(model, qbar, vbar, h);
  return {Covector(-mv + half), Covector(mv + half)};
}

Eigen::VectorXd discrete_force(const MechModel& model, const Eigen::VectorXd& q_a, double t_a,
                               const Eigen::VectorXd& q_b, double t_b, const Eigen::VectorXd& extra)
{
  check_interval(model, q_a, t_a, q_b, t_b);
  const double h = t_b - t_a;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(model.dim());
  if (model.has_force())
  {
    f += model.force(0.5 * (q_a + q_b), (q_b - q_a) / h, 0.5 * (t_a + t_b));
  }
  if (extra.size())
  {
    f += extra;
  }
  return 0.5 * h * f;
}

Covector node_momentum(const MechModel& model, const Eigen::VectorXd& q_a, double t_a,
                       const Eigen::VectorXd& q_b, double t_b, const Eigen::VectorXd& extra)
{
  return Covector(discrete_momenta(model, q_a, t_a, q_b, t_b).plus.values() +
                  discrete_force(model, q_a, t_a, q_b, t_b, extra));
}

double momentum_scale(const MechModel& model, const Eigen::VectorXd& q_k, const Eigen::VectorXd& p_k, double h)
{
  const Eigen::MatrixXd m = model.mass_matrix(q_k);
  double scale = p_k.cwiseAbs().maxCoeff() + h * model.potential_gradient(q_k).cwiseAbs().maxCoeff();
  if (model.has_force())
  {
    const Eigen::VectorXd qdot = m.llt().solve(p_k);
    scale += h * model.force(q_k, qdot, 0.0).cwiseAbs().maxCoeff();
  }
  // Round-off floor of M (q_b - q_a) / h.
  const double eps = std::numeric_limits<double>::epsilon();
  scale += 1e3 * eps * m.cwiseAbs().maxCoeff() * (q_k.cwiseAbs().maxCoeff() + model.length_scale()) / h;
  return std::max(scale, std::numeric_limits<double>::min());
}

ForwardStep solve_forward(const MechModel& model,
                          const Eigen::VectorXd& q_k,
                          double t_k,
                          const Eigen::VectorXd& p_k,
                          double t_next,
                          std::span<const std::size_t> held,
                          const Eigen::VectorXd& extra_force,
                          const NewtonOptions& options)
{
  if (!(t_next > t_k))
  {
    throw std::invalid_argument("solve_forward: t_next must exceed t_k");
  }
  const Eigen::Index n = model.dim();
  const auto k = static_cast<Eigen::Index>(held.size());
  const double h = t_next - t_k;
  const double length = model.length_scale();
  double scale = momentum_scale(model, q_k, p_k, h);
  if (extra_force.size())
  {
    scale += h * extra_force.cwiseAbs().maxCoeff();
  }

  Eigen::MatrixXd held_grad(k, n);
  if (k)
  {
    const Eigen::MatrixXd jac = model.gap_jacobian(q_k);
    for (Eigen::Index j = 0; j < k; ++j)
    {
      held_grad.row(j) = jac.row(static_cast<Eigen::Index>(held[j]));
    }
  }

  auto residual = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd q = z.head(n);
    Eigen::VectorXd r(n + k);
    Eigen::VectorXd mom = p_k + discrete_momenta(model, q_k, t_k, q, t_next).minus.values() +
                          discrete_force(model, q_k, t_k, q, t_next, extra_force);
    if (k)
    {
      mom += held_grad.transpose() * z.tail(k);
      const Eigen::VectorXd g = model.gaps(q);
      for (Eigen::Index j = 0; j < k; ++j)
      {
        r[n + j] = g[static_cast<Eigen::Index>(held[j])] / length;
      }
    }
    r.head(n) = mom / scale;
    return r;
  };

  Eigen::VectorXd z(n + k);
  z.head(n) = q_k + h * model.mass_matrix(q_k).llt().solve(p_k);
  z.tail(k).setZero();
  Eigen::VectorXd typical(n + k);
  typical.head(n).setConstant(length);
  typical.tail(k).setConstant(scale);

  const NewtonResult res = newton_solve(residual, z, typical, options);
  return {res.x.head(n), res.x.tail(k), res.residual, res.iterations};
}

Eigen::VectorXd del_step(const MechModel& model,
                         const Eigen::VectorXd& q_prev,
                         const Eigen::VectorXd& q_curr,
                         double t_prev,
                         double t_curr,
                         double t_next,
                         const NewtonOptions& options)
{
  const Covector p = node_momentum(model, q_prev, t_prev, q_curr, t_curr);
  return solve_forward(model, q_curr, t_curr, p.values(), t_next, {}, {}, options).q_next;
}

}  // namespace simpact

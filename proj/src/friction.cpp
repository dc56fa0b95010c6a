#include "simpact/friction.hpp"

#include <cmath>

namespace simpact
{

FrictionForce friction_force(const MechModel& model,
                             const Eigen::VectorXd& q,
                             const Eigen::VectorXd& qdot,
                             std::size_t contact,
                             double mu,
                             double normal_force,
                             double t)
{
  FrictionForce out;
  out.generalized = Eigen::VectorXd::Zero(model.dim());
  if (!(mu > 0.0) || !(normal_force > 0.0) || contact >= model.num_contacts())
  {
    return out;
  }
  if (std::abs(model.gaps(q)[static_cast<Eigen::Index>(contact)]) > 1e-9 * model.length_scale())
  {
    return out;
  }
  const auto tangent = model.contact_tangent(q, contact);
  if (!tangent)
  {
    return out;
  }

  const double bound = mu * normal_force;
  const double width = 1e-8 * bound;
  const double slip = tangent->dot(qdot);
  double f = 0.0;
  if (std::abs(slip) > kStictionSpeed)
  {
    f = golden_section_minimize([slip](double x) { return x * slip; }, -bound, bound, width);
  }
  else
  {
    const Eigen::LLT<Eigen::MatrixXd> m(model.mass_matrix(q));
    Eigen::VectorXd load = -model.potential_gradient(q);
    if (model.has_force())
    {
      load += model.force(q, qdot, t);
    }
    const Eigen::VectorXd minv_t = m.solve(*tangent);
    const double load_t = minv_t.dot(load) / minv_t.dot(*tangent);
    f = golden_section_minimize([load_t](double x) { return (load_t + x) * (load_t + x); }, -bound, bound, width);
    out.sticking = true;
  }
  out.tangential = f;
  out.generalized = f * *tangent;
  return out;
}

}  // namespace simpact

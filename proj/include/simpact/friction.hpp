#pragma once

// Single-tangent Coulomb friction chosen by maximum dissipation.

#include <Eigen/Dense>

#include <cstddef>

#include "simpact/model.hpp"

namespace simpact
{

struct FrictionForce
{
  double tangential = 0.0;     ///< scalar force along the contact tangent
  Eigen::VectorXd generalized; ///< tangential * T, with v_t = T . qdot
  bool sticking = false;
};

/// Slip speeds at or below this count as sticking.
inline constexpr double kStictionSpeed = 1e-9;

/// Golden-section search over f in [-mu N, mu N]. While slipping it
/// minimizes the power f * v_t. While sticking it minimizes |F_t + f|,
/// where F_t is the applied load (gravity plus model force) mapped onto the
/// tangent. Zero for mu = 0, N <= 0, an open contact or a model without a tangent.
FrictionForce friction_force(const MechModel& model,
                             const Eigen::VectorXd& q,
                             const Eigen::VectorXd& qdot,
                             std::size_t contact,
                             double mu,
                             double normal_force,
                             double t = 0.0);

/// Minimizer of a unimodal function on [lo, hi], bracket shrunk below `width`.
double golden_section_minimize(const auto& f, double lo, double hi, double width)
{
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > width)
  {
    if (fc <= fd)
    {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    }
    else
    {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace simpact

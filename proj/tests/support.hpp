#pragma once

// Random instances shared by the test suites.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "simpact/metric.hpp"

namespace simpact::testing
{

inline Eigen::VectorXd gaussian(Eigen::Index n, std::mt19937_64& rng)
{
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    v[i] = g(rng);
  }
  return v;
}

/// SPD with eigenvalues in [0.2, 5] and a random orientation.
inline Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng)
{
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
  {
    a.col(j) = gaussian(n, rng);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd rot = qr.householderQ();
  std::uniform_real_distribution<double> eig(0.2, 5.0);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i)
  {
    d[i] = eig(rng);
  }
  Eigen::MatrixXd m = rot * d.asDiagonal() * rot.transpose();
  return 0.5 * (m + m.transpose());
}

inline Covector random_covector(Eigen::Index n, std::mt19937_64& rng, CovectorRole role = CovectorRole::momentum)
{
  return Covector(gaussian(n, rng), role);
}

inline double rel_err(const Covector& a, const Covector& b, double scale)
{
  return (a.values() - b.values()).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace simpact::testing

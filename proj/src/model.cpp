#include "simpact/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace simpact
{

Eigen::MatrixXd MechModel::mass_matrix_partial(const Eigen::VectorXd&, Eigen::Index) const
{
  return Eigen::MatrixXd::Zero(dim(), dim());
}

double MechModel::potential(const Eigen::VectorXd&) const { return 0.0; }

Eigen::VectorXd MechModel::potential_gradient(const Eigen::VectorXd&) const { return Eigen::VectorXd::Zero(dim()); }

Eigen::VectorXd MechModel::gaps(const Eigen::VectorXd&) const { return Eigen::VectorXd(0); }

Eigen::MatrixXd MechModel::gap_jacobian(const Eigen::VectorXd&) const { return Eigen::MatrixXd(0, dim()); }

std::string MechModel::contact_name(std::size_t i) const { return "c" + std::to_string(i); }

std::optional<Eigen::VectorXd> MechModel::contact_tangent(const Eigen::VectorXd&, std::size_t) const
{
  return std::nullopt;
}

Eigen::VectorXd MechModel::force(const Eigen::VectorXd&, const Eigen::VectorXd&, double) const
{
  return Eigen::VectorXd::Zero(dim());
}

double MechModel::lagrangian(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) const
{
  return 0.5 * qdot.dot(mass_matrix(q) * qdot) - potential(q);
}

double MechModel::kinetic_energy(const Eigen::VectorXd& q, const Eigen::VectorXd& p) const
{
  return 0.5 * p.dot(mass_matrix(q).llt().solve(p));
}

double MechModel::total_energy(const Eigen::VectorXd& q, const Eigen::VectorXd& p) const
{
  return kinetic_energy(q, p) + potential(q);
}

KineticMetric metric_at(const MechModel& model, const Eigen::VectorXd& q)
{
  if (q.size() != model.dim())
  {
    throw DimensionError("configuration length does not match model dimension");
  }
  return KineticMetric(model.mass_matrix(q));
}

std::vector<Covector> contact_normals(const MechModel& model,
                                      const Eigen::VectorXd& q,
                                      std::span<const std::size_t> contacts)
{
  const Eigen::MatrixXd jac = model.gap_jacobian(q);
  std::vector<Covector> out;
  out.reserve(contacts.size());
  for (std::size_t i : contacts)
  {
    if (i >= model.num_contacts())
    {
      throw std::out_of_range("contact index " + std::to_string(i) + " out of range");
    }
    out.emplace_back(Eigen::VectorXd(jac.row(static_cast<Eigen::Index>(i)).transpose()), CovectorRole::normal);
  }
  return out;
}

std::vector<Covector> contact_normals(const MechModel& model, const Eigen::VectorXd& q)
{
  std::vector<std::size_t> all(model.num_contacts());
  for (std::size_t i = 0; i < all.size(); ++i)
  {
    all[i] = i;
  }
  return contact_normals(model, q, all);
}

ModelCheck validate_model(const MechModel& model, std::span<const Eigen::VectorXd> configurations)
{
  ModelCheck out;
  out.min_mass_eigenvalue = std::numeric_limits<double>::infinity();
  const Eigen::Index n = model.dim();
  const double scale = model.length_scale();
  const double h = 1e-6 * scale;

  for (const Eigen::VectorXd& q : configurations)
  {
    const Eigen::MatrixXd m = model.mass_matrix(q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    out.min_mass_eigenvalue = std::min(out.min_mass_eigenvalue, eig.eigenvalues().minCoeff());

    const Eigen::MatrixXd jac = model.gap_jacobian(q);
    const Eigen::VectorXd grad = model.potential_gradient(q);
    for (Eigen::Index k = 0; k < n; ++k)
    {
      Eigen::VectorXd qp = q, qm = q;
      qp[k] += h;
      qm[k] -= h;

      if (model.num_contacts() > 0)
      {
        const Eigen::VectorXd fd = (model.gaps(qp) - model.gaps(qm)) / (2.0 * h);
        const double err = (fd - jac.col(k)).cwiseAbs().maxCoeff();
        out.max_gap_gradient_error = std::max(out.max_gap_gradient_error, err);
      }

      const double fdv = (model.potential(qp) - model.potential(qm)) / (2.0 * h);
      out.max_potential_gradient_error =
          std::max(out.max_potential_gradient_error, std::abs(fdv - grad[k]) / std::max(1.0, std::abs(grad[k])));

      const Eigen::MatrixXd fdm = (model.mass_matrix(qp) - model.mass_matrix(qm)) / (2.0 * h);
      const Eigen::MatrixXd dm = model.mass_matrix_partial(q, k);
      out.max_mass_partial_error = std::max(out.max_mass_partial_error,
                                            (fdm - dm).cwiseAbs().maxCoeff() / std::max(1.0, dm.cwiseAbs().maxCoeff()));
    }
  }
  return out;
}

}  // namespace simpact

#include "simpact/impact.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace simpact
{

namespace
{

struct UnitNormals
{
  std::vector<Covector> unit;
  std::vector<double> length;
};

UnitNormals unit_normals(const KineticMetric& metric, std::span<const Covector> normals)
{
  UnitNormals out;
  for (const Covector& u : normals)
  {
    const double n = norm(metric, u);
    if (!(n > 0.0))
    {
      throw std::invalid_argument("contact normal has zero norm");
    }
    out.length.push_back(n);
    out.unit.push_back(u * (1.0 / n));
  }
  return out;
}

std::vector<double> scores(const KineticMetric& metric, const Covector& p, const std::vector<Covector>& unit)
{
  const Eigen::VectorXd minv_p = metric.apply_inverse(p.values());
  std::vector<double> s;
  s.reserve(unit.size());
  for (const Covector& u : unit)
  {
    s.push_back(u.values().dot(minv_p));
  }
  return s;
}

// The full cyclic priority list: the requested order followed by any
// unlisted indices in ascending order.
std::vector<std::size_t> priority_list(const FixedOrder& rule, std::size_t k)
{
  std::vector<std::size_t> list;
  std::vector<bool> seen(k, false);
  for (std::size_t i : rule.order)
  {
    if (i >= k)
    {
      throw std::invalid_argument("fixed order references normal " + std::to_string(i) + " but only " +
                                  std::to_string(k) + " normals exist");
    }
    list.push_back(i);
    seen[i] = true;
  }
  for (std::size_t i = 0; i < k; ++i)
  {
    if (!seen[i])
    {
      list.push_back(i);
    }
  }
  return list;
}

}  // namespace

Reflection gamma_apply(const KineticMetric& metric, const Covector& p, const Covector& u)
{
  const double uu = inner(metric, u, u);
  if (!(uu > 0.0))
  {
    throw std::invalid_argument("gamma_apply: zero-norm normal");
  }
  const double lambda = -2.0 * inner(metric, p, u) / uu;
  Covector out(p.values() + lambda * u.values(), p.role());
  return {std::move(out), lambda};
}

double half_cone_angle(const KineticMetric& metric, const Covector& u, const Covector& v)
{
  const Covector pair[] = {u, v};
  require_pairwise_distinct(metric, pair);
  const double c = inner(metric, normalized(metric, u), normalized(metric, v));
  return std::asin(std::clamp(std::sqrt(std::max(0.0, (1.0 + c) / 2.0)), 0.0, 1.0));
}

int two_contact_step_bound(const KineticMetric& metric, const Covector& u, const Covector& v)
{
  const double gamma = half_cone_angle(metric, u, v);
  // pi / gamma is an exact integer for common angles (gamma = pi/6 gives 6);
  // keep a rounding error from bumping the bound to the next integer.
  const double ratio = std::numbers::pi / gamma;
  const double bound = std::ceil(ratio - 1e-9 * ratio);
  return bound > 1e9 ? 1000000000 : static_cast<int>(bound);
}

ImpactOutcome elastic_cascade(const KineticMetric& metric,
                              const Covector& p_minus,
                              std::span<const Covector> normals,
                              const CascadePolicy& policy)
{
  if (normals.empty())
  {
    throw std::invalid_argument("elastic_cascade: no contact normals");
  }
  if (policy.max_steps < 1)
  {
    throw std::invalid_argument("elastic_cascade: max_steps must be positive");
  }
  require_pairwise_distinct(metric, normals);
  const UnitNormals un = unit_normals(metric, normals);
  const std::size_t k = normals.size();
  const double band = policy.dead_band * norm(metric, p_minus);

  std::vector<std::size_t> list;
  if (const auto* fixed = std::get_if<FixedOrder>(&policy.rule))
  {
    list = priority_list(*fixed, k);
  }
  std::size_t list_pos = list.size() - 1;  // wraps so the first scan starts at 0

  ImpactOutcome out;
  out.kind = ImpactKind::elastic;
  out.restitution = 1.0;
  out.net_impulse = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  out.step_cap = k == 2 ? two_contact_step_bound(metric, normals[0], normals[1]) : policy.max_steps;

  Covector p = p_minus;
  for (;;)
  {
    const std::vector<double> s = scores(metric, p, un.unit);
    const bool any = std::any_of(s.begin(), s.end(), [band](double x) { return x < -band; });
    if (!any)
    {
      out.status = CascadeStatus::converged;
      break;
    }
    if (static_cast<int>(out.sequence.size()) >= out.step_cap)
    {
      out.status = CascadeStatus::step_cap_exceeded;
      break;
    }

    std::size_t pick = k;
    if (std::holds_alternative<MostViolating>(policy.rule))
    {
      pick = static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin());
    }
    else if (std::holds_alternative<LeastViolating>(policy.rule))
    {
      for (std::size_t i = 0; i < k; ++i)
      {
        if (s[i] < -band && (pick == k || s[i] > s[pick]))
        {
          pick = i;
        }
      }
    }
    else
    {
      for (std::size_t step = 1; step <= list.size(); ++step)
      {
        const std::size_t pos = (list_pos + step) % list.size();
        if (s[list[pos]] < -band)
        {
          pick = list[pos];
          list_pos = pos;
          break;
        }
      }
    }

    Reflection r = gamma_apply(metric, p, normals[pick]);
    p = std::move(r.momentum);
    out.sequence.push_back(pick);
    out.impulses.push_back(r.impulse);
    out.net_impulse[static_cast<Eigen::Index>(pick)] += r.impulse;
  }
  out.p_plus = std::move(p);
  return out;
}

OutcomeSet enumerate_outcomes(const KineticMetric& metric,
                              const Covector& p_minus,
                              std::span<const Covector> normals,
                              int depth_cap,
                              double dead_band)
{
  if (depth_cap < 1)
  {
    throw std::invalid_argument("enumerate_outcomes: depth_cap must be at least 1");
  }
  if (normals.empty())
  {
    throw std::invalid_argument("enumerate_outcomes: no contact normals");
  }
  require_pairwise_distinct(metric, normals);
  const UnitNormals un = unit_normals(metric, normals);
  const std::size_t k = normals.size();
  const double p_norm = norm(metric, p_minus);
  const double band = dead_band * p_norm;
  const double merge = 1e-9 * p_norm;

  OutcomeSet set;
  ImpactOutcome branch;
  branch.kind = ImpactKind::elastic;
  branch.step_cap = depth_cap;

  auto record = [&](const Covector& p) {
    for (const ImpactOutcome& seen : set.outcomes)
    {
      if (norm(metric, seen.p_plus - p) < merge)
      {
        return;
      }
    }
    ImpactOutcome o = branch;
    o.p_plus = p;
    o.net_impulse = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < o.sequence.size(); ++i)
    {
      o.net_impulse[static_cast<Eigen::Index>(o.sequence[i])] += o.impulses[i];
    }
    set.outcomes.push_back(std::move(o));
  };

  auto search = [&](auto&& self, const Covector& p) -> void {
    const std::vector<double> s = scores(metric, p, un.unit);
    if (std::none_of(s.begin(), s.end(), [band](double x) { return x < -band; }))
    {
      record(p);
      return;
    }
    if (static_cast<int>(branch.sequence.size()) >= depth_cap)
    {
      set.truncated = true;
      ++set.truncated_branches;
      return;
    }
    for (std::size_t i = 0; i < k; ++i)
    {
      if (s[i] >= -band || (!branch.sequence.empty() && branch.sequence.back() == i))
      {
        continue;
      }
      Reflection r = gamma_apply(metric, p, normals[i]);
      branch.sequence.push_back(i);
      branch.impulses.push_back(r.impulse);
      self(self, r.momentum);
      branch.sequence.pop_back();
      branch.impulses.pop_back();
    }
  };
  search(search, p_minus);
  return set;
}

ImpactOutcome plastic_resolve(const KineticMetric& metric, const Covector& p_minus, std::span<const Covector> normals)
{
  SpanDecomposition d = decompose(metric, p_minus, normals);
  ImpactOutcome out;
  out.p_plus = std::move(d.null);
  out.net_impulse = -d.coefficients;
  out.status = CascadeStatus::converged;
  out.kind = ImpactKind::plastic;
  out.restitution = 0.0;
  return out;
}

double blend_weight(double restitution, AlphaMode mode)
{
  if (!(restitution >= 0.0 && restitution <= 1.0))
  {
    throw std::invalid_argument("restitution must lie in [0, 1], got " + std::to_string(restitution));
  }
  return mode == AlphaMode::energy_consistent ? restitution : std::sqrt(1.0 - restitution * restitution);
}

ImpactOutcome inelastic_resolve(const KineticMetric& metric,
                                const Covector& p_minus,
                                std::span<const Covector> normals,
                                double restitution,
                                const CascadePolicy& policy,
                                AlphaMode mode)
{
  const double alpha = blend_weight(restitution, mode);
  if (alpha == 1.0)
  {
    ImpactOutcome e = elastic_cascade(metric, p_minus, normals, policy);
    e.restitution = restitution;
    return e;
  }
  if (alpha == 0.0)
  {
    ImpactOutcome pl = plastic_resolve(metric, p_minus, normals);
    pl.restitution = restitution;
    return pl;
  }

  ImpactOutcome e = elastic_cascade(metric, p_minus, normals, policy);
  const ImpactOutcome pl = plastic_resolve(metric, p_minus, normals);
  e.p_plus = alpha * e.p_plus + (1.0 - alpha) * pl.p_plus;
  e.net_impulse = alpha * e.net_impulse + (1.0 - alpha) * pl.net_impulse;
  e.kind = ImpactKind::inelastic;
  e.restitution = restitution;
  return e;
}

}  // namespace simpact

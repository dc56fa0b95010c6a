#include "simpact/uniqueness.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace simpact
{

PairClassification classify_pair(const KineticMetric& metric, const Covector& u, const Covector& v, double tol)
{
  const Covector pair[] = {u, v};
  require_pairwise_distinct(metric, pair);
  PairClassification out;
  out.tolerance = tol;
  out.inner_value = inner(metric, normalized(metric, u), normalized(metric, v));
  if (std::abs(out.inner_value) <= tol)
  {
    out.cls = PairClass::orthogonal;
  }
  else if (std::abs(out.inner_value + 0.5) <= tol)
  {
    out.cls = PairClass::three_stage;
  }
  else
  {
    out.cls = PairClass::indeterminate;
  }
  return out;
}

double indeterminacy_xi(const KineticMetric& metric,
                        const Covector& p_minus,
                        const Covector& u,
                        const Covector& v,
                        double dead_band)
{
  const Covector pair[] = {u, v};
  const double p_norm = norm(metric, p_minus);
  if (!(p_norm > 0.0))
  {
    return 0.0;
  }
  CascadePolicy uv = CascadePolicy::fixed({0, 1});
  CascadePolicy vu = CascadePolicy::fixed({1, 0});
  uv.dead_band = vu.dead_band = dead_band;
  const ImpactOutcome a = elastic_cascade(metric, p_minus, pair, uv);
  const ImpactOutcome b = elastic_cascade(metric, p_minus, pair, vu);
  for (const ImpactOutcome* o : {&a, &b})
  {
    if (o->status != CascadeStatus::converged)
    {
      throw ConvergenceError("indeterminacy_xi: cascade hit its step cap", 0.0, static_cast<int>(o->sequence.size()));
    }
  }
  return norm(metric, a.p_plus - b.p_plus) / p_norm;
}

CommutationReport verify_commutation(const KineticMetric& metric,
                                     const Covector& u,
                                     const Covector& v,
                                     std::size_t samples,
                                     std::uint64_t seed)
{
  if (samples == 0)
  {
    throw std::invalid_argument("verify_commutation: need at least one sample");
  }
  const Covector pair[] = {u, v};
  require_pairwise_distinct(metric, pair);

  CommutationReport rep;
  rep.inner_value = inner(metric, normalized(metric, u), normalized(metric, v));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const Eigen::Index n = metric.dim();
  for (std::size_t s = 0; s < samples; ++s)
  {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
      x[i] = gauss(rng);
    }
    Covector p(x);
    const double pn = norm(metric, p);
    if (!(pn > 0.0))
    {
      continue;
    }
    p *= 1.0 / pn;

    const Covector pu = gamma_apply(metric, p, u).momentum;
    const Covector pv = gamma_apply(metric, p, v).momentum;
    const Covector puv = gamma_apply(metric, pu, v).momentum;
    const Covector pvu = gamma_apply(metric, pv, u).momentum;
    const Covector puvu = gamma_apply(metric, puv, u).momentum;
    const Covector pvuv = gamma_apply(metric, pvu, v).momentum;
    rep.max_two_step = std::max(rep.max_two_step, norm(metric, puv - pvu));
    rep.max_three_step = std::max(rep.max_three_step, norm(metric, puvu - pvuv));
  }
  rep.orthogonal = std::abs(rep.inner_value) < 1e-10;
  rep.commutes = rep.max_two_step < 1e-10;
  rep.iff_holds = rep.orthogonal == rep.commutes;
  return rep;
}

OutcomeSpread outcome_spread(const KineticMetric& metric, const OutcomeSet& set, const Covector& p_minus)
{
  OutcomeSpread out;
  const double p_norm = norm(metric, p_minus);
  if (!(p_norm > 0.0))
  {
    return out;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < set.outcomes.size(); ++i)
  {
    for (std::size_t j = i + 1; j < set.outcomes.size(); ++j)
    {
      const double d = norm(metric, set.outcomes[i].p_plus - set.outcomes[j].p_plus) / p_norm;
      out.max = std::max(out.max, d);
      sum += d;
      ++out.pairs;
    }
  }
  out.mean = out.pairs ? sum / static_cast<double>(out.pairs) : 0.0;
  return out;
}

}  // namespace simpact

#pragma once

// Order dependence of two-contact impacts.

#include <cstddef>
#include <cstdint>
#include <span>

#include "simpact/impact.hpp"

namespace simpact
{

enum class PairClass
{
  orthogonal,   ///< two reflections commute, unique two-step outcome
  three_stage,  ///< <u_hat, v_hat> = -1/2, unique three-step outcome
  indeterminate
};

struct PairClassification
{
  double inner_value = 0.0; ///< <u_hat, v_hat>
  PairClass cls = PairClass::indeterminate;
  double tolerance = 0.0;
};

inline constexpr double kPairTolerance = 1e-9;

/// Throws DegenerateNormalsError for parallel or zero normals.
PairClassification classify_pair(const KineticMetric& metric,
                                 const Covector& u,
                                 const Covector& v,
                                 double tol = kPairTolerance);

/// xi = |p_uv - p_vu| / |p_minus| between the u-first and v-first cascades.
/// Zero for a momentum that is already feasible. A capped cascade throws
/// ConvergenceError.
double indeterminacy_xi(const KineticMetric& metric,
                        const Covector& p_minus,
                        const Covector& u,
                        const Covector& v,
                        double dead_band = 0.0);

struct CommutationReport
{
  double inner_value = 0.0;
  double max_two_step = 0.0;   ///< max |p G(u) G(v) - p G(v) G(u)| over unit momenta
  double max_three_step = 0.0; ///< max |p G(u) G(v) G(u) - p G(v) G(u) G(v)|
  bool orthogonal = false;     ///< |inner_value| < 1e-10
  bool commutes = false;       ///< max_two_step < 1e-10
  bool iff_holds = false;      ///< orthogonal == commutes
};

CommutationReport verify_commutation(const KineticMetric& metric,
                                     const Covector& u,
                                     const Covector& v,
                                     std::size_t samples,
                                     std::uint64_t seed);

/// Pairwise spread between distinct outcomes, normalized by |p_minus|.
/// Used for more than two contacts, where a single xi is not defined.
struct OutcomeSpread
{
  double max = 0.0;
  double mean = 0.0;
  std::size_t pairs = 0;
};

OutcomeSpread outcome_spread(const KineticMetric& metric, const OutcomeSet& set, const Covector& p_minus);

}  // namespace simpact

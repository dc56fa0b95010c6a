#pragma once

// Single-contact reflection, propagative elastic cascades, plastic
// projection and restitution blending.

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "simpact/metric.hpp"

namespace simpact
{

/// Reflect across the normal with the lowest <p, u_hat> (deepest violation).
struct MostViolating
{
};

/// Reflect across the infeasible normal with the highest <p, u_hat>.
struct LeastViolating
{
};

/// Cyclic priority list. Each step scans the list starting after the entry
/// applied last and takes the first normal that is currently infeasible.
/// Normal indices missing from `order` are appended in ascending order.
struct FixedOrder
{
  std::vector<std::size_t> order;
};

using CascadeRule = std::variant<MostViolating, LeastViolating, FixedOrder>;

struct CascadePolicy
{
  CascadeRule rule = MostViolating{};
  int max_steps = 64;     ///< step cap when more than two normals are involved
  double dead_band = 0.0; ///< relative to norm(p_minus), applied on unit normals

  static CascadePolicy most_violating() { return {}; }
  static CascadePolicy least_violating() { return {LeastViolating{}}; }
  static CascadePolicy fixed(std::vector<std::size_t> order) { return {FixedOrder{std::move(order)}}; }
};

enum class CascadeStatus
{
  converged,
  step_cap_exceeded
};

enum class ImpactKind
{
  elastic,
  plastic,
  inelastic
};

/// Blend weight between the elastic and plastic outcomes.
/// energy_consistent uses alpha = R. as_printed uses alpha = sqrt(1 - R^2).
enum class AlphaMode
{
  energy_consistent,
  as_printed
};

struct ImpactOutcome
{
  Covector p_plus;
  std::vector<std::size_t> sequence; ///< applied normal indices, in order
  std::vector<double> impulses;      ///< lambda of each applied reflection
  Eigen::VectorXd net_impulse;       ///< p_plus - p_minus = sum_i net_impulse[i] * normals[i]
  CascadeStatus status = CascadeStatus::converged;
  ImpactKind kind = ImpactKind::elastic;
  double restitution = 1.0;
  int step_cap = 0;
};

struct Reflection
{
  Covector momentum;
  double impulse = 0.0; ///< lambda = -2 <p, u> / |u|^2, so momentum = p + lambda u
};

/// Elastic single-contact reset map. Throws std::invalid_argument for a zero normal.
Reflection gamma_apply(const KineticMetric& metric, const Covector& p, const Covector& u);

/// gamma = arcsin(<r_hat, u_hat>) with r_hat the unit bisector of u_hat and v_hat.
double half_cone_angle(const KineticMetric& metric, const Covector& u, const Covector& v);

/// ceil(pi / gamma), the longest minimal sequence two contacts can need.
int two_contact_step_bound(const KineticMetric& metric, const Covector& u, const Covector& v);

/// Reflect across infeasible normals until the momentum is feasible for all
/// of them or the step cap is reached. Feasible input is returned unchanged.
ImpactOutcome elastic_cascade(const KineticMetric& metric,
                              const Covector& p_minus,
                              std::span<const Covector> normals,
                              const CascadePolicy& policy = {});

struct OutcomeSet
{
  std::vector<ImpactOutcome> outcomes; ///< distinct feasible outcomes, in search order
  bool truncated = false;
  std::size_t truncated_branches = 0;
};

/// Depth-first search over every minimal sequence. Outcomes closer than
/// 1e-9 * norm(p_minus) are merged.
OutcomeSet enumerate_outcomes(const KineticMetric& metric,
                              const Covector& p_minus,
                              std::span<const Covector> normals,
                              int depth_cap,
                              double dead_band = 0.0);

/// Perfectly plastic outcome: the metric projection onto the common tangent space.
ImpactOutcome plastic_resolve(const KineticMetric& metric, const Covector& p_minus, std::span<const Covector> normals);

double blend_weight(double restitution, AlphaMode mode = AlphaMode::energy_consistent);

/// alpha * elastic + (1 - alpha) * plastic. Throws std::invalid_argument for R outside [0, 1].
/// A step-capped elastic cascade is reported through `status`.
ImpactOutcome inelastic_resolve(const KineticMetric& metric,
                                const Covector& p_minus,
                                std::span<const Covector> normals,
                                double restitution,
                                const CascadePolicy& policy = {},
                                AlphaMode mode = AlphaMode::energy_consistent);

}  // namespace simpact

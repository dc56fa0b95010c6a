#pragma once

// Midpoint variational time stepping with impact localization, impulsive
// resets, Zeno fallback to persistent contact and optional friction.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "simpact/impact.hpp"
#include "simpact/model.hpp"
#include "simpact/newton.hpp"

namespace simpact
{

struct FrictionConfig
{
  double mu = 0.0;
  std::vector<std::size_t> contacts; ///< empty means every contact
};

struct StepperConfig
{
  double h = 1e-3;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  std::optional<double> impact_time_tol; ///< defaults to 1e-6 h
  int zeno_window = 4;
  std::vector<double> restitution;       ///< per contact; empty means 1, one entry is broadcast
  std::optional<FrictionConfig> friction;
  CascadePolicy policy;
  AlphaMode alpha_mode = AlphaMode::energy_consistent;
  int max_impacts_per_step = 256;
  double gap_tol = 1e-12;                ///< touching tolerance, relative to the model length scale

  /// Throws std::invalid_argument for a non-physical configuration.
  void validate(std::size_t num_contacts) const;
  double restitution_for(std::size_t contact) const;
  double time_tol() const { return impact_time_tol.value_or(1e-6 * h); }
  double min_substep() const { return 1e-9 * h; }
  NewtonOptions newton() const { return {newton_tol, newton_max_iter}; }
  bool friction_on(std::size_t contact) const;
};

struct ImpactRecord
{
  double t = 0.0;
  std::size_t contact = 0;
};

enum class ZenoDecision
{
  elastic,
  force_plastic
};

/// force_plastic when `contact` has more than zeno_window impacts in
/// (t_now - h, t_now], counting the impact about to happen at t_now.
ZenoDecision zeno_guard(std::span<const ImpactRecord> history, std::size_t contact, double t_now,
                        const StepperConfig& config);

struct ImpactEvent
{
  double t = 0.0;
  std::vector<std::size_t> contacts;  ///< every normal taking part, ascending
  std::vector<std::size_t> colliding; ///< contacts that were infeasible before the reset
  ImpactKind kind = ImpactKind::elastic;
  double restitution = 1.0;
  std::vector<std::size_t> sequence;  ///< cascade order, indices into `contacts`
  Eigen::VectorXd impulses;           ///< net impulse per entry of `contacts`
  double kinetic_before = 0.0;
  double kinetic_after = 0.0;
  bool forced_plastic = false;        ///< Zeno guard fired
  bool cap_fallback = false;          ///< elastic cascade hit its cap, plastic used instead
};

struct ReleaseEvent
{
  double t = 0.0;
  std::size_t contact = 0;
  double multiplier = 0.0;
};

struct Sample
{
  double t = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd p;                 ///< node momentum
  bool event = false;
  std::vector<std::size_t> held;
  Eigen::VectorXd multipliers;       ///< constraint impulse per held contact over the step that ended here
};

struct Trajectory
{
  std::vector<Sample> samples;
  std::vector<ImpactEvent> events;
  std::vector<ReleaseEvent> releases;
};

struct ImpactLocation
{
  double t_star = 0.0;
  Eigen::VectorXd q_star;
  std::vector<std::size_t> contacts; ///< crossing contacts grouped as simultaneous
  Eigen::VectorXd multipliers;       ///< held-contact impulses over [t_curr, t_star]
};

/// Find the earliest crossing of a non-held contact on [t_curr, t_next].
/// Solves the substep DEL and phi_i(q_star) = 0 jointly for (q_star,
/// t_star), seeded by linear interpolation, and falls back to bracketing
/// along the substep length. Returns t_next when the candidate lies on the
/// manifold. Throws std::invalid_argument when no contact crosses.
ImpactLocation locate_impact(const MechModel& model,
                             const Eigen::VectorXd& q_curr,
                             double t_curr,
                             const Eigen::VectorXd& p_curr,
                             const Eigen::VectorXd& q_candidate,
                             double t_next,
                             const StepperConfig& config,
                             std::span<const std::size_t> held = {},
                             const Eigen::VectorXd& extra_force = {});

/// Two-point form: the node momentum comes from the interval [t_prev, t_curr].
ImpactLocation locate_impact(const MechModel& model,
                             const Eigen::VectorXd& q_prev,
                             const Eigen::VectorXd& q_curr,
                             const Eigen::VectorXd& q_candidate,
                             double t_prev,
                             double t_curr,
                             double t_next,
                             const StepperConfig& config);

struct ImpactStepResult
{
  Eigen::VectorXd q_next;
  Covector p_star;  ///< F+(t_curr, t_star) before the reset
  Covector p_plus;  ///< after the reset
  ImpactOutcome outcome;
};

/// Reset at q_star and continue to t_next: F-(t_star, t_next) = -p_plus.
ImpactStepResult impact_step(const MechModel& model,
                             const Eigen::VectorXd& q_prev,
                             const Eigen::VectorXd& q_star,
                             double t_curr,
                             double t_star,
                             double t_next,
                             std::span<const std::size_t> contacts,
                             double restitution,
                             const CascadePolicy& policy = {},
                             AlphaMode mode = AlphaMode::energy_consistent,
                             const NewtonOptions& options = {});

/// Owns one simulation run. Not thread-safe; use one instance per thread.
class VariationalStepper
{
public:
  VariationalStepper(const MechModel& model, StepperConfig config);

  /// Integrate from (q0, qdot0) at t0 over nominal steps of h up to t_end.
  Trajectory simulate(const Eigen::VectorXd& q0, const Eigen::VectorXd& qdot0, double t0, double t_end);

private:
  const MechModel& model_;
  StepperConfig config_;
};

}  // namespace simpact

#include "simpact/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "simpact/friction.hpp"
#include "simpact/variational.hpp"

namespace simpact
{

void StepperConfig::validate(std::size_t num_contacts) const
{
  auto fail = [](const std::string& what) { throw std::invalid_argument("stepper: " + what); };
  if (!(h > 0.0) || !std::isfinite(h))
  {
    fail("h must be positive");
  }
  if (!(newton_tol > 0.0) || newton_max_iter < 1)
  {
    fail("Newton tolerance and iteration limit must be positive");
  }
  if (impact_time_tol && !(*impact_time_tol > 0.0))
  {
    fail("impact_time_tol must be positive");
  }
  if (zeno_window < 1 || max_impacts_per_step < 1)
  {
    fail("zeno_window and max_impacts_per_step must be positive");
  }
  if (!(gap_tol > 0.0))
  {
    fail("gap_tol must be positive");
  }
  if (restitution.size() > 1 && restitution.size() != num_contacts)
  {
    fail("restitution list has " + std::to_string(restitution.size()) + " entries for " +
         std::to_string(num_contacts) + " contacts");
  }
  for (double r : restitution)
  {
    if (!(r >= 0.0 && r <= 1.0))
    {
      fail("restitution must lie in [0, 1]");
    }
  }
  if (friction)
  {
    if (!(friction->mu >= 0.0))
    {
      fail("friction coefficient must be non-negative");
    }
    for (std::size_t c : friction->contacts)
    {
      if (c >= num_contacts)
      {
        fail("friction contact " + std::to_string(c) + " does not exist");
      }
    }
  }
}

double StepperConfig::restitution_for(std::size_t contact) const
{
  if (restitution.empty())
  {
    return 1.0;
  }
  return restitution.size() == 1 ? restitution.front() : restitution.at(contact);
}

bool StepperConfig::friction_on(std::size_t contact) const
{
  if (!friction || !(friction->mu > 0.0))
  {
    return false;
  }
  return friction->contacts.empty() ||
         std::find(friction->contacts.begin(), friction->contacts.end(), contact) != friction->contacts.end();
}

ZenoDecision zeno_guard(std::span<const ImpactRecord> history, std::size_t contact, double t_now,
                        const StepperConfig& config)
{
  int count = 1;
  for (const ImpactRecord& r : history)
  {
    if (r.contact == contact && r.t > t_now - config.h && r.t <= t_now)
    {
      ++count;
    }
  }
  return count > config.zeno_window ? ZenoDecision::force_plastic : ZenoDecision::elastic;
}

namespace
{

bool contains(std::span<const std::size_t> set, std::size_t i)
{
  return std::find(set.begin(), set.end(), i) != set.end();
}

// <p, u_hat> / |p|, zero for a vanishing momentum.
double relative_score(const KineticMetric& metric, const Covector& p, const Covector& u)
{
  const double pn = norm(metric, p);
  return pn > 0.0 ? inner(metric, p, u) / (pn * norm(metric, u)) : 0.0;
}

constexpr double kSeparatingScore = 1e-10;

struct Crossing
{
  double tau = 0.0;
  Eigen::VectorXd q;
  Eigen::VectorXd multipliers;
};

class Locator
{
public:
  Locator(const MechModel& model, const Eigen::VectorXd& q, double t, const Eigen::VectorXd& p,
          std::span<const std::size_t> held, const Eigen::VectorXd& extra, const StepperConfig& cfg, double span)
    : model_(model), q_(q), t_(t), p_(p), held_(held), extra_(extra), cfg_(cfg), span_(span),
      length_(model.length_scale()), gap_tol_(cfg.gap_tol * model.length_scale())
  {
  }

  ForwardStep forward(double tau) const
  {
    return solve_forward(model_, q_, t_, p_, t_ + tau, held_, extra_, cfg_.newton());
  }

  double gap_after(double tau, std::size_t i, ForwardStep* step = nullptr) const
  {
    ForwardStep fw = forward(tau);
    const double g = model_.gaps(fw.q_next)[static_cast<Eigen::Index>(i)];
    if (step)
    {
      *step = std::move(fw);
    }
    return g;
  }

  // Earliest root of phi_i along the substep, or nullopt when the contact
  // only touches (no positive gap before the crossing).
  std::optional<Crossing> crossing(std::size_t i, const ForwardStep& candidate) const
  {
    const double g0 = model_.gaps(q_)[static_cast<Eigen::Index>(i)];
    const double g1 = model_.gaps(candidate.q_next)[static_cast<Eigen::Index>(i)];
    double lo = 0.0;
    double g_lo = g0;
    if (g0 <= gap_tol_)
    {
      // Leaving and returning within the substep: find a sample with a positive gap.
      double tau = 0.5 * span_;
      while (tau >= cfg_.min_substep())
      {
        const double g = gap_after(tau, i);
        if (g > gap_tol_)
        {
          lo = tau;
          g_lo = g;
          break;
        }
        tau *= 0.5;
      }
      if (lo == 0.0)
      {
        return std::nullopt;
      }
    }
    else
    {
      const double s = g0 / (g0 - g1);
      Crossing seed{s * span_, q_ + s * (candidate.q_next - q_), s * candidate.multipliers};
      if (auto c = joint(i, seed, 0.0, span_))
      {
        return c;
      }
    }
    return bracket(i, lo, g_lo, span_, g1);
  }

  // Newton on (q, tau, lambda) with phi_i(q) = 0, accepted only inside (lo, hi].
  std::optional<Crossing> joint(std::size_t i, const Crossing& seed, double lo, double hi) const
  {
    const Eigen::Index n = model_.dim();
    const auto k = static_cast<Eigen::Index>(held_.size());
    const double scale = momentum_scale(model_, q_, p_, span_) +
                         (extra_.size() ? span_ * extra_.cwiseAbs().maxCoeff() : 0.0);
    Eigen::MatrixXd held_grad(k, n);
    if (k)
    {
      const Eigen::MatrixXd jac = model_.gap_jacobian(q_);
      for (Eigen::Index j = 0; j < k; ++j)
      {
        held_grad.row(j) = jac.row(static_cast<Eigen::Index>(held_[j]));
      }
    }

    auto residual = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
      const double tau = z[n];
      if (!(tau > 0.0))
      {
        return Eigen::VectorXd::Constant(n + 1 + k, std::numeric_limits<double>::infinity());
      }
      const Eigen::VectorXd q = z.head(n);
      Eigen::VectorXd mom = p_ + discrete_momenta(model_, q_, t_, q, t_ + tau).minus.values() +
                            discrete_force(model_, q_, t_, q, t_ + tau, extra_);
      if (k)
      {
        mom += held_grad.transpose() * z.tail(k);
      }
      const Eigen::VectorXd g = model_.gaps(q);
      Eigen::VectorXd r(n + 1 + k);
      r.head(n) = mom / scale;
      r[n] = g[static_cast<Eigen::Index>(i)] / length_;
      for (Eigen::Index j = 0; j < k; ++j)
      {
        r[n + 1 + j] = g[static_cast<Eigen::Index>(held_[j])] / length_;
      }
      return r;
    };

    Eigen::VectorXd z(n + 1 + k);
    z.head(n) = seed.q;
    z[n] = seed.tau;
    z.tail(k) = seed.multipliers;
    Eigen::VectorXd typical(n + 1 + k);
    typical.head(n).setConstant(length_);
    typical[n] = span_;
    typical.tail(k).setConstant(scale);
    try
    {
      const NewtonResult res = newton_solve(residual, z, typical, cfg_.newton());
      const double tau = res.x[n];
      if (!(tau > lo && tau <= hi * (1.0 + 1e-12)))
      {
        return std::nullopt;
      }
      return Crossing{std::min(tau, hi), res.x.head(n), res.x.tail(k)};
    }
    catch (const ConvergenceError&)
    {
      return std::nullopt;
    }
  }

  // Illinois false position on tau in [lo, hi] with g(lo) > 0 > g(hi),
  // finished by a joint Newton polish.
  std::optional<Crossing> bracket(std::size_t i, double lo, double g_lo, double hi, double g_hi) const
  {
    ForwardStep best;
    double tau = hi;
    double g = g_hi;
    int side = 0;
    for (int it = 0; it < 200; ++it)
    {
      tau = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
      if (!(tau > lo && tau < hi))
      {
        tau = 0.5 * (lo + hi);
      }
      g = gap_after(tau, i, &best);
      if (std::abs(g) <= 1e-3 * gap_tol_ || hi - lo <= 1e-15 * span_)
      {
        break;
      }
      if (g > 0.0)
      {
        lo = tau;
        g_lo = g;
        if (side == 1)
        {
          g_hi *= 0.5;
        }
        side = 1;
      }
      else
      {
        hi = tau;
        g_hi = g;
        if (side == -1)
        {
          g_lo *= 0.5;
        }
        side = -1;
      }
    }
    Crossing found{tau, best.q_next, best.multipliers};
    if (auto polished = joint(i, found, 0.0, span_); polished && std::abs(polished->tau - tau) <= 1e-6 * span_)
    {
      return polished;
    }
    if (std::abs(g) <= 1e-10 * length_)
    {
      return found;
    }
    return std::nullopt;
  }

private:
  const MechModel& model_;
  const Eigen::VectorXd& q_;
  double t_;
  const Eigen::VectorXd& p_;
  std::span<const std::size_t> held_;
  const Eigen::VectorXd& extra_;
  const StepperConfig& cfg_;
  double span_;
  double length_;
  double gap_tol_;
};

}  // namespace

ImpactLocation locate_impact(const MechModel& model,
                             const Eigen::VectorXd& q_curr,
                             double t_curr,
                             const Eigen::VectorXd& p_curr,
                             const Eigen::VectorXd& q_candidate,
                             double t_next,
                             const StepperConfig& config,
                             std::span<const std::size_t> held,
                             const Eigen::VectorXd& extra_force)
{
  const double gap_tol = config.gap_tol * model.length_scale();
  const Eigen::VectorXd g_curr = model.gaps(q_curr);
  const Eigen::VectorXd g_cand = model.gaps(q_candidate);

  std::vector<std::size_t> crossing;
  std::vector<std::size_t> landing;
  for (std::size_t i = 0; i < model.num_contacts(); ++i)
  {
    if (contains(held, i))
    {
      continue;
    }
    const auto ii = static_cast<Eigen::Index>(i);
    if (g_cand[ii] < -gap_tol)
    {
      crossing.push_back(i);
    }
    else if (std::abs(g_cand[ii]) <= gap_tol && g_curr[ii] > gap_tol)
    {
      landing.push_back(i);
    }
  }
  if (crossing.empty())
  {
    if (landing.empty())
    {
      throw std::invalid_argument("locate_impact: no gap function changes sign over the step");
    }
    return {t_next, q_candidate, landing, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(held.size()))};
  }

  const double span = t_next - t_curr;
  const Locator loc(model, q_curr, t_curr, p_curr, held, extra_force, config, span);
  ForwardStep candidate{q_candidate, {}, 0.0, 0};
  candidate.multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(held.size()));

  std::vector<std::pair<std::size_t, Crossing>> roots;
  for (std::size_t i : crossing)
  {
    auto c = loc.crossing(i, candidate);
    if (!c)
    {
      // Touching with no separation before the crossing: the contact is
      // closing at the start of the step.
      c = Crossing{0.0, q_curr, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(held.size()))};
    }
    roots.emplace_back(i, std::move(*c));
  }

  // A later root of one contact can hide an earlier crossing of another;
  // re-bracket any contact found penetrating at the chosen configuration.
  for (int pass = 0; pass < 8; ++pass)
  {
    auto first = std::min_element(roots.begin(), roots.end(),
                                  [](const auto& a, const auto& b) { return a.second.tau < b.second.tau; });
    const Crossing& best = first->second;
    if (best.tau <= 0.0)
    {
      break;
    }
    const Eigen::VectorXd g_star = model.gaps(best.q);
    bool moved = false;
    for (auto& [i, c] : roots)
    {
      if (c.tau - best.tau > config.time_tol() && g_star[static_cast<Eigen::Index>(i)] < -gap_tol)
      {
        const double g_lo = g_curr[static_cast<Eigen::Index>(i)];
        if (g_lo > gap_tol)
        {
          if (auto earlier = loc.bracket(i, 0.0, g_lo, best.tau, g_star[static_cast<Eigen::Index>(i)]))
          {
            c = std::move(*earlier);
            moved = true;
          }
        }
      }
    }
    if (!moved)
    {
      break;
    }
  }

  auto first = std::min_element(roots.begin(), roots.end(),
                                [](const auto& a, const auto& b) { return a.second.tau < b.second.tau; });
  ImpactLocation out;
  out.t_star = t_curr + first->second.tau;
  out.q_star = first->second.q;
  out.multipliers = first->second.multipliers;
  for (const auto& [i, c] : roots)
  {
    if (c.tau - first->second.tau <= config.time_tol())
    {
      out.contacts.push_back(i);
    }
  }
  std::sort(out.contacts.begin(), out.contacts.end());
  return out;
}

ImpactLocation locate_impact(const MechModel& model,
                             const Eigen::VectorXd& q_prev,
                             const Eigen::VectorXd& q_curr,
                             const Eigen::VectorXd& q_candidate,
                             double t_prev,
                             double t_curr,
                             double t_next,
                             const StepperConfig& config)
{
  const Covector p = node_momentum(model, q_prev, t_prev, q_curr, t_curr);
  return locate_impact(model, q_curr, t_curr, p.values(), q_candidate, t_next, config);
}

ImpactStepResult impact_step(const MechModel& model,
                             const Eigen::VectorXd& q_prev,
                             const Eigen::VectorXd& q_star,
                             double t_curr,
                             double t_star,
                             double t_next,
                             std::span<const std::size_t> contacts,
                             double restitution,
                             const CascadePolicy& policy,
                             AlphaMode mode,
                             const NewtonOptions& options)
{
  ImpactStepResult out;
  out.p_star = node_momentum(model, q_prev, t_curr, q_star, t_star);
  const KineticMetric metric = metric_at(model, q_star);
  const std::vector<Covector> normals = contact_normals(model, q_star, contacts);
  out.outcome = inelastic_resolve(metric, out.p_star, normals, restitution, policy, mode);
  if (out.outcome.status != CascadeStatus::converged)
  {
    throw StepFailure("impact_step: elastic cascade hit its step cap", t_star);
  }
  out.p_plus = out.outcome.p_plus;
  out.q_next = solve_forward(model, q_star, t_star, out.p_plus.values(), t_next, {}, {}, options).q_next;
  return out;
}

VariationalStepper::VariationalStepper(const MechModel& model, StepperConfig config)
  : model_(model), config_(std::move(config))
{
  config_.validate(model_.num_contacts());
}

namespace
{

class Run
{
public:
  Run(const MechModel& model, const StepperConfig& cfg) : model_(model), cfg_(cfg)
  {
    gap_tol_ = cfg.gap_tol * model.length_scale();
    lambda_.assign(model.num_contacts(), 0.0);
  }

  Trajectory simulate(const Eigen::VectorXd& q0, const Eigen::VectorXd& qdot0, double t0, double t_end)
  {
    if (q0.size() != model_.dim() || qdot0.size() != model_.dim())
    {
      throw DimensionError("initial state length does not match model dimension");
    }
    if (!(t_end >= t0))
    {
      throw std::invalid_argument("simulate: end time precedes start time");
    }
    q_ = q0;
    t_ = t0;
    p_ = model_.mass_matrix(q0) * qdot0;
    push_sample(false, Eigen::VectorXd());
    node_impacts();

    const auto steps = static_cast<long long>(std::llround((t_end - t0) / cfg_.h));
    long long node = 1;
    while (node <= steps)
    {
      double target = t0 + static_cast<double>(node) * cfg_.h;
      int impacts = 0;
      int guard = 0;
      for (;;)
      {
        if (++guard > 4 * cfg_.max_impacts_per_step + 64)
        {
          throw StepFailure("stepper: contact set did not settle within one step", t_);
        }
        const Eigen::VectorXd extra = friction_load(target - t_);
        const ForwardStep fw = solve_forward(model_, q_, t_, p_, target, held_, extra, cfg_.newton());

        if (release(fw))
        {
          continue;
        }

        const Eigen::VectorXd g = model_.gaps(fw.q_next);
        std::vector<std::size_t> crossing;
        for (std::size_t i = 0; i < model_.num_contacts(); ++i)
        {
          if (!contains(held_, i) && g[static_cast<Eigen::Index>(i)] < -gap_tol_)
          {
            crossing.push_back(i);
          }
        }

        if (crossing.empty())
        {
          const Covector p_next = node_momentum(model_, q_, t_, fw.q_next, target, extra);
          store_multipliers(fw.multipliers, target - t_);
          q_ = fw.q_next;
          t_ = target;
          p_ = p_next.values();
          push_sample(false, fw.multipliers);
          node_impacts();
          break;
        }

        if (hold_resting(crossing))
        {
          continue;
        }

        const ImpactLocation loc = locate_impact(model_, q_, t_, p_, fw.q_next, target, cfg_, held_, extra);
        if (loc.t_star - t_ < cfg_.min_substep())
        {
          // The crossing contact returns to the manifold immediately: it rests.
          for (std::size_t i : loc.contacts)
          {
            held_.push_back(i);
          }
          std::sort(held_.begin(), held_.end());
          continue;
        }

        const Covector p_star = node_momentum(model_, q_, t_, loc.q_star, loc.t_star, extra);
        store_multipliers(loc.multipliers, loc.t_star - t_);
        q_ = loc.q_star;
        t_ = loc.t_star;
        p_ = p_star.values();
        impact(loc.contacts);
        push_sample(true, loc.multipliers);

        if (++impacts > cfg_.max_impacts_per_step)
        {
          throw StepFailure("stepper: more than max_impacts_per_step impacts in one step", t_);
        }
        if (target - t_ < cfg_.min_substep())
        {
          ++node;
          target = t0 + static_cast<double>(node) * cfg_.h;
          if (node > steps)
          {
            break;
          }
        }
      }
      ++node;
    }
    return std::move(traj_);
  }

private:
  void push_sample(bool event, const Eigen::VectorXd& multipliers)
  {
    if (!traj_.samples.empty() && traj_.samples.back().t == t_)
    {
      Sample& s = traj_.samples.back();
      s.q = q_;
      s.p = p_;
      s.event = s.event || event;
      s.held = held_;
      return;
    }
    Sample s;
    s.t = t_;
    s.q = q_;
    s.p = p_;
    s.event = event;
    s.held = held_;
    s.multipliers = multipliers.size() == static_cast<Eigen::Index>(held_.size())
                        ? multipliers
                        : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(held_.size()));
    traj_.samples.push_back(std::move(s));
  }

  void store_multipliers(const Eigen::VectorXd& mult, double dt)
  {
    for (std::size_t j = 0; j < held_.size() && static_cast<Eigen::Index>(j) < mult.size(); ++j)
    {
      lambda_[held_[j]] = mult[static_cast<Eigen::Index>(j)];
    }
    last_dt_ = dt;
  }

  // Sliding friction is capped at the force that stops the slip within the
  // step; without the cap the explicit update overshoots into reverse slip.
  Eigen::VectorXd friction_load(double dt) const
  {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(model_.dim());
    if (!cfg_.friction || held_.empty() || !(last_dt_ > 0.0))
    {
      return total;
    }
    const Eigen::LLT<Eigen::MatrixXd> mass(model_.mass_matrix(q_));
    const Eigen::VectorXd qdot = mass.solve(p_);
    Eigen::VectorXd load = -model_.potential_gradient(q_);
    if (model_.has_force())
    {
      load += model_.force(q_, qdot, t_);
    }
    for (std::size_t c : held_)
    {
      if (!cfg_.friction_on(c))
      {
        continue;
      }
      const double normal = lambda_[c] / last_dt_;
      const FrictionForce ff = friction_force(model_, q_, qdot, c, cfg_.friction->mu, normal, t_);
      if (ff.sticking || ff.tangential == 0.0)
      {
        total += ff.generalized;
        continue;
      }
      const Eigen::VectorXd tangent = *model_.contact_tangent(q_, c);
      const Eigen::VectorXd minv_t = mass.solve(tangent);
      const double mobility = tangent.dot(minv_t);
      const double stop = -tangent.dot(qdot) / (mobility * dt) - minv_t.dot(load) / mobility;
      const double f = std::abs(stop) < std::abs(ff.tangential) && stop * ff.tangential > 0.0 ? stop : ff.tangential;
      total += f * tangent;
    }
    return total;
  }

  // Drop held contacts whose multiplier pulls the bodies together.
  bool release(const ForwardStep& fw)
  {
    if (held_.empty())
    {
      return false;
    }
    const double floor = 1e-10 * momentum_scale(model_, q_, p_, cfg_.h);
    std::vector<std::size_t> keep;
    bool released = false;
    for (std::size_t j = 0; j < held_.size(); ++j)
    {
      const double lam = fw.multipliers[static_cast<Eigen::Index>(j)];
      if (lam < -floor)
      {
        traj_.releases.push_back({t_, held_[j], lam});
        lambda_[held_[j]] = 0.0;
        released = true;
      }
      else
      {
        keep.push_back(held_[j]);
      }
    }
    held_ = std::move(keep);
    return released;
  }

  // Crossing contacts that already touch with non-separating momentum are
  // being pushed in by forces: hold them instead of resolving an impact.
  bool hold_resting(const std::vector<std::size_t>& crossing)
  {
    const Eigen::VectorXd g = model_.gaps(q_);
    const KineticMetric metric = metric_at(model_, q_);
    const Covector p(p_);
    bool added = false;
    for (std::size_t i : crossing)
    {
      if (std::abs(g[static_cast<Eigen::Index>(i)]) > gap_tol_)
      {
        continue;
      }
      const std::size_t one[] = {i};
      const Covector u = contact_normals(model_, q_, one).front();
      if (relative_score(metric, p, u) <= kSeparatingScore)
      {
        held_.push_back(i);
        added = true;
      }
    }
    std::sort(held_.begin(), held_.end());
    return added;
  }

  // Touching contacts at the current node with momentum into the manifold.
  void node_impacts()
  {
    if (model_.num_contacts() == 0)
    {
      return;
    }
    const Eigen::VectorXd g = model_.gaps(q_);
    const KineticMetric metric = metric_at(model_, q_);
    const Covector p(p_);
    const std::vector<Covector> normals = contact_normals(model_, q_);
    const double band = cfg_.policy.dead_band;
    bool any = false;
    for (std::size_t i = 0; i < normals.size(); ++i)
    {
      if (!contains(held_, i) && std::abs(g[static_cast<Eigen::Index>(i)]) <= gap_tol_ &&
          relative_score(metric, p, normals[i]) < -std::max(band, kSeparatingScore))
      {
        any = true;
      }
    }
    if (any)
    {
      impact({});
      traj_.samples.back().p = p_;
      traj_.samples.back().event = true;
      traj_.samples.back().held = held_;
    }
  }

  // Resolve the impact at (q_, t_) for the crossing contacts plus every other
  // touching, non-separating contact that is not held.
  void impact(const std::vector<std::size_t>& crossing)
  {
    const KineticMetric metric = metric_at(model_, q_);
    const Covector p_star(p_);
    const Eigen::VectorXd g = model_.gaps(q_);
    const std::vector<Covector> all = contact_normals(model_, q_);

    std::vector<std::size_t> event;
    for (std::size_t i = 0; i < all.size(); ++i)
    {
      if (contains(held_, i))
      {
        continue;
      }
      const bool touching = std::abs(g[static_cast<Eigen::Index>(i)]) <= gap_tol_;
      if (contains(crossing, i) || (touching && relative_score(metric, p_star, all[i]) <= kSeparatingScore))
      {
        event.push_back(i);
      }
    }
    std::vector<Covector> normals;
    for (std::size_t i : event)
    {
      normals.push_back(all[i]);
    }

    const double band = cfg_.policy.dead_band;
    std::vector<std::size_t> colliding;
    for (std::size_t j = 0; j < event.size(); ++j)
    {
      if (relative_score(metric, p_star, normals[j]) < -std::max(band, kSeparatingScore))
      {
        colliding.push_back(event[j]);
      }
    }
    if (colliding.empty())
    {
      return;
    }

    ImpactEvent ev;
    ev.t = t_;
    ev.contacts = event;
    ev.colliding = colliding;
    double r = 1.0;
    for (std::size_t c : colliding)
    {
      r = std::min(r, cfg_.restitution_for(c));
      if (zeno_guard(history_, c, t_, cfg_) == ZenoDecision::force_plastic)
      {
        ev.forced_plastic = true;
      }
    }
    if (ev.forced_plastic)
    {
      r = 0.0;
    }

    ImpactOutcome out = inelastic_resolve(metric, p_star, normals, r, cfg_.policy, cfg_.alpha_mode);
    if (out.status != CascadeStatus::converged)
    {
      out = plastic_resolve(metric, p_star, normals);
      ev.cap_fallback = true;
    }
    ev.kind = out.kind;
    ev.restitution = ev.cap_fallback ? 0.0 : r;
    ev.sequence = out.sequence;
    ev.impulses = out.net_impulse;
    ev.kinetic_before = model_.kinetic_energy(q_, p_star.values());
    ev.kinetic_after = model_.kinetic_energy(q_, out.p_plus.values());
    if (ev.kind == ImpactKind::elastic &&
        std::abs(ev.kinetic_after - ev.kinetic_before) > 1e-10 * std::max(ev.kinetic_before, 1e-300))
    {
      std::ostringstream os;
      os << "elastic impact changed kinetic energy from " << ev.kinetic_before << " to " << ev.kinetic_after;
      throw StepFailure(os.str(), t_);
    }

    for (std::size_t c : colliding)
    {
      history_.push_back({t_, c});
    }
    if (ev.kind == ImpactKind::plastic)
    {
      for (std::size_t c : event)
      {
        held_.push_back(c);
      }
      std::sort(held_.begin(), held_.end());
    }
    p_ = out.p_plus.values();
    traj_.events.push_back(std::move(ev));
  }

  const MechModel& model_;
  const StepperConfig& cfg_;
  double gap_tol_ = 0.0;
  Eigen::VectorXd q_;
  Eigen::VectorXd p_;
  double t_ = 0.0;
  std::vector<std::size_t> held_;
  std::vector<double> lambda_;
  double last_dt_ = 0.0;
  std::vector<ImpactRecord> history_;
  Trajectory traj_;
};

}  // namespace

Trajectory VariationalStepper::simulate(const Eigen::VectorXd& q0, const Eigen::VectorXd& qdot0, double t0,
                                        double t_end)
{
  Run run(model_, config_);
  return run.simulate(q0, qdot0, t0, t_end);
}

}  // namespace simpact

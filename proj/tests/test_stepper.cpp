#include <doctest.h>

#include <cmath>

#include "simpact/errors.hpp"
#include "simpact/energy.hpp"
#include "simpact/friction.hpp"
#include "simpact/models.hpp"
#include "simpact/stepper.hpp"
#include "simpact/variational.hpp"

using namespace simpact;

namespace
{

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST_SUITE("stepper")
{
  TEST_CASE("config validation")
  {
    StepperConfig c;
    CHECK_NOTHROW(c.validate(2));
    c.h = 0;
    CHECK_THROWS_AS(c.validate(2), std::invalid_argument);
    c = {};
    c.restitution = {1.2};
    CHECK_THROWS_AS(c.validate(2), std::invalid_argument);
    c.restitution = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(c.validate(2), std::invalid_argument);
    c.restitution = {0.5, 0.25};
    CHECK(c.restitution_for(1) == 0.25);
    c.restitution = {0.5};
    CHECK(c.restitution_for(1) == 0.5);
    c = {};
    c.friction = FrictionConfig{-0.1, {}};
    CHECK_THROWS_AS(c.validate(2), std::invalid_argument);
    c.friction = FrictionConfig{0.3, {5}};
    CHECK_THROWS_AS(c.validate(2), std::invalid_argument);
    c = {};
    c.newton_tol = 0;
    CHECK_THROWS_AS(c.validate(1), std::invalid_argument);
    CHECK(StepperConfig{}.time_tol() == doctest::Approx(1e-9));
  }

  TEST_CASE("zeno_guard")
  {
    StepperConfig c;
    c.h = 0.01;
    c.zeno_window = 4;
    std::vector<ImpactRecord> history;
    CHECK(zeno_guard(history, 0, 1.0, c) == ZenoDecision::elastic);
    for (double t : {0.992, 0.994, 0.996, 0.998})
    {
      history.push_back({t, 0});
    }
    CHECK(zeno_guard(history, 0, 1.0, c) == ZenoDecision::force_plastic);
    CHECK(zeno_guard(history, 1, 1.0, c) == ZenoDecision::elastic);
    CHECK(zeno_guard(history, 0, 1.5, c) == ZenoDecision::elastic);
  }

  TEST_CASE("locate_impact on a free ball")
  {
    const BouncingBallModel ball(1.0, 0.0);
    StepperConfig c;
    c.h = 0.1;
    const Eigen::VectorXd p = vec1(-0.2 / c.h);
    const ImpactLocation loc = locate_impact(ball, vec1(0.1), 0.0, p, vec1(-0.1), c.h, c);
    CHECK(loc.t_star == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(std::abs(loc.q_star[0]) < 1e-12);
    CHECK(loc.contacts == std::vector<std::size_t>{0});

    const ImpactLocation landing = locate_impact(ball, vec1(0.1), 0.0, vec1(-0.1 / c.h), vec1(0.0), c.h, c);
    CHECK(landing.t_star == c.h);

    const ImpactLocation two_point = locate_impact(ball, vec1(0.3), vec1(0.1), vec1(-0.1), -c.h, 0.0, c.h, c);
    CHECK(two_point.t_star == doctest::Approx(0.05).epsilon(1e-12));
    CHECK_THROWS_AS(locate_impact(ball, vec1(0.3), 0.0, vec1(-1.0), vec1(0.2), c.h, c), std::invalid_argument);
  }

  TEST_CASE("symmetric leg-tail drop groups both feet")
  {
    LegTailParams params;
    params.gravity = 0.0;
    const LegTailModel lt(params);
    StepperConfig c;
    c.h = 0.01;
    const Eigen::Vector3d q(0.0, 0.505, 0.0);
    const Eigen::Vector3d p(0.0, -1.0, 0.0);
    const ForwardStep fw = solve_forward(lt, q, 0.0, p, c.h);
    const ImpactLocation loc = locate_impact(lt, q, 0.0, p, fw.q_next, c.h, c);
    CHECK(loc.contacts == std::vector<std::size_t>{0, 1});
    CHECK(loc.t_star == doctest::Approx(0.005).epsilon(1e-9));
    CHECK(lt.gaps(loc.q_star).cwiseAbs().maxCoeff() < 1e-10 * lt.length_scale());
  }

  TEST_CASE("impact_step on a 1-dof ball")
  {
    const BouncingBallModel ball(1.0, 0.0);
    const std::size_t floor[] = {0};
    // Straight-line approach from q = 0.1 at t = -0.05, landing at t = 0.05 with p = -1.
    const ImpactStepResult e = impact_step(ball, vec1(0.1), vec1(0.0), -0.05, 0.05, 0.15, floor, 1.0);
    CHECK(e.p_star[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(e.p_plus[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.q_next[0] == doctest::Approx(0.1).epsilon(1e-12));
    const ImpactStepResult p = impact_step(ball, vec1(0.1), vec1(0.0), -0.05, 0.05, 0.15, floor, 0.0);
    CHECK(std::abs(p.p_plus[0]) < 1e-15);
    CHECK(std::abs(p.q_next[0]) < 1e-12);
    CHECK(p.outcome.kind == ImpactKind::plastic);
  }

  TEST_CASE("simulated cradle transfers the momentum")
  {
    const CradleModel cradle = cradle_build(3, {1, 1, 1}, {0.5, 0.5, 0.5});
    StepperConfig c;
    c.h = 1e-3;
    VariationalStepper stepper(cradle, c);
    const Trajectory tr = stepper.simulate(Eigen::Vector3d(-0.01, 1, 2), Eigen::Vector3d(1, 0, 0), 0.0, 0.1);
    REQUIRE(tr.events.size() == 1);
    CHECK(tr.events[0].t == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(tr.events[0].contacts == std::vector<std::size_t>{0, 1});
    const Eigen::VectorXd p_end = tr.samples.back().p;
    CHECK(std::abs(p_end[0]) < 1e-8);
    CHECK(std::abs(p_end[1]) < 1e-8);
    CHECK(std::abs(p_end[2] - 1.0) < 1e-8);
    for (std::size_t i = 1; i < tr.samples.size(); ++i)
    {
      REQUIRE(tr.samples[i].t > tr.samples[i - 1].t);
      REQUIRE(std::abs(tr.samples[i].p.sum() - 1.0) < 1e-10);
    }
  }

  TEST_CASE("elastic bounce keeps the apex")
  {
    const double g = 9.81, h = 1e-3;
    const BouncingBallModel ball(1.0, g);
    StepperConfig c;
    c.h = h;
    VariationalStepper stepper(ball, c);
    const Trajectory tr = stepper.simulate(vec1(1.0), vec1(0.0), 0.0, 3.0);
    CHECK(tr.events.size() >= 3);
    // Apex between consecutive events.
    for (std::size_t e = 0; e + 1 < tr.events.size(); ++e)
    {
      double apex = 0.0;
      for (const Sample& s : tr.samples)
      {
        if (s.t > tr.events[e].t && s.t < tr.events[e + 1].t)
        {
          apex = std::max(apex, s.q[0]);
        }
      }
      CHECK(std::abs(apex - 1.0) < 10 * h * h + g * h * h);
    }
    const EnergyReport rep = report_energy(ball, tr);
    CHECK_FALSE(rep.gain_detected);
    for (const EnergyEntry& e : rep.entries)
    {
      CHECK(std::abs(e.delta) <= 1e-10 * rep.initial);
    }
  }

  TEST_CASE("Zeno chatter settles into held contact and releases on a pulse")
  {
    const BouncingBallModel ball(1.0, 9.81, true, 0.0, ForcePulse{2.0, 2.2, 30.0});
    StepperConfig c;
    c.h = 1e-3;
    c.restitution = {0.5};
    VariationalStepper stepper(ball, c);
    const Trajectory tr = stepper.simulate(vec1(1.0), vec1(0.0), 0.0, 2.5);
    bool forced = false;
    double t_hold = 0.0;
    for (const ImpactEvent& e : tr.events)
    {
      if (e.forced_plastic)
      {
        forced = true;
        t_hold = e.t;
        break;
      }
    }
    REQUIRE(forced);
    CHECK(t_hold < 2.0);
    for (const Sample& s : tr.samples)
    {
      if (s.t > t_hold && s.t < 2.0)
      {
        REQUIRE(s.held == std::vector<std::size_t>{0});
        REQUIRE(std::abs(s.q[0]) < 1e-9);
        REQUIRE(s.multipliers.size() == 1);
        REQUIRE(s.multipliers[0] >= 0.0);
      }
    }
    REQUIRE(tr.releases.size() == 1);
    CHECK(tr.releases[0].t == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(tr.samples.back().q[0] > 1e-3);
  }

  TEST_CASE("plastic drop stays on the floor")
  {
    const BouncingBallModel ball(1.0, 9.81);
    StepperConfig c;
    c.restitution = {0.0};
    VariationalStepper stepper(ball, c);
    const Trajectory tr = stepper.simulate(vec1(0.2), vec1(0.0), 0.0, 0.5);
    REQUIRE(tr.events.size() == 1);
    CHECK(tr.events[0].kind == ImpactKind::plastic);
    CHECK(std::abs(tr.samples.back().q[0]) < 1e-12);
    CHECK(tr.releases.empty());
  }

  TEST_CASE("friction_force")
  {
    const PointMassModel pm(1.0, 9.81);
    const Eigen::Vector2d q(0, 0);
    const double mu = 0.4, n = 9.81;
    CHECK(friction_force(pm, q, Eigen::Vector2d(1.0, 0), 0, mu, n).tangential == doctest::Approx(-mu * n).epsilon(1e-7));
    CHECK(friction_force(pm, q, Eigen::Vector2d(-1.0, 0), 0, mu, n).tangential == doctest::Approx(mu * n).epsilon(1e-7));
    CHECK(friction_force(pm, q, Eigen::Vector2d(1.0, 0), 0, 0.0, n).tangential == 0.0);
    // Stiction against an applied tangential load.
    const PointMassModel pushed(1.0, 9.81, Eigen::Vector2d(2.0, 0.0));
    const FrictionForce hold = friction_force(pushed, q, Eigen::Vector2d::Zero(), 0, mu, n);
    CHECK(hold.sticking);
    CHECK(hold.tangential == doctest::Approx(-2.0).epsilon(1e-7));
    const PointMassModel shoved(1.0, 9.81, Eigen::Vector2d(10.0, 0.0));
    CHECK(friction_force(shoved, q, Eigen::Vector2d::Zero(), 0, mu, n).tangential == doctest::Approx(-mu * n).epsilon(1e-7));
    // Inactive contact.
    CHECK(friction_force(pm, Eigen::Vector2d(0, 0.5), Eigen::Vector2d(1.0, 0), 0, mu, n).generalized.norm() == 0.0);
  }

  TEST_CASE("sliding block stops where Coulomb friction predicts")
  {
    const double mu = 0.3, g = 9.81, v0 = 2.0;
    const PointMassModel pm(1.0, g);
    StepperConfig c;
    c.h = 1e-3;
    c.friction = FrictionConfig{mu, {}};
    VariationalStepper stepper(pm, c);
    const Trajectory tr = stepper.simulate(Eigen::Vector2d(0, 0), Eigen::Vector2d(v0, 0), 0.0, 1.0);
    const double stop = v0 * v0 / (2 * mu * g);
    CHECK(std::abs(tr.samples.back().q[0] - stop) < 5e-3);
    CHECK(std::abs(tr.samples.back().p[0]) < 1e-8);
    CHECK(std::abs(tr.samples.back().q[1]) < 1e-12);
  }
}

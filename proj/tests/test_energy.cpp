#include <doctest.h>

#include <cmath>

#include "simpact/energy.hpp"
#include "simpact/models.hpp"

using namespace simpact;

namespace
{

Trajectory cradle_run(double r, double v)
{
  const CradleModel cradle = cradle_build(3, {1, 1, 1}, {0.5, 0.5, 0.5});
  StepperConfig c;
  c.h = 1e-3;
  c.restitution = {r};
  VariationalStepper stepper(cradle, c);
  // The first ball starts 0.5 v short of contact, so the impact is at t = 0.5.
  return stepper.simulate(Eigen::Vector3d(-0.5 * v, 1, 2), Eigen::Vector3d(v, 0, 0), 0.0, 1.0);
}

}  // namespace

TEST_SUITE("energy")
{
  TEST_CASE("cradle loss fractions are speed independent")
  {
    const CradleModel cradle = cradle_build(3, {1, 1, 1}, {0.5, 0.5, 0.5});
    for (double v : {0.1, 1.0, 10.0})
    {
      const double expected[] = {0.0, 0.34, 2.0 / 3.0};
      const double rs[] = {1.0, 0.7, 0.0};
      for (int k = 0; k < 3; ++k)
      {
        const EnergyReport rep = report_energy(cradle, cradle_run(rs[k], v));
        CHECK(-rep.cumulative_fraction == doctest::Approx(expected[k]).epsilon(1e-6));
        CHECK_FALSE(rep.gain_detected);
      }
    }
  }

  TEST_CASE("plastic single impact loses exactly the projection energy")
  {
    const CradleModel cradle = cradle_build(3, {1, 1, 1}, {0.5, 0.5, 0.5});
    const EnergyReport rep = report_energy(cradle, cradle_run(0.0, 1.0));
    REQUIRE(rep.entries.size() == 1);
    // p_plus = [1/3, 1/3, 1/3]: kinetic energy 1/6 from 1/2.
    CHECK(rep.entries[0].after == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(rep.entries[0].delta == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("elastic runs conserve energy at every impact")
  {
    const CradleModel cradle = cradle_build(3, {1, 1, 1}, {0.5, 0.5, 0.5});
    const EnergyReport rep = report_energy(cradle, cradle_run(1.0, 1.0));
    for (const EnergyEntry& e : rep.entries)
    {
      CHECK(std::abs(e.delta) <= 1e-10 * rep.initial);
    }
    CHECK(rep.max_gain_fraction <= kEnergyGainTolerance);
  }

  TEST_CASE("a fabricated gain is flagged")
  {
    const CradleModel cradle = cradle_build(3, {1, 1, 1}, {0.5, 0.5, 0.5});
    Trajectory tr = cradle_run(1.0, 1.0);
    REQUIRE(!tr.events.empty());
    tr.events[0].kinetic_after = tr.events[0].kinetic_before * 1.3;
    const EnergyReport rep = report_energy(cradle, tr);
    CHECK(rep.gain_detected);
    CHECK(rep.entries[0].gain);
    CHECK(rep.max_gain_fraction == doctest::Approx(0.3).epsilon(1e-9));
  }
}

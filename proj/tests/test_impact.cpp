#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simpact/errors.hpp"
#include "simpact/impact.hpp"
#include "simpact/models.hpp"
#include "support.hpp"

using namespace simpact;
using simpact::testing::random_covector;
using simpact::testing::random_spd;

namespace
{

const std::vector<Covector> kCradle{Covector({-1, 1, 0}, CovectorRole::normal), Covector({0, -1, 1}, CovectorRole::normal)};

bool near(const Covector& a, const Eigen::VectorXd& b, double tol)
{
  return (a.values() - b).lpNorm<Eigen::Infinity>() <= tol;
}

// Pair of unit normals in the plane at angle `phi` under the identity metric.
std::vector<Covector> planar_pair(double phi)
{
  return {Covector{1, 0}, Covector{std::cos(phi), std::sin(phi)}};
}

}  // namespace

TEST_SUITE("impact")
{
  TEST_CASE("gamma_apply swaps cradle momenta")
  {
    const auto id3 = KineticMetric::identity(3);
    const Reflection r = gamma_apply(id3, Covector{1, 0, 0}, kCradle[0]);
    CHECK(near(r.momentum, Eigen::Vector3d(0, 1, 0), 1e-15));
    CHECK(r.impulse == doctest::Approx(1.0));
    const Reflection tangent = gamma_apply(id3, Covector{1, 1, 1}, kCradle[0]);
    CHECK(tangent.impulse == 0.0);
    CHECK(near(tangent.momentum, Eigen::Vector3d(1, 1, 1), 0.0));
    const Reflection back = gamma_apply(id3, r.momentum, kCradle[0]);
    CHECK(near(back.momentum, Eigen::Vector3d(1, 0, 0), 1e-15));
    CHECK_THROWS_AS(gamma_apply(id3, Covector{1, 0, 0}, Covector::zero(3)), std::invalid_argument);
  }

  TEST_CASE("cradle cascade is order independent")
  {
    const auto id3 = KineticMetric::identity(3);
    for (const CascadePolicy& policy : {CascadePolicy::most_violating(), CascadePolicy::least_violating(),
                                        CascadePolicy::fixed({0, 1}), CascadePolicy::fixed({1, 0})})
    {
      const ImpactOutcome out = elastic_cascade(id3, Covector{1, 0, 0}, kCradle, policy);
      CHECK(out.status == CascadeStatus::converged);
      CHECK(near(out.p_plus, Eigen::Vector3d(0, 0, 1), 1e-15));
      CHECK(out.kind == ImpactKind::elastic);
      for (std::size_t i = 1; i < out.sequence.size(); ++i)
      {
        CHECK(out.sequence[i] != out.sequence[i - 1]);
      }
      for (double lambda : out.impulses)
      {
        CHECK(lambda > 0.0);
      }
    }
    // Fixed order starting from the idle contact wastes no step on it.
    const ImpactOutcome bc_first = elastic_cascade(id3, Covector{1, 0, 0}, kCradle, CascadePolicy::fixed({1, 0}));
    CHECK(bc_first.sequence == std::vector<std::size_t>{0, 1});
  }

  TEST_CASE("feasible momentum passes through")
  {
    const auto id3 = KineticMetric::identity(3);
    const ImpactOutcome out = elastic_cascade(id3, Covector{0, 0, 1}, kCradle);
    CHECK(out.sequence.empty());
    CHECK(near(out.p_plus, Eigen::Vector3d(0, 0, 1), 0.0));
  }

  TEST_CASE("inner -1/2 pairs take exactly three reflections within the bound")
  {
    const auto id2 = KineticMetric::identity(2);
    const auto normals = planar_pair(2.0 * std::numbers::pi / 3.0);
    CHECK(half_cone_angle(id2, normals[0], normals[1]) == doctest::Approx(std::numbers::pi / 6.0));
    CHECK(two_contact_step_bound(id2, normals[0], normals[1]) == 6);
    std::mt19937_64 rng(3);
    int tested = 0;
    while (tested < 200)
    {
      const Covector p = random_covector(2, rng);
      if (inner(id2, p, normals[0]) >= 0.0 || inner(id2, p, normals[1]) >= 0.0)
      {
        continue;
      }
      ++tested;
      const ImpactOutcome out = elastic_cascade(id2, p, normals);
      REQUIRE(out.status == CascadeStatus::converged);
      CHECK(out.sequence.size() == 3);
      CHECK(out.step_cap == 6);
    }
  }

  TEST_CASE("step cap is first-class")
  {
    const auto id2 = KineticMetric::identity(2);
    const auto normals = planar_pair(std::numbers::pi - 0.05);
    CascadePolicy policy = CascadePolicy::most_violating();
    const ImpactOutcome out = elastic_cascade(id2, Covector{-1, -0.2}, normals, policy);
    CHECK(out.status == CascadeStatus::converged);
    CHECK(out.sequence.size() <= static_cast<std::size_t>(two_contact_step_bound(id2, normals[0], normals[1])));

    // Three contacts fall back to max_steps.
    const auto id4 = KineticMetric::identity(4);
    const std::vector<Covector> chain{Covector{-1, 1, 0, 0}, Covector{0, -1, 1, 0}, Covector{0, 0, -1, 1}};
    policy.max_steps = 2;
    const ImpactOutcome capped = elastic_cascade(id4, Covector{1, 0, 0, 0}, chain, policy);
    CHECK(capped.status == CascadeStatus::step_cap_exceeded);
    CHECK(capped.sequence.size() == 2);
    policy.max_steps = 64;
    CHECK(elastic_cascade(id4, Covector{1, 0, 0, 0}, chain, policy).status == CascadeStatus::converged);
  }

  TEST_CASE("enumerate_outcomes")
  {
    const auto id3 = KineticMetric::identity(3);
    const OutcomeSet cradle = enumerate_outcomes(id3, Covector{1, 0, 0}, kCradle, 32);
    REQUIRE(cradle.outcomes.size() == 1);
    CHECK(near(cradle.outcomes[0].p_plus, Eigen::Vector3d(0, 0, 1), 1e-14));
    CHECK_FALSE(cradle.truncated);
    CHECK(cradle.outcomes[0].sequence == std::vector<std::size_t>{0, 1});

    const auto id2 = KineticMetric::identity(2);
    const auto orth = planar_pair(std::numbers::pi / 2.0);
    const OutcomeSet o = enumerate_outcomes(id2, Covector{-1, -2}, orth, 32);
    CHECK(o.outcomes.size() == 1);

    const BilliardsModel billiards({1, 1, 1}, {0.5, 0.5, 1.5});
    const Eigen::VectorXd q = billiards.configuration(std::numbers::pi / 3.0);
    const KineticMetric metric = metric_at(billiards, q);
    const auto normals = contact_normals(billiards, q);
    const Covector p(billiards.cue_momentum(1.0));
    const OutcomeSet b = enumerate_outcomes(metric, p, normals, 32);
    REQUIRE(b.outcomes.size() == 2);
    CHECK(norm(metric, b.outcomes[0].p_plus - b.outcomes[1].p_plus) > 1e-3);
    for (const ImpactOutcome& out : b.outcomes)
    {
      CHECK(all_feasible(metric, out.p_plus, normals));
    }

    const OutcomeSet shallow = enumerate_outcomes(id3, Covector{1, 0, 0}, kCradle, 1);
    CHECK(shallow.truncated);
    CHECK(shallow.truncated_branches > 0);
    CHECK_THROWS_AS(enumerate_outcomes(id3, Covector{1, 0, 0}, kCradle, 0), std::invalid_argument);
  }

  TEST_CASE("plastic_resolve")
  {
    const auto id3 = KineticMetric::identity(3);
    const ImpactOutcome out = plastic_resolve(id3, Covector{1, 0, 0}, kCradle);
    const double third = 1.0 / 3.0;
    CHECK(near(out.p_plus, Eigen::Vector3d(third, third, third), 1e-15));
    CHECK(out.kind == ImpactKind::plastic);
    const ImpactOutcome same = plastic_resolve(id3, Covector{2, 2, 2}, kCradle);
    CHECK(near(same.p_plus, Eigen::Vector3d(2, 2, 2), 1e-15));
    const auto id1 = KineticMetric::identity(1);
    const std::vector<Covector> floor{Covector{1}};
    const ImpactOutcome absorbed = plastic_resolve(id1, Covector{-3}, floor);
    CHECK(std::abs(absorbed.p_plus[0]) < 1e-15);
    CHECK(absorbed.net_impulse[0] == doctest::Approx(3.0));
  }

  TEST_CASE("inelastic_resolve blends and loses the predicted energy")
  {
    const auto id3 = KineticMetric::identity(3);
    const Covector p{1, 0, 0};
    const ImpactOutcome elastic = inelastic_resolve(id3, p, kCradle, 1.0);
    CHECK(elastic.kind == ImpactKind::elastic);
    CHECK(near(elastic.p_plus, Eigen::Vector3d(0, 0, 1), 1e-15));
    const ImpactOutcome plastic = inelastic_resolve(id3, p, kCradle, 0.0);
    CHECK(plastic.kind == ImpactKind::plastic);
    CHECK(near(plastic.p_plus, Eigen::Vector3d::Constant(1.0 / 3.0), 1e-15));
    const ImpactOutcome mid = inelastic_resolve(id3, p, kCradle, 0.7);
    CHECK(mid.kind == ImpactKind::inelastic);
    CHECK(near(mid.p_plus, Eigen::Vector3d(0.1, 0.1, 0.8), 1e-14));
    const double e = inner(id3, mid.p_plus, mid.p_plus);
    CHECK(e == doctest::Approx(0.66).epsilon(1e-12));
    CHECK(e == doctest::Approx(0.49 * 1.0 + 0.51 / 3.0).epsilon(1e-12));

    CHECK(blend_weight(0.7, AlphaMode::as_printed) == doctest::Approx(std::sqrt(1 - 0.49)));
    const ImpactOutcome printed = inelastic_resolve(id3, p, kCradle, 1.0, {}, AlphaMode::as_printed);
    CHECK(printed.kind == ImpactKind::plastic);
    CHECK_THROWS_AS(inelastic_resolve(id3, p, kCradle, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(inelastic_resolve(id3, p, kCradle, -0.1), std::invalid_argument);
  }

  TEST_CASE("energy identity and tangential conservation on random inelastic impacts")
  {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial)
    {
      const Eigen::Index n = 2 + trial % 5;
      const KineticMetric metric(random_spd(n, rng));
      const std::vector<Covector> normals{random_covector(n, rng), random_covector(n, rng)};
      Covector p = random_covector(n, rng);
      if (all_feasible(metric, p, normals))
      {
        p = -p;
      }
      const double r = unit(rng);
      const ImpactOutcome out = inelastic_resolve(metric, p, normals, r);
      REQUIRE(out.status == CascadeStatus::converged);
      const ImpactOutcome pe = elastic_cascade(metric, p, normals);
      const ImpactOutcome pp = plastic_resolve(metric, p, normals);
      const double lhs = inner(metric, out.p_plus, out.p_plus);
      const double rhs = r * r * inner(metric, pe.p_plus, pe.p_plus) + (1 - r * r) * inner(metric, pp.p_plus, pp.p_plus);
      REQUIRE(std::abs(lhs - rhs) <= 1e-10 * inner(metric, p, p));
      const Covector diff = out.p_plus - p;
      REQUIRE(norm(metric, project_null(metric, diff, normals)) < 1e-10 * norm(metric, p));
      REQUIRE(norm(metric, pp.p_plus) <= norm(metric, p) * (1 + 1e-12));
    }
  }
}

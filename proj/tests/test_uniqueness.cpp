#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simpact/errors.hpp"
#include "simpact/models.hpp"
#include "simpact/uniqueness.hpp"
#include "support.hpp"

using namespace simpact;
using simpact::testing::random_covector;
using simpact::testing::random_spd;

TEST_SUITE("uniqueness")
{
  TEST_CASE("classify_pair")
  {
    const CradleModel cradle({2, 2, 2}, {0.1, 0.1, 0.1});
    const Eigen::VectorXd q = cradle.touching_configuration();
    const auto n = contact_normals(cradle, q);
    const PairClassification c = classify_pair(metric_at(cradle, q), n[0], n[1]);
    CHECK(c.cls == PairClass::three_stage);
    CHECK(c.inner_value == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(c.tolerance == kPairTolerance);

    const auto id2 = KineticMetric::identity(2);
    const PairClassification o = classify_pair(id2, Covector{1, 0}, Covector{0, 1});
    CHECK(o.cls == PairClass::orthogonal);
    CHECK(o.inner_value == 0.0);

    const BilliardsModel billiards({1, 1, 1}, {0.5, 0.5, 1.5});
    const Eigen::VectorXd qb = billiards.configuration(std::numbers::pi / 3.0);
    const auto nb = contact_normals(billiards, qb);
    const KineticMetric mb = metric_at(billiards, qb);
    const PairClassification b = classify_pair(mb, nb[0], nb[1]);
    CHECK(b.cls == PairClass::indeterminate);
    // cos(theta) / m_c divided by the unit normalization |u||v| = 2 / m.
    CHECK(b.inner_value == doctest::Approx(0.25).epsilon(1e-12));

    CHECK_THROWS_AS(classify_pair(id2, Covector{1, 0}, Covector{-2, 0}), DegenerateNormalsError);
  }

  TEST_CASE("indeterminacy_xi zeros and positivity")
  {
    const BilliardsModel billiards({1, 1, 1}, {0.5, 0.5, 1.5});
    auto xi_at = [&](double theta) {
      const Eigen::VectorXd q = billiards.configuration(theta);
      const auto n = contact_normals(billiards, q);
      return indeterminacy_xi(metric_at(billiards, q), Covector(billiards.cue_momentum(1.0)), n[0], n[1]);
    };
    CHECK(xi_at(std::numbers::pi / 2.0) < 1e-10);
    CHECK(xi_at(std::numbers::pi) < 1e-10);
    CHECK(xi_at(2.0 * std::numbers::pi / 5.0) > 1e-3);

    const auto id3 = KineticMetric::identity(3);
    const Covector u{-1, 1, 0}, v{0, -1, 1};
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i)
    {
      Covector p = random_covector(3, rng);
      CHECK(indeterminacy_xi(id3, p, u, v) < 1e-12);
    }
    CHECK(indeterminacy_xi(id3, Covector::zero(3), u, v) == 0.0);
  }

  TEST_CASE("xi is homogeneous in the incoming momentum")
  {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial)
    {
      const KineticMetric metric(random_spd(4, rng));
      const Covector u = random_covector(4, rng), v = random_covector(4, rng);
      Covector p = random_covector(4, rng);
      const std::vector<Covector> uv{u, v};
      if (all_feasible(metric, p, uv))
      {
        p = -p;
      }
      const double xi = indeterminacy_xi(metric, p, u, v);
      for (double s : {1e-6, 3.0, 1e6})
      {
        REQUIRE(std::abs(indeterminacy_xi(metric, s * p, u, v) - xi) < 1e-10 * std::max(1.0, xi));
      }
    }
  }

  TEST_CASE("verify_commutation")
  {
    const auto id2 = KineticMetric::identity(2);
    const CommutationReport orth = verify_commutation(id2, Covector{1, 0}, Covector{0, 1}, 200, 1);
    CHECK(orth.max_two_step < 1e-10);
    CHECK(orth.commutes);
    CHECK(orth.iff_holds);

    const auto id3 = KineticMetric::identity(3);
    const CommutationReport cradle = verify_commutation(id3, Covector{-1, 1, 0}, Covector{0, -1, 1}, 200, 2);
    CHECK(cradle.max_two_step > 1e-3);
    CHECK(cradle.max_three_step < 1e-10);
    CHECK(cradle.iff_holds);

    std::mt19937_64 rng(4);
    const KineticMetric metric(random_spd(5, rng));
    const CommutationReport random = verify_commutation(metric, random_covector(5, rng), random_covector(5, rng), 200, 3);
    CHECK(random.max_two_step > 1e-6);
    CHECK_FALSE(random.orthogonal);
    CHECK(random.iff_holds);

    const CommutationReport repeat = verify_commutation(metric, Covector{1, 0, 0, 0, 0}, Covector{0, 1, 0, 0, 0}, 50, 8);
    const CommutationReport again = verify_commutation(metric, Covector{1, 0, 0, 0, 0}, Covector{0, 1, 0, 0, 0}, 50, 8);
    CHECK(repeat.max_two_step == again.max_two_step);
  }

  TEST_CASE("three-stage exit identities")
  {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 500; ++trial)
    {
      const Eigen::Index n = 3 + trial % 4;
      const KineticMetric metric(random_spd(n, rng));
      // Metric-unit u and a unit v at 120 degrees to it.
      const Covector u = normalized(metric, random_covector(n, rng));
      Covector w = random_covector(n, rng);
      w = normalized(metric, w - inner(metric, w, u) * u);
      const Covector v = -0.5 * u + (std::sqrt(3.0) / 2.0) * w;
      Covector p = random_covector(n, rng);
      if (inner(metric, p, u) >= 0 || inner(metric, p, v) >= 0)
      {
        continue;
      }
      const Covector uvu = gamma_apply(metric, gamma_apply(metric, gamma_apply(metric, p, u).momentum, v).momentum, u).momentum;
      const Covector vuv = gamma_apply(metric, gamma_apply(metric, gamma_apply(metric, p, v).momentum, u).momentum, v).momentum;
      const double pn = norm(metric, p);
      REQUIRE(norm(metric, uvu - vuv) < 1e-10 * pn);
      REQUIRE(std::abs(inner(metric, uvu, u) + inner(metric, p, v)) < 1e-10 * pn);
      REQUIRE(std::abs(inner(metric, uvu, v) + inner(metric, p, u)) < 1e-10 * pn);
    }
  }

  TEST_CASE("pairwise spread for more than two contacts")
  {
    const CradleModel cradle({1, 2, 1, 3}, {0.5, 0.5, 0.5, 0.5});
    const Eigen::VectorXd q = cradle.touching_configuration();
    const KineticMetric metric = metric_at(cradle, q);
    const auto n = contact_normals(cradle, q);
    const Covector p{1, 0, 0, -1};
    const OutcomeSet set = enumerate_outcomes(metric, p, n, 40);
    const OutcomeSpread spread = outcome_spread(metric, set, p);
    CHECK(spread.pairs == set.outcomes.size() * (set.outcomes.size() - 1) / 2);
    CHECK(spread.max >= spread.mean);
    CHECK(spread.mean >= 0.0);
  }
}

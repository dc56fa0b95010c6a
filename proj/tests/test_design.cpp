#include <doctest.h>

#include <cmath>
#include <numbers>

#include "simpact/design.hpp"
#include "simpact/errors.hpp"
#include "simpact/uniqueness.hpp"

using namespace simpact;

namespace
{

DesignProblem all_free(const DesignFamily& family)
{
  DesignProblem p;
  p.family = &family;
  p.free.assign(static_cast<std::size_t>(family.size()), true);
  return p;
}

double scaled_distance(const DesignFamily& family, const std::vector<bool>& free, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b)
{
  const Eigen::VectorXd s = family.variable_scale();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
  {
    if (free[static_cast<std::size_t>(i)])
    {
      sum += std::pow((a[i] - b[i]) / s[i], 2);
    }
  }
  return std::sqrt(sum);
}

}  // namespace

TEST_SUITE("design")
{
  TEST_CASE("billiards from pi/3 reaches pi/2")
  {
    const BilliardsFamily family({1, 1, 1}, {0.5, 0.5, 1.5});
    const DesignProblem problem = all_free(family);
    const DesignResult r = solve_orthogonal(problem, family.start(std::numbers::pi / 3.0));
    CHECK(std::abs(r.final_residual[2]) <= 1e-6);
    CHECK(std::abs(r.final_residual[0]) <= 1e-9);
    CHECK(std::abs(r.final_residual[1]) <= 1e-9);
    const Eigen::VectorXd q = family.configuration(r.solution);
    CHECK(BilliardsModel::theta(q) == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-6));
    CHECK(r.iterations > 0);
    CHECK(r.iterations <= 200);
  }

  TEST_CASE("orthogonal start returns untouched")
  {
    const BilliardsFamily family({1, 1, 1}, {0.5, 0.5, 1.5});
    const Eigen::VectorXd x0 = family.start(std::numbers::pi / 2.0);
    const DesignResult r = solve_orthogonal(all_free(family), x0);
    CHECK(r.iterations == 0);
    CHECK((r.solution - x0).norm() == 0.0);
    CHECK(r.displacement == 0.0);
  }

  TEST_CASE("bad problems")
  {
    const LegTailFamily family(1.0, 0.1, 9.81);
    DesignProblem problem = all_free(family);
    const Eigen::VectorXd x0 = LegTailFamily::pack(LegTailParams{}, Eigen::Vector3d(0, 0.5, 0));
    problem.free = {false, true, true, false, false, false, false};
    CHECK_THROWS_AS(solve_orthogonal(problem, x0), std::invalid_argument);
    // x moves nothing in the residual: the Jacobian has rank 2.
    problem.free = {true, false, false, false, true, false, true};
    CHECK_THROWS_AS(solve_orthogonal(problem, x0), ConvergenceError);
    Eigen::VectorXd open = x0;
    open[1] += 0.1;
    CHECK_THROWS_AS(solve_orthogonal(all_free(family), open), std::invalid_argument);
    CHECK_THROWS_AS(solve_orthogonal(all_free(family), x0.head(3)), DimensionError);
  }

  TEST_CASE("leg-tail from random starts")
  {
    const LegTailFamily family(1.0, 0.1, 9.81);
    const DesignProblem problem = all_free(family);
    std::mt19937_64 rng(123);
    for (int s = 0; s < 20; ++s)
    {
      const Eigen::VectorXd x0 = family.random_start(rng);
      const DesignResult r = solve_orthogonal(problem, x0);
      REQUIRE(std::abs(r.final_residual[2]) <= 1e-6);
      REQUIRE(std::abs(r.final_residual[0]) <= 1e-9);
      REQUIRE(std::abs(r.final_residual[1]) <= 1e-9);
      REQUIRE(r.iterations <= 200);
      const auto model = family.build(r.solution);
      const Eigen::VectorXd q = family.configuration(r.solution);
      const auto n = contact_normals(*model, q);
      const CommutationReport c = verify_commutation(metric_at(*model, q), n[0], n[1], 50, 5);
      CHECK(c.max_two_step < 1e-8);
    }
  }

  TEST_CASE("leg-tail optimum agrees with a grid search on the hyperbola")
  {
    // At theta = 0 the foot heights only move the gaps and the horizontal
    // offsets only move the inner, which vanishes on ax * bx = -J / m.
    const double m = 1.0, j = 0.1;
    const LegTailFamily family(m, j, 9.81);
    LegTailParams p;
    p.mass = m;
    p.inertia = j;
    p.offset_a = Eigen::Vector2d(-0.2, -0.5);
    p.offset_b = Eigen::Vector2d(0.25, -0.5);
    const Eigen::VectorXd x0 = LegTailFamily::pack(p, Eigen::Vector3d(0, 0.5, 0));
    DesignProblem problem = all_free(family);
    problem.free = {false, false, false, true, true, true, true};
    const DesignResult r = solve_orthogonal(problem, x0);
    CHECK(r.solution[3] * r.solution[5] == doctest::Approx(-j / m).epsilon(1e-6));

    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200000; ++i)
    {
      const double ax = -1.0 + 1.0 * i / 200000.0;
      Eigen::VectorXd x = x0;
      x[3] = ax;
      x[5] = -j / (m * ax);
      best = std::min(best, scaled_distance(family, problem.free, x0, x));
    }
    CHECK(r.displacement == doctest::Approx(scaled_distance(family, problem.free, x0, r.solution)).epsilon(1e-9));
    CHECK(r.displacement <= 1.05 * best);
    CHECK(r.displacement >= best * (1 - 1e-6));
  }

  TEST_CASE("minimum-norm steps stay near the start")
  {
    const LegTailFamily family(1.0, 0.1, 9.81);
    const DesignProblem problem = all_free(family);
    std::mt19937_64 rng(77);
    const Eigen::VectorXd x0 = family.random_start(rng);
    const DesignResult own = solve_orthogonal(problem, x0);
    double nearest = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 20; ++s)
    {
      const DesignResult other = solve_orthogonal(problem, family.random_start(rng));
      nearest = std::min(nearest, scaled_distance(family, problem.free, x0, other.solution));
    }
    CHECK(own.displacement <= 1.1 * nearest);
  }

  TEST_CASE("report layout")
  {
    const BilliardsFamily family({1, 1, 1}, {0.5, 0.5, 1.5});
    const DesignProblem problem = all_free(family);
    const DesignResult r = solve_orthogonal(problem, family.start(1.2));
    const std::string text = format_report(problem, r);
    for (const char* key : {"variable", "unoptimized", "optimized", "change", "xa", "iterations", "displacement"})
    {
      CHECK(text.find(key) != std::string::npos);
    }
  }

  TEST_CASE("theta_sweep")
  {
    const BilliardsModel b({1, 1, 1}, {0.5, 0.5, 1.5});
    const auto a = theta_sweep(b, std::numbers::pi / 6.0, std::numbers::pi, 200, 1.0, 1);
    const auto c = theta_sweep(b, std::numbers::pi / 6.0, std::numbers::pi, 200, 1.0, 8);
    REQUIRE(a.size() == 200);
    CHECK(a.back().theta == std::numbers::pi);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
      REQUIRE(a[i].theta == c[i].theta);
      REQUIRE(a[i].xi == c[i].xi);
      if (i)
      {
        REQUIRE(a[i].theta > a[i - 1].theta);
      }
    }
    CHECK(a.back().xi < 1e-10);
    const auto half = theta_sweep(b, std::numbers::pi / 4.0, std::numbers::pi / 2.0, 1);
    CHECK(half[0].xi < 1e-10);
    CHECK(std::abs(half[0].inner) < 1e-15);
    CHECK_THROWS_AS(theta_sweep(b, 0.3, std::numbers::pi, 10), std::out_of_range);
    const BilliardsModel equal({1, 1, 1}, {0.5, 0.5, 0.5});
    CHECK_THROWS_AS(theta_sweep(equal, std::numbers::pi / 6.0, std::numbers::pi, 10), std::out_of_range);
  }
}

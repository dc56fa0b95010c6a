#include "simpact/design.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "simpact/uniqueness.hpp"

namespace simpact
{

LegTailFamily::LegTailFamily(double mass, double inertia, double gravity)
  : mass_(mass), inertia_(inertia), gravity_(gravity)
{
  if (!(mass_ > 0.0) || !(inertia_ > 0.0) || !(gravity_ >= 0.0))
  {
    throw std::invalid_argument("legtail family needs positive mass and inertia");
  }
}

std::vector<std::string> LegTailFamily::variable_names() const
{
  return {"x", "y", "theta", "ax", "ay", "bx", "by"};
}

LegTailParams LegTailFamily::params(const Eigen::VectorXd& x) const
{
  LegTailParams p;
  p.mass = mass_;
  p.inertia = inertia_;
  p.gravity = gravity_;
  p.offset_a = Eigen::Vector2d(x[3], x[4]);
  p.offset_b = Eigen::Vector2d(x[5], x[6]);
  return p;
}

std::unique_ptr<MechModel> LegTailFamily::build(const Eigen::VectorXd& x) const
{
  return std::make_unique<LegTailModel>(params(x));
}

Eigen::VectorXd LegTailFamily::variable_scale() const
{
  Eigen::VectorXd s(7);
  s << 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 0.5;
  return s;
}

Eigen::VectorXd LegTailFamily::pack(const LegTailParams& params, const Eigen::Vector3d& pose)
{
  Eigen::VectorXd x(7);
  x << pose, params.offset_a, params.offset_b;
  return x;
}

Eigen::VectorXd LegTailFamily::random_start(std::mt19937_64& rng) const
{
  std::uniform_real_distribution<double> across(0.15, 0.5);
  std::uniform_real_distribution<double> down(0.3, 0.7);
  for (;;)
  {
    LegTailParams p;
    p.mass = mass_;
    p.inertia = inertia_;
    p.gravity = gravity_;
    p.offset_a = Eigen::Vector2d(-across(rng), -down(rng));
    p.offset_b = Eigen::Vector2d(across(rng), -down(rng));
    const LegTailModel model(p);
    const auto pose = model.double_contact_pose();
    if (!pose)
    {
      continue;
    }
    const auto normals = contact_normals(model, *pose);
    const KineticMetric metric = metric_at(model, *pose);
    const double c = inner(metric, normalized(metric, normals[0]), normalized(metric, normals[1]));
    if (std::abs(c) > 1e-2)
    {
      return pack(p, *pose);
    }
  }
}

BilliardsFamily::BilliardsFamily(std::array<double, 3> masses, std::array<double, 3> radii)
  : model_(billiards_build(masses, radii))
{
}

std::unique_ptr<MechModel> BilliardsFamily::build(const Eigen::VectorXd&) const
{
  return std::make_unique<BilliardsModel>(model_);
}

Eigen::VectorXd BilliardsFamily::configuration(const Eigen::VectorXd& x) const
{
  Eigen::VectorXd q = Eigen::VectorXd::Zero(6);
  q.head(4) = x;
  return q;
}

Eigen::VectorXd BilliardsFamily::variable_scale() const
{
  return Eigen::VectorXd::Constant(4, model_.length_scale());
}

Eigen::VectorXd BilliardsFamily::start(double theta) const { return model_.configuration(theta).head(4); }

namespace
{

void check_problem(const DesignProblem& problem)
{
  if (!problem.family)
  {
    throw std::invalid_argument("design problem has no family");
  }
  const auto n = static_cast<std::size_t>(problem.family->size());
  if (problem.free.size() != n)
  {
    throw std::invalid_argument("free mask has " + std::to_string(problem.free.size()) + " entries for " +
                                std::to_string(n) + " design variables");
  }
  if (std::count(problem.free.begin(), problem.free.end(), true) < 3)
  {
    throw std::invalid_argument("design problem needs at least three free variables");
  }
  if (problem.contact_a == problem.contact_b)
  {
    throw std::invalid_argument("design problem needs two distinct contacts");
  }
  if (!(problem.inner_tol > 0.0) || !(problem.gap_tol > 0.0) || problem.max_iter < 1 || problem.polish_steps < 0)
  {
    throw std::invalid_argument("design tolerances and iteration cap must be positive");
  }
}

bool within_tolerance(const DesignProblem& problem, const Eigen::Vector3d& r)
{
  return std::abs(r[2]) <= problem.inner_tol && std::abs(r[0]) <= problem.gap_tol && std::abs(r[1]) <= problem.gap_tol;
}

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Eigen::Vector3d design_residual(const DesignProblem& problem, const Eigen::VectorXd& x)
{
  const auto model = problem.family->build(x);
  const Eigen::VectorXd q = problem.family->configuration(x);
  const double l = problem.family->length_scale();
  const Eigen::VectorXd g = model->gaps(q);
  const std::size_t pair[] = {problem.contact_a, problem.contact_b};
  const auto normals = contact_normals(*model, q, pair);
  const KineticMetric metric = metric_at(*model, q);
  const double c = inner(metric, normalized(metric, normals[0]), normalized(metric, normals[1]));
  return {g[static_cast<Eigen::Index>(problem.contact_a)] / l, g[static_cast<Eigen::Index>(problem.contact_b)] / l, c};
}

DesignResult solve_orthogonal(const DesignProblem& problem, const Eigen::VectorXd& initial)
{
  check_problem(problem);
  if (initial.size() != problem.family->size())
  {
    throw DimensionError("initial design vector has the wrong length");
  }

  std::vector<Eigen::Index> free;
  for (std::size_t i = 0; i < problem.free.size(); ++i)
  {
    if (problem.free[i])
    {
      free.push_back(static_cast<Eigen::Index>(i));
    }
  }
  const Eigen::VectorXd scale = problem.family->variable_scale();
  const auto m = static_cast<Eigen::Index>(free.size());

  DesignResult out;
  out.initial = initial;
  out.solution = initial;
  out.initial_residual = design_residual(problem, initial);
  out.final_residual = out.initial_residual;
  if (std::abs(out.initial_residual[0]) > problem.start_gap_tol ||
      std::abs(out.initial_residual[1]) > problem.start_gap_tol)
  {
    throw std::invalid_argument("solve_orthogonal: the initial guess must have both contacts closed");
  }
  if (within_tolerance(problem, out.initial_residual))
  {
    return out;
  }

  auto displaced = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& ds) {
    Eigen::VectorXd y = x;
    for (Eigen::Index j = 0; j < m; ++j)
    {
      y[free[j]] += scale[free[j]] * ds[j];
    }
    return y;
  };

  // One minimum-norm Gauss-Newton step with backtracking. Returns false when
  // no step length reduces the residual.
  auto step = [&](Eigen::VectorXd& x, Eigen::Vector3d& r) {
    Eigen::MatrixXd jac(3, m);
    for (Eigen::Index j = 0; j < m; ++j)
    {
      const double h = 1e-6;
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
      e[j] = h;
      jac.col(j) = (design_residual(problem, displaced(x, e)) - design_residual(problem, displaced(x, -e))) / (2 * h);
    }
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jac);
    if (cod.rank() < 3)
    {
      throw ConvergenceError("solve_orthogonal: residual Jacobian lost rank", r.norm(), out.iterations);
    }
    const Eigen::VectorXd ds = cod.solve(Eigen::VectorXd(-r));
    for (double t = 1.0; t > 1e-9; t *= 0.5)
    {
      const Eigen::VectorXd y = displaced(x, t * ds);
      const Eigen::Vector3d ry = design_residual(problem, y);
      if (ry.norm() < r.norm())
      {
        x = y;
        r = ry;
        return true;
      }
    }
    return false;
  };

  Eigen::VectorXd x = initial;
  Eigen::Vector3d r = out.initial_residual;
  while (!within_tolerance(problem, r))
  {
    if (out.iterations >= problem.max_iter)
    {
      throw ConvergenceError("solve_orthogonal: iteration cap reached", r.norm(), out.iterations);
    }
    ++out.iterations;
    if (!step(x, r))
    {
      throw ConvergenceError("solve_orthogonal: line search failed", r.norm(), out.iterations);
    }
  }

  // Quadratic convergence is cheap near the root; keep stepping while each
  // step still cuts the residual tenfold.
  for (int k = 0; k < problem.polish_steps && out.iterations < problem.max_iter; ++k)
  {
    Eigen::VectorXd y = x;
    Eigen::Vector3d ry = r;
    if (!step(y, ry) || !(ry.norm() <= 0.1 * r.norm()))
    {
      break;
    }
    ++out.iterations;
    x = y;
    r = ry;
  }

  out.solution = x;
  out.final_residual = r;
  double d2 = 0.0;
  for (Eigen::Index j : free)
  {
    d2 += std::pow((x[j] - initial[j]) / scale[j], 2);
  }
  out.displacement = std::sqrt(d2);
  return out;
}

std::string format_report(const DesignProblem& problem, const DesignResult& result)
{
  check_problem(problem);
  const auto names = problem.family->variable_names();
  const auto model = problem.family->build(result.solution);
  const std::string a = model->contact_name(problem.contact_a);
  const std::string b = model->contact_name(problem.contact_b);

  std::ostringstream os;
  os << "family " << problem.family->name() << "\n";
  os << "free";
  for (std::size_t i = 0; i < names.size(); ++i)
  {
    if (problem.free[i])
    {
      os << " " << names[i];
    }
  }
  os << "\n\n";

  char line[160];
  std::snprintf(line, sizeof line, "%-14s %-24s %-24s %-24s\n", "variable", "unoptimized", "optimized", "change");
  os << line;
  for (std::size_t i = 0; i < names.size(); ++i)
  {
    const auto k = static_cast<Eigen::Index>(i);
    std::snprintf(line, sizeof line, "%-14s %-24s %-24s %-24s\n", names[i].c_str(), fmt(result.initial[k]).c_str(),
                  fmt(result.solution[k]).c_str(), fmt(result.solution[k] - result.initial[k]).c_str());
    os << line;
  }
  os << "\n";
  const std::string rows[3] = {"phi_" + a + "/l", "phi_" + b + "/l", "<u_" + a + ",u_" + b + ">"};
  std::snprintf(line, sizeof line, "%-14s %-24s %-24s\n", "residual", "unoptimized", "optimized");
  os << line;
  for (int i = 0; i < 3; ++i)
  {
    std::snprintf(line, sizeof line, "%-14s %-24s %-24s\n", rows[i].c_str(), fmt(result.initial_residual[i]).c_str(),
                  fmt(result.final_residual[i]).c_str());
    os << line;
  }
  os << "\niterations " << result.iterations << "\n";
  os << "displacement " << fmt(result.displacement) << "\n";
  return os.str();
}

std::vector<SweepPoint> theta_sweep(const BilliardsModel& model,
                                    double theta_lo,
                                    double theta_hi,
                                    std::size_t samples,
                                    double cue_speed,
                                    unsigned threads)
{
  if (samples == 0)
  {
    throw std::invalid_argument("theta_sweep: need at least one sample");
  }
  if (!(theta_hi > theta_lo))
  {
    throw std::invalid_argument("theta_sweep: empty angle range");
  }
  if (theta_lo < model.min_theta() * (1.0 - 1e-12))
  {
    throw std::out_of_range("theta_sweep: lower angle " + fmt(theta_lo) + " is below the contact limit " +
                            fmt(model.min_theta()) + " where disks a and b overlap");
  }
  if (theta_hi > std::numbers::pi * (1.0 + 1e-15))
  {
    throw std::out_of_range("theta_sweep: upper angle exceeds pi");
  }
  if (!(cue_speed > 0.0))
  {
    throw std::invalid_argument("theta_sweep: cue speed must be positive");
  }

  std::vector<SweepPoint> out(samples);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
    {
      const double theta = std::min(
          std::numbers::pi, theta_lo + (theta_hi - theta_lo) * static_cast<double>(i + 1) / static_cast<double>(samples));
      const Eigen::VectorXd q = model.configuration(theta);
      const auto normals = contact_normals(model, q);
      const KineticMetric metric = metric_at(model, q);
      const Covector p(model.cue_momentum(cue_speed));
      out[i].theta = theta;
      out[i].inner = inner(metric, normalized(metric, normals[0]), normalized(metric, normals[1]));
      out[i].xi = indeterminacy_xi(metric, p, normals[0], normals[1]);
    }
  };

  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, samples));
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (samples + workers - 1) / workers;
  for (std::size_t begin = 0; begin < samples; begin += chunk)
  {
    jobs.push_back(std::async(std::launch::async, run, begin, std::min(samples, begin + chunk)));
  }
  for (auto& job : jobs)
  {
    job.get();
  }
  return out;
}

}  // namespace simpact

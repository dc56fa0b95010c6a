#include "simpact/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "simpact/design.hpp"
#include "simpact/energy.hpp"
#include "simpact/models.hpp"
#include "simpact/uniqueness.hpp"

#ifndef SIMPACT_VERSION
#define SIMPACT_VERSION "unknown"
#endif

namespace simpact
{

using json = nlohmann::json;

std::string format_number(double value)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string sha256_hex(const std::string& bytes)
{
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
  {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i)
  {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

namespace
{

// A JSON value plus its path, for field-level diagnostics.
class Node
{
public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return value_; }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_.empty() ? "<root>" : path_, what); }

  bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

  Node at(const char* key) const
  {
    if (!value_.is_object())
    {
      fail("expected an object");
    }
    if (!value_.contains(key))
    {
      throw ConfigError(child(key), "required field is missing");
    }
    return Node(value_.at(key), child(key));
  }

  std::optional<Node> find(const char* key) const
  {
    if (!has(key))
    {
      return std::nullopt;
    }
    return Node(value_.at(key), child(key));
  }

  void allow(std::initializer_list<const char*> keys) const
  {
    if (!value_.is_object())
    {
      fail("expected an object");
    }
    for (auto it = value_.begin(); it != value_.end(); ++it)
    {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      {
        throw ConfigError(child(it.key().c_str()), "unknown field");
      }
    }
  }

  double number() const
  {
    if (value_.is_string())
    {
      return angle_expression(value_.get<std::string>());
    }
    if (!value_.is_number())
    {
      fail("expected a number");
    }
    const double v = value_.get<double>();
    if (!std::isfinite(v))
    {
      fail("expected a finite number");
    }
    return v;
  }

  double positive() const
  {
    const double v = number();
    if (!(v > 0.0))
    {
      fail("expected a positive number");
    }
    return v;
  }

  double nonnegative() const
  {
    const double v = number();
    if (!(v >= 0.0))
    {
      fail("expected a non-negative number");
    }
    return v;
  }

  long long integer(long long lo, long long hi) const
  {
    if (!value_.is_number_integer() && !value_.is_number_unsigned())
    {
      fail("expected an integer");
    }
    const long long v = value_.get<long long>();
    if (v < lo || v > hi)
    {
      fail("expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return v;
  }

  std::string str() const
  {
    if (!value_.is_string())
    {
      fail("expected a string");
    }
    return value_.get<std::string>();
  }

  bool boolean() const
  {
    if (!value_.is_boolean())
    {
      fail("expected true or false");
    }
    return value_.get<bool>();
  }

  std::vector<Node> items() const
  {
    if (!value_.is_array())
    {
      fail("expected an array");
    }
    std::vector<Node> out;
    for (std::size_t i = 0; i < value_.size(); ++i)
    {
      out.emplace_back(value_.at(i), path_ + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  Eigen::VectorXd vector(std::size_t expected = 0) const
  {
    const auto xs = items();
    if (expected && xs.size() != expected)
    {
      fail("expected " + std::to_string(expected) + " numbers, got " + std::to_string(xs.size()));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
    {
      v[static_cast<Eigen::Index>(i)] = xs[i].number();
    }
    return v;
  }

private:
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  // Angles may be written as "pi", "pi/6", "2*pi/5" or "2pi/5".
  double angle_expression(const std::string& text) const
  {
    std::string s;
    for (char c : text)
    {
      if (c != ' ')
      {
        s += c;
      }
    }
    const auto pos = s.find("pi");
    if (pos == std::string::npos)
    {
      fail("expected a number or an expression like 2*pi/5");
    }
    double num = 1.0;
    double den = 1.0;
    try
    {
      std::string head = s.substr(0, pos);
      if (!head.empty() && head.back() == '*')
      {
        head.pop_back();
      }
      if (!head.empty())
      {
        std::size_t used = 0;
        num = std::stod(head, &used);
        if (used != head.size())
        {
          fail("malformed angle expression '" + text + "'");
        }
      }
      std::string tail = s.substr(pos + 2);
      if (!tail.empty())
      {
        if (tail.front() != '/')
        {
          fail("malformed angle expression '" + text + "'");
        }
        std::size_t used = 0;
        den = std::stod(tail.substr(1), &used);
        if (used != tail.size() - 1 || den == 0.0)
        {
          fail("malformed angle expression '" + text + "'");
        }
      }
    }
    catch (const std::logic_error&)
    {
      fail("malformed angle expression '" + text + "'");
    }
    return num * std::numbers::pi / den;
  }

  const json& value_;
  std::string path_;
};

std::string line_column(const std::string& text, std::size_t byte)
{
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i)
  {
    if (text[i] == '\n')
    {
      ++line;
      col = 1;
    }
    else
    {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::size_t contact_index(const Node& n, const MechModel& model)
{
  if (n.raw().is_string())
  {
    const std::string name = n.str();
    for (std::size_t i = 0; i < model.num_contacts(); ++i)
    {
      if (model.contact_name(i) == name)
      {
        return i;
      }
    }
    n.fail("model has no contact named '" + name + "'");
  }
  const auto hi = static_cast<long long>(model.num_contacts()) - 1;
  if (hi < 0)
  {
    n.fail("model has no contacts");
  }
  return static_cast<std::size_t>(n.integer(0, hi));
}

std::vector<std::size_t> contact_list(const Node& n, const MechModel& model)
{
  std::vector<std::size_t> out;
  for (const Node& item : n.items())
  {
    out.push_back(contact_index(item, model));
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end())
  {
    n.fail("contact listed twice");
  }
  return out;
}

std::shared_ptr<const MechModel> parse_model(const Node& m, std::string& type)
{
  type = m.at("type").str();
  try
  {
    if (type == "cradle")
    {
      m.allow({"type", "masses", "radii"});
      const Eigen::VectorXd masses = m.at("masses").vector();
      const Node rn = m.at("radii");
      Eigen::VectorXd radii = rn.raw().is_array() ? rn.vector() : Eigen::VectorXd::Constant(masses.size(), rn.number());
      if (radii.size() != masses.size())
      {
        rn.fail("needs one radius per mass");
      }
      return std::make_shared<CradleModel>(cradle_build(static_cast<std::size_t>(masses.size()),
                                                        {masses.data(), masses.data() + masses.size()},
                                                        {radii.data(), radii.data() + radii.size()}));
    }
    if (type == "billiards")
    {
      m.allow({"type", "masses", "radii"});
      const Eigen::VectorXd ms = m.at("masses").vector(3);
      const Eigen::VectorXd rs = m.at("radii").vector(3);
      return std::make_shared<BilliardsModel>(billiards_build({ms[0], ms[1], ms[2]}, {rs[0], rs[1], rs[2]}));
    }
    if (type == "legtail")
    {
      m.allow({"type", "mass", "inertia", "offset_a", "offset_b", "gravity"});
      LegTailParams p;
      p.mass = m.at("mass").positive();
      p.inertia = m.at("inertia").positive();
      p.offset_a = m.at("offset_a").vector(2);
      p.offset_b = m.at("offset_b").vector(2);
      if (auto g = m.find("gravity"))
      {
        p.gravity = g->nonnegative();
      }
      return std::make_shared<LegTailModel>(legtail_build(p));
    }
    if (type == "bouncing_ball")
    {
      m.allow({"type", "mass", "gravity", "radius", "floor", "pulse"});
      std::optional<ForcePulse> pulse;
      if (auto pn = m.find("pulse"))
      {
        pn->allow({"t_on", "t_off", "magnitude"});
        pulse = ForcePulse{pn->at("t_on").number(), pn->at("t_off").number(), pn->at("magnitude").number()};
      }
      return std::make_shared<BouncingBallModel>(m.at("mass").positive(), m.at("gravity").nonnegative(),
                                                 m.has("floor") ? m.at("floor").boolean() : true,
                                                 m.has("radius") ? m.at("radius").nonnegative() : 0.0, pulse);
    }
    if (type == "point_mass")
    {
      m.allow({"type", "mass", "gravity", "applied"});
      const Eigen::Vector2d applied = m.has("applied") ? Eigen::Vector2d(m.at("applied").vector(2)) : Eigen::Vector2d::Zero();
      return std::make_shared<PointMassModel>(m.at("mass").positive(), m.at("gravity").nonnegative(), applied);
    }
    if (type == "harmonic")
    {
      m.allow({"type", "mass", "stiffness"});
      return std::make_shared<HarmonicOscillatorModel>(m.at("mass").positive(), m.at("stiffness").positive());
    }
    if (type == "pendulum")
    {
      m.allow({"type", "mass", "length", "gravity"});
      return std::make_shared<PendulumModel>(m.at("mass").positive(), m.at("length").positive(),
                                             m.at("gravity").nonnegative());
    }
  }
  catch (const ConfigError&)
  {
    throw;
  }
  catch (const std::exception& e)
  {
    m.fail(e.what());
  }
  m.at("type").fail("unknown model type '" + type +
                    "' (expected cradle, billiards, legtail, bouncing_ball, point_mass, harmonic or pendulum)");
}

StepperConfig parse_stepper(const Node& s, const MechModel& model)
{
  s.allow({"h", "newton_tol", "newton_max_iter", "impact_time_tol", "zeno_window", "restitution", "friction",
           "max_impacts_per_step", "gap_tol", "dead_band"});
  StepperConfig c;
  if (auto v = s.find("h")) c.h = v->positive();
  if (auto v = s.find("newton_tol")) c.newton_tol = v->positive();
  if (auto v = s.find("newton_max_iter")) c.newton_max_iter = static_cast<int>(v->integer(1, 10000));
  if (auto v = s.find("impact_time_tol")) c.impact_time_tol = v->positive();
  if (auto v = s.find("zeno_window")) c.zeno_window = static_cast<int>(v->integer(1, 1000000));
  if (auto v = s.find("max_impacts_per_step")) c.max_impacts_per_step = static_cast<int>(v->integer(1, 1000000));
  if (auto v = s.find("gap_tol")) c.gap_tol = v->positive();
  if (auto v = s.find("dead_band")) c.policy.dead_band = v->nonnegative();
  if (auto v = s.find("restitution"))
  {
    const Eigen::VectorXd r = v->raw().is_array() ? v->vector() : Eigen::VectorXd::Constant(1, v->number());
    c.restitution.assign(r.data(), r.data() + r.size());
    for (double x : c.restitution)
    {
      if (!(x >= 0.0 && x <= 1.0))
      {
        v->fail("restitution must lie in [0, 1]");
      }
    }
    if (c.restitution.size() > 1 && c.restitution.size() != model.num_contacts())
    {
      v->fail("needs one value per contact (" + std::to_string(model.num_contacts()) + ") or a single value");
    }
  }
  if (auto f = s.find("friction"))
  {
    f->allow({"mu", "contacts"});
    FrictionConfig fc;
    fc.mu = f->at("mu").nonnegative();
    if (auto cs = f->find("contacts"))
    {
      fc.contacts = contact_list(*cs, model);
    }
    c.friction = fc;
  }
  try
  {
    c.validate(model.num_contacts());
  }
  catch (const std::invalid_argument& e)
  {
    s.fail(e.what());
  }
  return c;
}

Eigen::VectorXd default_impact_configuration(const Node& t, const MechModel& model)
{
  if (const auto* cradle = dynamic_cast<const CradleModel*>(&model))
  {
    return cradle->touching_configuration();
  }
  if (const auto* legtail = dynamic_cast<const LegTailModel*>(&model))
  {
    if (auto pose = legtail->double_contact_pose())
    {
      return *pose;
    }
  }
  t.fail("an impact configuration 'q' is required for this model");
}

ScenarioTask parse_task(const Node& t, const ScenarioConfig& cfg)
{
  const MechModel& model = *cfg.model;
  const std::string type = t.at("type").str();
  if (type == "simulate")
  {
    t.allow({"type", "t_end"});
    return SimulateTask{t.at("t_end").positive()};
  }
  if (type == "resolve")
  {
    t.allow({"type", "q", "theta", "p_minus", "contacts", "restitution", "enumerate_depth"});
    ResolveTask r;
    if (auto q = t.find("q"))
    {
      r.q = q->vector(static_cast<std::size_t>(model.dim()));
    }
    else if (auto th = t.find("theta"))
    {
      const auto* b = dynamic_cast<const BilliardsModel*>(&model);
      if (!b)
      {
        th->fail("theta applies to billiards models only");
      }
      try
      {
        r.q = b->configuration(th->number());
      }
      catch (const std::out_of_range& e)
      {
        th->fail(e.what());
      }
    }
    else
    {
      r.q = default_impact_configuration(t, model);
    }
    r.p_minus = t.at("p_minus").vector(static_cast<std::size_t>(model.dim()));
    if (auto cs = t.find("contacts"))
    {
      r.contacts = contact_list(*cs, model);
      if (r.contacts.empty())
      {
        cs->fail("needs at least one contact");
      }
    }
    else
    {
      for (std::size_t i = 0; i < model.num_contacts(); ++i)
      {
        r.contacts.push_back(i);
      }
    }
    if (r.contacts.empty())
    {
      t.fail("model has no contacts to resolve");
    }
    const Eigen::VectorXd g = model.gaps(r.q);
    for (std::size_t c : r.contacts)
    {
      if (std::abs(g[static_cast<Eigen::Index>(c)]) > 1e-9 * model.length_scale())
      {
        t.fail("contact " + model.contact_name(c) + " is not closed at the impact configuration (gap " +
               format_number(g[static_cast<Eigen::Index>(c)]) + ")");
      }
    }
    if (auto v = t.find("restitution"))
    {
      r.restitution = v->number();
      if (!(r.restitution >= 0.0 && r.restitution <= 1.0))
      {
        v->fail("restitution must lie in [0, 1]");
      }
    }
    if (auto v = t.find("enumerate_depth"))
    {
      r.enumerate_depth = static_cast<int>(v->integer(1, 64));
    }
    return r;
  }
  if (type == "sweep")
  {
    t.allow({"type", "variable", "range", "samples", "cue_speed", "threads"});
    const auto* b = dynamic_cast<const BilliardsModel*>(&model);
    if (!b)
    {
      t.fail("sweep tasks need a billiards model");
    }
    if (t.at("variable").str() != "theta")
    {
      t.at("variable").fail("only 'theta' can be swept");
    }
    const auto range = t.at("range").items();
    if (range.size() != 2)
    {
      t.at("range").fail("expected [low, high]");
    }
    SweepTask s;
    s.theta_lo = range[0].number();
    s.theta_hi = range[1].number();
    if (!(s.theta_hi > s.theta_lo))
    {
      t.at("range").fail("high end must exceed low end");
    }
    if (s.theta_lo < b->min_theta())
    {
      range[0].fail("below the contact limit " + format_number(b->min_theta()) + " where disks a and b overlap");
    }
    if (s.theta_hi > std::numbers::pi * (1.0 + 1e-15))
    {
      range[1].fail("must not exceed pi");
    }
    if (auto v = t.find("samples")) s.samples = static_cast<std::size_t>(v->integer(1, 10000000));
    if (auto v = t.find("cue_speed")) s.cue_speed = v->positive();
    if (auto v = t.find("threads")) s.threads = static_cast<unsigned>(v->integer(0, 1024));
    return s;
  }
  if (type == "optimize")
  {
    t.allow({"type", "free", "starts", "initial", "theta", "max_iter", "inner_tol", "xi_samples"});
    OptimizeTask o;
    std::vector<std::string> names;
    if (cfg.model_type == "legtail")
    {
      names = {"x", "y", "theta", "ax", "ay", "bx", "by"};
    }
    else if (cfg.model_type == "billiards")
    {
      names = {"xa", "ya", "xb", "yb"};
    }
    else
    {
      t.fail("optimize tasks need a legtail or billiards model");
    }
    for (const Node& f : t.at("free").items())
    {
      const std::string n = f.str();
      if (std::find(names.begin(), names.end(), n) == names.end())
      {
        f.fail("unknown design variable '" + n + "'");
      }
      if (std::find(o.free.begin(), o.free.end(), n) != o.free.end())
      {
        f.fail("design variable listed twice");
      }
      o.free.push_back(n);
    }
    if (o.free.size() < 3)
    {
      t.at("free").fail("at least three free variables are needed");
    }
    if (auto v = t.find("starts")) o.starts = static_cast<std::size_t>(v->integer(1, 100000));
    if (auto v = t.find("initial")) o.initial = v->vector(names.size());
    if (auto v = t.find("theta"))
    {
      if (cfg.model_type != "billiards")
      {
        v->fail("theta applies to billiards models only");
      }
      o.theta = v->number();
    }
    if (auto v = t.find("max_iter")) o.max_iter = static_cast<int>(v->integer(1, 100000));
    if (auto v = t.find("inner_tol")) o.inner_tol = v->positive();
    if (auto v = t.find("xi_samples")) o.xi_samples = static_cast<std::size_t>(v->integer(1, 1000000));
    return o;
  }
  t.at("type").fail("unknown task type '" + type + "' (expected simulate, resolve, sweep or optimize)");
}

}  // namespace

CascadePolicy parse_policy(const std::string& text, const MechModel& model)
{
  if (text == "most-violating")
  {
    return CascadePolicy::most_violating();
  }
  if (text == "least-violating")
  {
    return CascadePolicy::least_violating();
  }
  if (text.rfind("fixed:", 0) == 0)
  {
    std::vector<std::size_t> order;
    std::stringstream ss(text.substr(6));
    std::string item;
    while (std::getline(ss, item, ','))
    {
      bool found = false;
      for (std::size_t i = 0; i < model.num_contacts(); ++i)
      {
        if (model.contact_name(i) == item)
        {
          order.push_back(i);
          found = true;
        }
      }
      if (!found)
      {
        try
        {
          std::size_t used = 0;
          const unsigned long v = std::stoul(item, &used);
          if (used != item.size() || v >= model.num_contacts())
          {
            throw std::invalid_argument(item);
          }
          order.push_back(v);
        }
        catch (const std::logic_error&)
        {
          throw std::invalid_argument("policy: '" + item + "' is neither a contact name nor a contact index");
        }
      }
    }
    if (order.empty())
    {
      throw std::invalid_argument("policy: fixed order needs at least one contact");
    }
    return CascadePolicy::fixed(order);
  }
  throw std::invalid_argument("policy must be most-violating, least-violating or fixed:<contacts>, got '" + text + "'");
}

AlphaMode parse_alpha_mode(const std::string& text)
{
  if (text == "energy-consistent" || text == "energy_consistent")
  {
    return AlphaMode::energy_consistent;
  }
  if (text == "as-printed" || text == "as_printed")
  {
    return AlphaMode::as_printed;
  }
  throw std::invalid_argument("alpha mode must be energy-consistent or as-printed, got '" + text + "'");
}

ScenarioConfig parse_config(const std::string& text, const std::string& source)
{
  json doc;
  try
  {
    doc = json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    // what() reads "[json.exception.parse_error.N] parse error at line L, column C: <reason>".
    const std::string what = e.what();
    const auto cut = what.find(": ", what.find("] "));
    throw ConfigError(source + ": " + line_column(text, e.byte),
                      "JSON syntax error" + (cut == std::string::npos ? "" : ": " + what.substr(cut + 2)));
  }

  ScenarioConfig cfg;
  cfg.source = source;
  cfg.sha256 = sha256_hex(text);
  const Node root(doc, "");
  root.allow({"name", "seed", "model", "initial", "stepper", "policy", "alpha_mode", "task", "output"});
  cfg.name = root.has("name") ? root.at("name").str() : "scenario";
  if (auto s = root.find("seed"))
  {
    cfg.seed = static_cast<std::uint64_t>(s->integer(0, std::numeric_limits<long long>::max()));
  }
  cfg.model = parse_model(root.at("model"), cfg.model_type);
  const MechModel& model = *cfg.model;

  if (auto p = root.find("policy"))
  {
    cfg.policy = p->str();
    try
    {
      parse_policy(cfg.policy, model);
    }
    catch (const std::invalid_argument& e)
    {
      p->fail(e.what());
    }
  }
  if (auto a = root.find("alpha_mode"))
  {
    cfg.alpha_mode = a->str();
    try
    {
      parse_alpha_mode(cfg.alpha_mode);
    }
    catch (const std::invalid_argument& e)
    {
      a->fail(e.what());
    }
  }

  cfg.stepper = root.has("stepper") ? parse_stepper(root.at("stepper"), model) : StepperConfig{};

  if (auto init = root.find("initial"))
  {
    init->allow({"q", "qdot", "theta", "t0"});
    if (auto q = init->find("q"))
    {
      cfg.q0 = q->vector(static_cast<std::size_t>(model.dim()));
    }
    else if (auto th = init->find("theta"))
    {
      const auto* b = dynamic_cast<const BilliardsModel*>(&model);
      if (!b)
      {
        th->fail("theta applies to billiards models only");
      }
      cfg.q0 = b->configuration(th->number());
    }
    else
    {
      init->at("q");
    }
    cfg.qdot0 = init->has("qdot") ? init->at("qdot").vector(static_cast<std::size_t>(model.dim()))
                                  : Eigen::VectorXd::Zero(model.dim());
    if (auto t0 = init->find("t0"))
    {
      cfg.t0 = t0->number();
    }
    const Eigen::VectorXd g = model.gaps(cfg.q0);
    for (Eigen::Index i = 0; i < g.size(); ++i)
    {
      if (g[i] < -1e-9 * model.length_scale())
      {
        init->fail("contact " + model.contact_name(static_cast<std::size_t>(i)) +
                   " penetrates in the initial configuration (gap " + format_number(g[i]) + ")");
      }
    }
    if (const auto* b = dynamic_cast<const BilliardsModel*>(&model))
    {
      try
      {
        billiards_build(b->masses(), b->radii(), cfg.q0);
      }
      catch (const std::invalid_argument& e)
      {
        init->fail(e.what());
      }
    }
  }

  cfg.task = parse_task(root.at("task"), cfg);
  if (std::holds_alternative<SimulateTask>(cfg.task) && cfg.q0.size() == 0)
  {
    root.at("initial");
  }
  if (auto out = root.find("output"))
  {
    out->allow({"dir"});
    cfg.out_dir = out->at("dir").str();
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw OutputError("cannot read config file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.filename().string());
}

int exit_code_for(const std::exception& error)
{
  if (dynamic_cast<const ConfigError*>(&error))
  {
    return exit_config;
  }
  if (dynamic_cast<const OutputError*>(&error))
  {
    return exit_io;
  }
  return exit_task;
}

namespace
{

class CsvFile
{
public:
  CsvFile(const std::filesystem::path& path, const std::vector<std::string>& header_lines,
          const std::vector<std::string>& columns)
    : path_(path), out_(path, std::ios::binary)
  {
    if (!out_)
    {
      throw OutputError("cannot write " + path.string());
    }
    for (const auto& h : header_lines)
    {
      out_ << "# " << h << "\n";
    }
    row(columns);
  }

  void row(const std::vector<std::string>& fields)
  {
    for (std::size_t i = 0; i < fields.size(); ++i)
    {
      out_ << (i ? "," : "") << fields[i];
    }
    out_ << "\n";
    if (!out_)
    {
      throw OutputError("write failed on " + path_.string());
    }
  }

private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::string join_names(const MechModel& model, const std::vector<std::size_t>& idx)
{
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i)
  {
    s += (i ? ";" : "") + model.contact_name(idx[i]);
  }
  return s;
}

std::string join_numbers(const Eigen::VectorXd& v)
{
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i)
  {
    s += (i ? ";" : "") + format_number(v[i]);
  }
  return s;
}

const char* kind_name(ImpactKind k)
{
  switch (k)
  {
    case ImpactKind::elastic: return "elastic";
    case ImpactKind::plastic: return "plastic";
    case ImpactKind::inelastic: return "inelastic";
  }
  return "?";
}

const char* class_name(PairClass c)
{
  switch (c)
  {
    case PairClass::orthogonal: return "orthogonal";
    case PairClass::three_stage: return "three_stage";
    case PairClass::indeterminate: return "indeterminate";
  }
  return "?";
}

struct Context
{
  const ScenarioConfig& cfg;
  std::filesystem::path dir;
  std::vector<std::string> header;
  CascadePolicy policy;
  AlphaMode alpha;
  std::string policy_text;
  std::uint64_t seed;
  RunResult result;

  std::filesystem::path file(const std::string& name)
  {
    const auto p = dir / (cfg.name + "_" + name);
    result.files.push_back(p);
    return p;
  }

  void write_text(const std::string& name, const std::string& body)
  {
    const auto p = file(name);
    std::ofstream out(p, std::ios::binary);
    for (const auto& h : header)
    {
      out << "# " << h << "\n";
    }
    out << body;
    if (!out)
    {
      throw OutputError("cannot write " + p.string());
    }
  }
};

std::vector<std::string> qp_columns(const MechModel& model, const char* a, const char* b)
{
  std::vector<std::string> cols;
  for (Eigen::Index i = 0; i < model.dim(); ++i)
  {
    cols.push_back(std::string(a) + std::to_string(i + 1));
  }
  for (Eigen::Index i = 0; i < model.dim(); ++i)
  {
    cols.push_back(std::string(b) + std::to_string(i + 1));
  }
  return cols;
}

void run_simulate(Context& ctx, const SimulateTask& task)
{
  const MechModel& model = *ctx.cfg.model;
  StepperConfig sc = ctx.cfg.stepper;
  const double band = sc.policy.dead_band;
  sc.policy = ctx.policy;
  sc.policy.dead_band = band;
  sc.alpha_mode = ctx.alpha;
  VariationalStepper stepper(model, sc);
  const Trajectory traj = stepper.simulate(ctx.cfg.q0, ctx.cfg.qdot0, ctx.cfg.t0, ctx.cfg.t0 + task.t_end);

  std::vector<std::string> cols{"t"};
  for (auto& c : qp_columns(model, "q", "p"))
  {
    cols.push_back(c);
  }
  for (const char* c : {"energy", "event", "held"})
  {
    cols.push_back(c);
  }
  CsvFile tr(ctx.file("trajectory.csv"), ctx.header, cols);
  for (const Sample& s : traj.samples)
  {
    std::vector<std::string> row{format_number(s.t)};
    for (Eigen::Index i = 0; i < s.q.size(); ++i)
    {
      row.push_back(format_number(s.q[i]));
    }
    for (Eigen::Index i = 0; i < s.p.size(); ++i)
    {
      row.push_back(format_number(s.p[i]));
    }
    row.push_back(format_number(model.total_energy(s.q, s.p)));
    row.push_back(s.event ? "1" : "0");
    row.push_back(join_names(model, s.held));
    tr.row(row);
  }

  CsvFile ev(ctx.file("events.csv"), ctx.header,
             {"t", "contacts", "colliding", "kind", "restitution", "sequence", "impulses", "kinetic_before",
              "kinetic_after", "forced_plastic", "cap_fallback"});
  for (const ImpactEvent& e : traj.events)
  {
    std::vector<std::size_t> seq;
    for (std::size_t k : e.sequence)
    {
      seq.push_back(e.contacts[k]);
    }
    ev.row({format_number(e.t), join_names(model, e.contacts), join_names(model, e.colliding), kind_name(e.kind),
            format_number(e.restitution), join_names(model, seq), join_numbers(e.impulses),
            format_number(e.kinetic_before), format_number(e.kinetic_after), e.forced_plastic ? "1" : "0",
            e.cap_fallback ? "1" : "0"});
  }

  CsvFile rel(ctx.file("releases.csv"), ctx.header, {"t", "contact", "multiplier"});
  for (const ReleaseEvent& r : traj.releases)
  {
    rel.row({format_number(r.t), model.contact_name(r.contact), format_number(r.multiplier)});
  }

  const EnergyReport rep = report_energy(model, traj);
  CsvFile en(ctx.file("energy.csv"), ctx.header,
             {"t", "before", "after", "delta", "cumulative", "cumulative_fraction", "gain"});
  for (const EnergyEntry& e : rep.entries)
  {
    en.row({format_number(e.t), format_number(e.before), format_number(e.after), format_number(e.delta),
            format_number(e.cumulative), format_number(e.cumulative_fraction), e.gain ? "1" : "0"});
  }

  std::ostringstream sum;
  sum << "samples " << traj.samples.size() << "\n";
  sum << "events " << traj.events.size() << "\n";
  sum << "releases " << traj.releases.size() << "\n";
  sum << "initial_energy " << format_number(rep.initial) << "\n";
  sum << "impact_energy_delta " << format_number(rep.cumulative) << "\n";
  sum << "impact_energy_fraction " << format_number(rep.cumulative_fraction) << "\n";
  sum << "energy_gain " << (rep.gain_detected ? "yes" : "no") << "\n";
  ctx.write_text("summary.txt", sum.str());
  ctx.result.summary = sum.str();
  if (rep.gain_detected)
  {
    ctx.result.exit_code = exit_energy_gain;
  }
}

void run_resolve(Context& ctx, const ResolveTask& task)
{
  const MechModel& model = *ctx.cfg.model;
  const KineticMetric metric = metric_at(model, task.q);
  const std::vector<Covector> normals = contact_normals(model, task.q, task.contacts);
  const Covector p(task.p_minus);

  // Policy indices refer to model contacts; remap onto the participating subset.
  CascadePolicy policy = ctx.policy;
  if (auto* fixed = std::get_if<FixedOrder>(&policy.rule))
  {
    std::vector<std::size_t> local;
    for (std::size_t c : fixed->order)
    {
      const auto it = std::find(task.contacts.begin(), task.contacts.end(), c);
      if (it != task.contacts.end())
      {
        local.push_back(static_cast<std::size_t>(it - task.contacts.begin()));
      }
    }
    fixed->order = local;
  }
  policy.dead_band = ctx.cfg.stepper.policy.dead_band;

  const ImpactOutcome out = inelastic_resolve(metric, p, normals, task.restitution, policy, ctx.alpha);
  std::vector<std::size_t> seq;
  for (std::size_t k : out.sequence)
  {
    seq.push_back(task.contacts[k]);
  }
  const double e0 = model.kinetic_energy(task.q, p.values());
  const double e1 = model.kinetic_energy(task.q, out.p_plus.values());

  std::vector<std::string> cols{"policy", "alpha_mode", "restitution", "status", "kind", "sequence"};
  for (Eigen::Index i = 0; i < model.dim(); ++i)
  {
    cols.push_back("p_plus" + std::to_string(i + 1));
  }
  for (const char* c : {"energy_before", "energy_after", "energy_delta", "impulses"})
  {
    cols.push_back(c);
  }
  CsvFile oc(ctx.file("outcome.csv"), ctx.header, cols);
  std::vector<std::string> row{ctx.policy_text, ctx.alpha == AlphaMode::energy_consistent ? "energy-consistent" : "as-printed",
                               format_number(task.restitution),
                               out.status == CascadeStatus::converged ? "converged" : "step_cap_exceeded",
                               kind_name(out.kind), join_names(model, seq)};
  for (Eigen::Index i = 0; i < out.p_plus.size(); ++i)
  {
    row.push_back(format_number(out.p_plus[i]));
  }
  row.push_back(format_number(e0));
  row.push_back(format_number(e1));
  row.push_back(format_number(e1 - e0));
  row.push_back(join_numbers(out.net_impulse));
  oc.row(row);

  const OutcomeSet set = enumerate_outcomes(metric, p, normals, task.enumerate_depth, policy.dead_band);
  std::vector<std::string> ecols{"index", "sequence"};
  for (Eigen::Index i = 0; i < model.dim(); ++i)
  {
    ecols.push_back("p_plus" + std::to_string(i + 1));
  }
  ecols.push_back("distance_to_first");
  CsvFile en(ctx.file("outcomes.csv"), ctx.header, ecols);
  for (std::size_t k = 0; k < set.outcomes.size(); ++k)
  {
    const ImpactOutcome& o = set.outcomes[k];
    std::vector<std::size_t> s;
    for (std::size_t j : o.sequence)
    {
      s.push_back(task.contacts[j]);
    }
    std::vector<std::string> r{std::to_string(k), join_names(model, s)};
    for (Eigen::Index i = 0; i < o.p_plus.size(); ++i)
    {
      r.push_back(format_number(o.p_plus[i]));
    }
    const double pn = norm(metric, p);
    r.push_back(format_number(pn > 0 ? norm(metric, o.p_plus - set.outcomes.front().p_plus) / pn : 0.0));
    en.row(r);
  }

  std::ostringstream sum;
  sum << "status " << (out.status == CascadeStatus::converged ? "converged" : "step_cap_exceeded") << "\n";
  sum << "sequence " << join_names(model, seq) << "\n";
  sum << "energy_delta " << format_number(e1 - e0) << "\n";
  sum << "distinct_outcomes " << set.outcomes.size() << "\n";
  sum << "enumeration_truncated " << (set.truncated ? "yes" : "no") << " (" << set.truncated_branches
      << " branches)\n";
  for (std::size_t i = 0; i < normals.size(); ++i)
  {
    for (std::size_t j = i + 1; j < normals.size(); ++j)
    {
      const PairClassification pc = classify_pair(metric, normals[i], normals[j]);
      sum << "pair " << model.contact_name(task.contacts[i]) << "," << model.contact_name(task.contacts[j])
          << " inner " << format_number(pc.inner_value) << " class " << class_name(pc.cls) << "\n";
    }
  }
  if (normals.size() == 2)
  {
    sum << "xi " << format_number(indeterminacy_xi(metric, p, normals[0], normals[1], policy.dead_band)) << "\n";
  }
  else if (normals.size() > 2)
  {
    const OutcomeSpread spread = outcome_spread(metric, set, p);
    sum << "extension pairwise_outcome_spread max " << format_number(spread.max) << " mean "
        << format_number(spread.mean) << " pairs " << spread.pairs << "\n";
  }
  const bool gain = e1 - e0 > kEnergyGainTolerance * e0;
  sum << "energy_gain " << (gain ? "yes" : "no") << "\n";
  ctx.write_text("summary.txt", sum.str());
  ctx.result.summary = sum.str();
  if (gain)
  {
    ctx.result.exit_code = exit_energy_gain;
  }
}

void run_sweep(Context& ctx, const SweepTask& task)
{
  const auto& model = dynamic_cast<const BilliardsModel&>(*ctx.cfg.model);
  const auto points = theta_sweep(model, task.theta_lo, task.theta_hi, task.samples, task.cue_speed, task.threads);
  CsvFile out(ctx.file("sweep.csv"), ctx.header, {"index", "theta", "inner", "xi"});
  double xi_max = 0.0;
  double theta_at_max = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
  {
    out.row({std::to_string(i), format_number(points[i].theta), format_number(points[i].inner),
             format_number(points[i].xi)});
    if (points[i].xi > xi_max)
    {
      xi_max = points[i].xi;
      theta_at_max = points[i].theta;
    }
  }
  std::ostringstream sum;
  sum << "samples " << points.size() << "\n";
  sum << "contact_limit " << format_number(model.min_theta()) << "\n";
  sum << "xi_max " << format_number(xi_max) << " at theta " << format_number(theta_at_max) << "\n";
  ctx.write_text("summary.txt", sum.str());
  ctx.result.summary = sum.str();
}

// Unit-norm random momenta, flipped when needed so at least one contact is infeasible.
double max_xi(const KineticMetric& metric, const Covector& u, const Covector& v, std::size_t samples,
              std::mt19937_64& rng)
{
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  const Covector pair[] = {u, v};
  for (std::size_t s = 0; s < samples; ++s)
  {
    Eigen::VectorXd x(metric.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
      x[i] = gauss(rng);
    }
    Covector p(x);
    if (all_feasible(metric, p, pair))
    {
      p = -p;
    }
    worst = std::max(worst, indeterminacy_xi(metric, p, u, v));
  }
  return worst;
}

void run_optimize(Context& ctx, const OptimizeTask& task)
{
  std::unique_ptr<DesignFamily> family;
  std::unique_ptr<LegTailFamily> legtail;
  if (const auto* lt = dynamic_cast<const LegTailModel*>(ctx.cfg.model.get()))
  {
    family = std::make_unique<LegTailFamily>(lt->params().mass, lt->params().inertia, lt->params().gravity);
  }
  else
  {
    const auto& b = dynamic_cast<const BilliardsModel&>(*ctx.cfg.model);
    family = std::make_unique<BilliardsFamily>(b.masses(), b.radii());
  }

  DesignProblem problem;
  problem.family = family.get();
  problem.max_iter = task.max_iter;
  problem.inner_tol = task.inner_tol;
  const auto names = family->variable_names();
  problem.free.assign(names.size(), false);
  for (const auto& f : task.free)
  {
    problem.free[static_cast<std::size_t>(std::find(names.begin(), names.end(), f) - names.begin())] = true;
  }

  std::mt19937_64 rng(ctx.seed);
  std::vector<std::string> cols{"start", "iterations", "inner_initial", "inner_final", "gap_a_final", "gap_b_final",
                                "displacement", "xi_max", "two_step_commutator_max"};
  for (const auto& n : names)
  {
    cols.push_back(n);
  }
  CsvFile out(ctx.file("optimize.csv"), ctx.header, cols);
  std::ostringstream report;
  for (std::size_t s = 0; s < task.starts; ++s)
  {
    Eigen::VectorXd x0;
    if (s == 0 && task.initial)
    {
      x0 = *task.initial;
    }
    else if (const auto* ltf = dynamic_cast<const LegTailFamily*>(family.get()))
    {
      if (s == 0)
      {
        const auto& lt = dynamic_cast<const LegTailModel&>(*ctx.cfg.model);
        const auto pose = lt.double_contact_pose();
        if (!pose)
        {
          throw std::invalid_argument("optimize: contact offsets admit no double-contact pose");
        }
        x0 = LegTailFamily::pack(lt.params(), *pose);
      }
      else
      {
        x0 = ltf->random_start(rng);
      }
    }
    else
    {
      const auto* bf = dynamic_cast<const BilliardsFamily*>(family.get());
      std::uniform_real_distribution<double> angle(bf->model().min_theta() + 0.05, std::numbers::pi - 0.05);
      x0 = bf->start(s == 0 && task.theta ? *task.theta : angle(rng));
    }

    const DesignResult res = solve_orthogonal(problem, x0);
    const auto model = family->build(res.solution);
    const Eigen::VectorXd q = family->configuration(res.solution);
    const KineticMetric metric = metric_at(*model, q);
    const auto normals = contact_normals(*model, q);
    const double xi = max_xi(metric, normals[0], normals[1], task.xi_samples, rng);
    const CommutationReport comm = verify_commutation(metric, normals[0], normals[1], 64, ctx.seed + s);

    std::vector<std::string> row{std::to_string(s),
                                 std::to_string(res.iterations),
                                 format_number(res.initial_residual[2]),
                                 format_number(res.final_residual[2]),
                                 format_number(res.final_residual[0]),
                                 format_number(res.final_residual[1]),
                                 format_number(res.displacement),
                                 format_number(xi),
                                 format_number(comm.max_two_step)};
    for (Eigen::Index i = 0; i < res.solution.size(); ++i)
    {
      row.push_back(format_number(res.solution[i]));
    }
    out.row(row);
    report << "start " << s << "\n" << format_report(problem, res) << "xi_max " << format_number(xi) << "\n\n";
  }
  ctx.write_text("report.txt", report.str());
  ctx.result.summary = report.str();
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const RunOverrides& overrides)
{
  Context ctx{config, overrides.out_dir.value_or(config.out_dir), {}, {}, {}, {}, 0, {}};
  ctx.policy_text = overrides.policy.value_or(config.policy);
  const std::string alpha_text = overrides.alpha_mode.value_or(config.alpha_mode);
  ctx.seed = overrides.seed.value_or(config.seed);
  try
  {
    ctx.policy = parse_policy(ctx.policy_text, *config.model);
    ctx.alpha = parse_alpha_mode(alpha_text);
  }
  catch (const std::invalid_argument& e)
  {
    throw ConfigError("overrides", e.what());
  }

  std::error_code ec;
  std::filesystem::create_directories(ctx.dir, ec);
  if (ec)
  {
    throw OutputError("cannot create output directory " + ctx.dir.string() + ": " + ec.message());
  }
  ctx.header = {std::string("simpact ") + SIMPACT_VERSION,
                "scenario " + config.name,
                "config_sha256 " + config.sha256,
                "seed " + std::to_string(ctx.seed),
                "policy " + ctx.policy_text,
                "alpha_mode " + alpha_text};

  std::visit(
      [&](const auto& task) {
        using T = std::decay_t<decltype(task)>;
        if constexpr (std::is_same_v<T, SimulateTask>)
        {
          run_simulate(ctx, task);
        }
        else if constexpr (std::is_same_v<T, ResolveTask>)
        {
          run_resolve(ctx, task);
        }
        else if constexpr (std::is_same_v<T, SweepTask>)
        {
          run_sweep(ctx, task);
        }
        else
        {
          run_optimize(ctx, task);
        }
      },
      config.task);
  return ctx.result;
}

}  // namespace simpact

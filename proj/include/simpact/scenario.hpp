#pragma once

// JSON scenario files: parsing, validation, execution and CSV output.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "simpact/impact.hpp"
#include "simpact/model.hpp"
#include "simpact/stepper.hpp"

namespace simpact
{

enum ExitCode : int
{
  exit_ok = 0,
  exit_usage = 1,
  exit_config = 2,
  exit_task = 3,
  exit_io = 4,
  exit_energy_gain = 5
};

/// Malformed or invalid configuration. `where()` is "line L, column C" for
/// syntax errors and a field path such as "model.masses[1]" otherwise.
class ConfigError : public std::runtime_error
{
public:
  ConfigError(const std::string& where, const std::string& what)
    : std::runtime_error(where + ": " + what), where_(where)
  {
  }
  const std::string& where() const noexcept { return where_; }

private:
  std::string where_;
};

class OutputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct SimulateTask
{
  double t_end = 1.0;
};

struct ResolveTask
{
  Eigen::VectorXd q;                 ///< impact configuration
  Eigen::VectorXd p_minus;
  std::vector<std::size_t> contacts; ///< participating contacts, ascending
  double restitution = 1.0;
  int enumerate_depth = 32;
};

struct SweepTask
{
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  std::size_t samples = 200;
  double cue_speed = 1.0;
  unsigned threads = 0;
};

struct OptimizeTask
{
  std::vector<std::string> free;
  std::size_t starts = 1;
  std::optional<Eigen::VectorXd> initial; ///< used for the first start when given
  std::optional<double> theta;            ///< billiards starting angle
  int max_iter = 200;
  double inner_tol = 1e-6;
  std::size_t xi_samples = 100;
};

using ScenarioTask = std::variant<SimulateTask, ResolveTask, SweepTask, OptimizeTask>;

struct ScenarioConfig
{
  std::string name;
  std::string source;   ///< file name used in diagnostics
  std::string sha256;   ///< of the raw config bytes
  std::uint64_t seed = 0;
  std::string model_type;
  std::shared_ptr<const MechModel> model;
  Eigen::VectorXd q0;
  Eigen::VectorXd qdot0;
  double t0 = 0.0;
  StepperConfig stepper;
  std::string policy = "most-violating";
  std::string alpha_mode = "energy-consistent";
  ScenarioTask task;
  std::filesystem::path out_dir = "out";
};

ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
/// Throws OutputError when the file cannot be read.
ScenarioConfig load_config(const std::filesystem::path& path);

/// "most-violating", "least-violating" or "fixed:<i>,<j>,..." where entries
/// are contact indices or contact names.
CascadePolicy parse_policy(const std::string& text, const MechModel& model);
AlphaMode parse_alpha_mode(const std::string& text);

struct RunOverrides
{
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<std::string> alpha_mode;
};

struct RunResult
{
  int exit_code = exit_ok;
  std::vector<std::filesystem::path> files;
  std::string summary;
};

/// Executes the task and writes its files. Module errors propagate as
/// exceptions; energy gain is reported through exit_energy_gain.
RunResult run_scenario(const ScenarioConfig& config, const RunOverrides& overrides = {});

/// Maps an exception from parsing or running to its exit code.
int exit_code_for(const std::exception& error);

/// %.17g, the format used for every CSV number.
std::string format_number(double value);

std::string sha256_hex(const std::string& bytes);

}  // namespace simpact

// simpact: run a JSON scenario and write its CSV outputs.

#include <CLI11.hpp>

#include <iostream>

#include "simpact/errors.hpp"
#include "simpact/scenario.hpp"

int main(int argc, char** argv)
{
  CLI::App app{"Multi-contact impact simulation and design"};
  app.set_version_flag("--version", std::string("simpact ") + SIMPACT_VERSION);
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario file");
  std::string config_path;
  simpact::RunOverrides overrides;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string policy;
  std::string alpha;
  run->add_option("config", config_path, "Scenario JSON file")->required();
  auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  auto* seed_opt = run->add_option("--seed", seed, "Random seed (overrides seed)");
  auto* policy_opt = run->add_option("--policy", policy, "most-violating, least-violating or fixed:<contacts>");
  auto* alpha_opt = run->add_option("--alpha-mode", alpha, "energy-consistent or as-printed");

  auto* check = app.add_subcommand("check", "Parse and validate a scenario without running it");
  std::string check_path;
  check->add_option("config", check_path, "Scenario JSON file")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : simpact::exit_usage;
  }

  try
  {
    if (*check)
    {
      const auto cfg = simpact::load_config(check_path);
      std::cout << cfg.name << ": ok\n";
      return simpact::exit_ok;
    }
    if (*out_opt) overrides.out_dir = out_dir;
    if (*seed_opt) overrides.seed = seed;
    if (*policy_opt) overrides.policy = policy;
    if (*alpha_opt) overrides.alpha_mode = alpha;

    const auto cfg = simpact::load_config(config_path);
    const auto result = simpact::run_scenario(cfg, overrides);
    std::cout << result.summary;
    for (const auto& f : result.files)
    {
      std::cout << "wrote " << f.string() << "\n";
    }
    if (result.exit_code == simpact::exit_energy_gain)
    {
      std::cerr << "error: energy gain detected at an impact\n";
    }
    return result.exit_code;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return simpact::exit_code_for(e);
  }
}

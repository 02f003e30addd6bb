#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "epinet/scenario.hpp"

namespace {

struct CommandArgs {
  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_command(CLI::App& app, const std::string& name, const std::string& help,
                 CommandArgs& args, std::string& chosen) {
  CLI::App* cmd = app.add_subcommand(name, help);
  cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the scenario seed");
  cmd->add_flag("--quiet", args.quiet, "suppress stdout");
  cmd->callback([&chosen, name] { chosen = name; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "epinet: epidemic spreading on networks - simulation, thresholds, "
      "allocation and control"};
  app.require_subcommand(1);

  CommandArgs args;
  std::string chosen;
  add_command(app, "threshold", "spectral threshold and extinction-time bound",
              args, chosen);
  add_command(app, "simulate", "exact stochastic simulation and extinction times",
              args, chosen);
  add_command(app, "meanfield", "deterministic ODE trajectories and equilibria",
              args, chosen);
  add_command(app, "allocate", "budget-constrained rate allocation (GP)", args,
              chosen);
  add_command(app, "optctrl", "optimal-control solvers (forward-backward sweep)",
              args, chosen);
  add_command(app, "compare", "mean-field vs exact vs sampled marginals", args,
              chosen);

  CLI11_PARSE(app, argc, argv);

  std::ifstream in(args.scenario_path);
  std::ostringstream buffer;
  buffer << in.rdbuf();

  try {
    epinet::RunReport report =
        epinet::run_scenario(buffer.str(), args.out_dir, args.seed, chosen);
    if (!args.quiet) {
      std::cout << report.headline;
      std::cout << "outputs in " << args.out_dir << ":";
      for (const auto& f : report.outputs) std::cout << " " << f;
      std::cout << "\nwall clock: " << report.wall_clock_seconds << " s\n";
    }
    return 0;
  } catch (const epinet::ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

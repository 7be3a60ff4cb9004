#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "embedhom/app.hpp"
#include "embedhom/error.hpp"

using namespace embedhom;

int main(int argc, char** argv) {
  CLI::App cli{"Embedded corrector estimators of homogenized diffusion matrices"};
  cli.require_subcommand(1);

  std::string config_path;
  app::CommandOptions opts;
  std::string output;

  auto* estimate = cli.add_subcommand("estimate", "Run a convergence study and write the CSV table");
  auto* compare = cli.add_subcommand("compare-supercell", "Embedded estimates next to the periodic supercell baseline");
  for (auto* sub : {estimate, compare}) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--jobs", opts.jobs, "Parallel study rows")->check(CLI::PositiveNumber);
    sub->add_option("--output", output, "CSV path (overrides output_path)");
    sub->add_flag("--timings", opts.timings, "Write wall_seconds into the CSV");
  }
  estimate->add_flag("--oracle-check", opts.oracle_check, "Compare 1D rows with the closed-form oracle");

  auto* selfcheck = cli.add_subcommand("selfcheck", "Run the built-in invariant checks");
  bool list = false;
  selfcheck->add_flag("--list", list, "Print the check names without running them");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? 0 : 1;
  }

  if (*selfcheck) {
    if (list) {
      for (const auto& c : app::selfcheck_list()) std::cout << c.name << "  " << c.description << "\n";
      return 0;
    }
    double tol = 1e-10;
    if (const char* env = std::getenv("EMBEDHOM_TOL")) {
      try {
        tol = std::stod(env);
      } catch (const std::exception&) {
        std::cerr << "error: EMBEDHOM_TOL is not a number\n";
        return 1;
      }
    }
    return app::cmd_selfcheck(tol, std::cout);
  }

  if (!output.empty()) opts.output = output;
  app::RunConfig cfg;
  try {
    cfg = app::load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (*estimate) return app::cmd_estimate(cfg, opts, std::cout, std::cerr);
  return app::cmd_compare_supercell(cfg, opts, std::cout, std::cerr);
}

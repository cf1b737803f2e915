#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"

int main(int argc, char** argv) {
  using namespace labvar::cli;

  CLI::App app{"Variational shallow-water toolkit on particle labels"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  int levels = 3;
  bool show_config = false;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "configuration file (see derive --show-config)");
    c->add_option("--out", out_dir, "output directory (overrides [output] directory)");
    c->add_option("--seed", seed, "override the mesh-jitter and sampling seed");
    c->add_flag("--quiet", quiet, "suppress progress output and expression dumps");
  };

  CLI::App* derive = app.add_subcommand(
      "derive", "print the density, variational equations, conserved currents, "
                "and invariance residuals");
  add_common(derive);
  derive->add_flag("--show-config", show_config,
                   "print the annotated default configuration and exit");

  CLI::App* check = app.add_subcommand(
      "check", "verify the symbolic identities of the configured model");
  add_common(check);

  CLI::App* run = app.add_subcommand(
      "run", "march the configured problem and write conservation diagnostics");
  add_common(run);

  CLI::App* converge = app.add_subcommand(
      "converge", "refinement study of the weak vorticity-law residual");
  add_common(converge);
  converge->add_option("--levels", levels,
                       "number of uniform space-time refinement levels (>= 3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are configuration errors
  }

  try {
    if (derive->parsed() && show_config) {
      print_default_config(std::cout);
      return 0;
    }
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);

    CommonFlags fl;
    fl.out_dir = out_dir;
    fl.quiet = quiet;
    fl.levels = levels;
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) {
      fl.has_seed = true;
      fl.seed = seed;
    }

    if (derive->parsed()) return cmd_derive(cfg, fl);
    if (check->parsed()) return cmd_check(cfg, fl);
    if (run->parsed()) return cmd_run(cfg, fl);
    return cmd_converge(cfg, fl);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

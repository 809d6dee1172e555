/// @file main.cpp
/// @brief Command-line entry point: loads a JSON run configuration, applies
///        dot-path overrides, and dispatches to the requested experiment.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kfsi/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Vanishing-viscosity laboratory for a rigid disk falling in a box"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "JSON configuration file")->required();
  app.add_option("--set", sets,
                 "Override a configuration entry as path.to.key=value (repeatable)");

  app.add_subcommand("simulate", "One solver run; the configured mode picks ns, euler, "
                                 "or frozen_body")
      ->fallthrough();
  app.add_subcommand("sweep", "Viscosity sweep with a shared inviscid reference and a "
                              "diagnostics report")
      ->fallthrough();
  app.add_subcommand("diagnose", "Recompute the diagnostics report from stored sweep "
                                 "archives")
      ->fallthrough();
  app.add_subcommand("corrector", "Strip-corrector family norms and viscosity scalings")
      ->fallthrough();
  app.add_subcommand("identities", "Randomized integration-by-parts identity suite")
      ->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<std::string> overrides = sets;
    for (const char* sub : {"sweep", "diagnose", "corrector", "identities"})
      if (app.got_subcommand(sub)) overrides.push_back(std::string("mode=") + sub);
    kfsi::RunConfig cfg = kfsi::load_config_file(config_path, overrides);
    if (app.got_subcommand("simulate") && cfg.mode != kfsi::RunMode::ns &&
        cfg.mode != kfsi::RunMode::euler && cfg.mode != kfsi::RunMode::frozen_body) {
      std::fprintf(stderr,
                   "simulate requires mode ns, euler, or frozen_body; got %s "
                   "(use --set mode=ns)\n",
                   kfsi::to_string(cfg.mode).c_str());
      return 1;
    }
    return kfsi::run_mode(cfg);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

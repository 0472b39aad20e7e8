#include <CLI11.hpp>

#include "popdyn/harness.hpp"

namespace popdyn {

int cli_main(int argc, char** argv) {
  CLI::App app{"popdyn: finite-population game dynamics simulator and verifier"};
  app.require_subcommand(1);

  struct SubArgs {
    std::string config;
    CliOverrides overrides;
  };
  auto add_common = [](CLI::App* sub, SubArgs& args) {
    sub->add_option("config", args.config, "JSON config file")->required();
    sub->add_option("--out", args.overrides.out, "override output directory");
    sub->add_option("--jobs", args.overrides.jobs, "worker pool size (0 = hardware)");
    sub->add_option("--seed-override", args.overrides.seed, "replace the seeds list");
  };

  SubArgs run_args, sweep_args, verify_args;
  CLI::App* run = app.add_subcommand("run", "execute a finite/meanfield/equilibrium/stationary config");
  add_common(run, run_args);
  CLI::App* sweep = app.add_subcommand("sweep", "execute a parameter sweep config");
  add_common(sweep, sweep_args);
  CLI::App* verify = app.add_subcommand("verify", "run the passivity/stationary verification suites");
  add_common(verify, verify_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (run->parsed())
    return run_config_file(run_args.config, run_args.overrides,
                           {Mode::kFinite, Mode::kMeanfield, Mode::kEquilibrium,
                            Mode::kStationary});
  if (sweep->parsed())
    return run_config_file(sweep_args.config, sweep_args.overrides, {Mode::kSweep});
  return run_config_file(verify_args.config, verify_args.overrides,
                         {Mode::kVerifyBound, Mode::kStationary});
}

}  // namespace popdyn

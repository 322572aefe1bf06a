// openchain: validate, analyze, simulate and reproduce the figure data of
// open Markov chain models. See README.md for the config format.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "openchain/app.hpp"

namespace {

void add_common(CLI::App* cmd, openchain::CommandOptions& opts, bool needs_config) {
  auto* config = cmd->add_option("--config", opts.config, "experiment config (JSON, schema openchain/v1)");
  if (needs_config) config->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "RNG seed, overrides run.seed");
  cmd->add_option("--out", opts.out, "output directory, overrides output.directory");
  cmd->add_option("--lags", opts.lags, "comma-separated lag list, overrides run.lags")->delimiter(',');
  cmd->add_option("--tol", opts.tol, "absolute tolerance accepted by comparisons");
  cmd->add_option("--horizon", opts.horizon, "number of simulated steps");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"open Markov chain simulator and analytics"};
  app.require_subcommand(1);
  openchain::CommandOptions opts;
  std::string figure;

  auto* validate = app.add_subcommand("validate", "check a model and print its structural diagnostics");
  auto* analyze = app.add_subcommand("analyze", "write stationary analytics (JSON and CSV)");
  auto* simulate = app.add_subcommand("simulate", "simulate, summarize and compare against analytics");
  auto* diagnose = app.add_subcommand("diagnose", "lag-covariance diagnostic under any stationary protocol");
  auto* fig = app.add_subcommand("figure", "write plot-ready data for fig4 or fig5");
  for (auto* cmd : {validate, analyze, simulate, diagnose}) add_common(cmd, opts, true);
  add_common(fig, opts, false);
  fig->add_option("name", figure, "fig4 or fig5")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : openchain::kExitUsage;
  }

  if (*validate) return openchain::cmd_validate(opts, std::cout, std::cerr);
  if (*analyze) return openchain::cmd_analyze(opts, std::cout, std::cerr);
  if (*simulate) return openchain::cmd_simulate(opts, std::cout, std::cerr);
  if (*diagnose) return openchain::cmd_diagnose(opts, std::cout, std::cerr);
  return openchain::cmd_figure(figure, opts, std::cout, std::cerr);
}

// Command-line front end. Links only the C API of the shared library.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "onebit/onebit.h"

namespace {

int exit_code(onebit_status status) {
  switch (status) {
    case ONEBIT_OK:
      return 0;
    case ONEBIT_ERROR_CONFIG:
      return 2;
    case ONEBIT_ERROR_NUMERIC:
      return 3;
    case ONEBIT_ERROR_VERIFY_FAILED:
    case ONEBIT_ERROR:
      return 1;
  }
  return 1;
}

int finish(onebit_status status) {
  if (status != ONEBIT_OK && status != ONEBIT_ERROR_VERIFY_FAILED) {
    std::fprintf(stderr, "error: %s\n", onebit_last_error());
  }
  return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-bit rank-one matrix sensing experiments"};
  app.require_subcommand(1);

  std::string config_path;
  bool deterministic_timing = false;
  CLI::App* run = app.add_subcommand("run", "run one experiment from a JSON config");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_flag("--deterministic-timing", deterministic_timing,
                "write zero wall times so outputs are byte-reproducible");

  std::string suite;
  std::int64_t dim = -1;
  std::int64_t samples = -1;
  std::int64_t seed = -1;
  std::string report_path;
  CLI::App* verify = app.add_subcommand(
      "verify", "run a verification suite (lemma1, lemma2, rip, dilation, "
                "normloss, wedin, all)");
  verify->add_option("suite", suite, "suite name")->required();
  verify->add_option("--d", dim, "dimension override");
  verify->add_option("--samples", samples, "sample-count override");
  verify->add_option("--seed", seed, "seed override");
  verify->add_option("--out", report_path, "JSON report path");

  std::string sweep_config;
  std::string axis;
  std::string values;
  bool sweep_deterministic = false;
  bool sweep_parallel = false;
  CLI::App* sweep = app.add_subcommand("sweep", "run one experiment per axis value");
  sweep->add_option("--config", sweep_config, "JSON config file")->required();
  sweep->add_option("--axis", axis, "m, noise_p or noise_xi")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_flag("--deterministic-timing", sweep_deterministic,
                  "write zero wall times so outputs are byte-reproducible");
  sweep->add_flag("--parallel", sweep_parallel,
                  "run sweep points concurrently (same outputs as sequential)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    return finish(onebit_run_experiment(config_path.c_str(),
                                        deterministic_timing ? 1 : 0));
  }
  if (verify->parsed()) {
    char* table = nullptr;
    const onebit_status status =
        onebit_verify(suite.c_str(), dim, samples, seed,
                      report_path.empty() ? nullptr : report_path.c_str(),
                      &table);
    if (table != nullptr) {
      std::fputs(table, stdout);
      onebit_string_free(table);
    }
    return finish(status);
  }
  if (sweep->parsed()) {
    return finish(onebit_sweep(sweep_config.c_str(), axis.c_str(),
                               values.c_str(), sweep_deterministic ? 1 : 0,
                               sweep_parallel ? 1 : 0));
  }
  return 2;
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/sensing.hpp"

namespace onebit::experiment {

enum class Mode { single_label, full_observation };

/// One experiment, as read from a JSON config file. All fields are
/// required; unknown fields are rejected so typos cannot silently fall back
/// to defaults.
struct ExperimentConfig {
  Index d1 = 0;
  Index d2 = 0;
  Index k = 0;
  Index m = 0;
  Index iterations = 0;  // "T" in the config file
  Mode mode = Mode::single_label;
  sensing::NoiseSpec noise;
  Index n_test = 0;
  std::uint64_t seed = 0;
  std::string out_csv;
  std::string out_summary;

  void validate() const;  // throws ConfigError naming the offending field
};

ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct ExperimentOptions {
  bool deterministic_timing = false;  // zero all wall-time fields in outputs
};

/// Runs the configured experiment: plants the ground truth, runs the solver
/// and the plug-in baseline on the same total sample budget, writes one CSV
/// row per iteration plus a JSON summary. Outputs are byte-identical across
/// repeated runs and worker counts when deterministic timing is on.
void run_experiment(const ExperimentConfig& config,
                    const ExperimentOptions& options);

struct VerifyOptions {
  Index dim = -1;       // -1 keeps the suite default
  Index samples = -1;
  std::int64_t seed = -1;
  std::string out_json;  // empty: onebit_verify_<suite>.json in the cwd
};

struct VerifyOutcome {
  bool all_pass = false;
  std::string table;  // printable pass/fail table
};

/// Runs a named verification suite (lemma1, lemma2, rip, dilation, normloss,
/// wedin, all) at documented defaults, writes the JSON reports, and returns
/// the printable result table. Throws ConfigError for an unknown suite.
VerifyOutcome verify(const std::string& suite, const VerifyOptions& options);

struct SweepOptions {
  bool deterministic_timing = false;
  bool parallel = false;  // run sweep points concurrently; same outputs
};

/// Runs one experiment per axis value (axis in {m, noise_p, noise_xi}) with
/// derived seeds and per-value output files, then writes a sweep summary CSV
/// keyed by the axis value.
void sweep(const ExperimentConfig& base, const std::string& axis,
           const std::vector<double>& values, const SweepOptions& options);

/// Canonical 17-significant-digit float formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace onebit::experiment

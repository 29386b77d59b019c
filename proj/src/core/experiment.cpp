#include "core/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/linalg.hpp"
#include "core/metrics.hpp"
#include "core/oracle.hpp"
#include "core/rng.hpp"
#include "core/solver.hpp"
#include "core/version.hpp"

namespace onebit::experiment {

namespace {

using nlohmann::ordered_json;

constexpr std::uint64_t kNaiveSeedTag = 0x6e61697665ULL;  // "naive"
constexpr std::uint64_t kEvalSeedTag = 0x6576616cULL;     // "eval"
constexpr std::uint64_t kDefaultVerifySeed = 20240101;

Index require_count(const ordered_json& j, const char* field) {
  if (!j.contains(field)) {
    throw ConfigError(field, std::string("config: missing field '") + field + "'");
  }
  if (!j.at(field).is_number_integer()) {
    throw ConfigError(field, std::string("config: field '") + field +
                                 "' must be an integer");
  }
  return j.at(field).get<Index>();
}

std::string require_string(const ordered_json& j, const char* field) {
  if (!j.contains(field)) {
    throw ConfigError(field, std::string("config: missing field '") + field + "'");
  }
  if (!j.at(field).is_string()) {
    throw ConfigError(field, std::string("config: field '") + field +
                                 "' must be a string");
  }
  return j.at(field).get<std::string>();
}

sensing::NoiseSpec parse_noise(const ordered_json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError("noise", "config: 'noise' must be an object with 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") {
    for (const auto& [key, _] : j.items()) {
      if (key != "kind") {
        throw ConfigError("noise." + key, "config: unknown field 'noise." + key + "'");
      }
    }
    return sensing::NoiseSpec::none();
  }
  if (kind == "gaussian") {
    for (const auto& [key, _] : j.items()) {
      if (key != "kind" && key != "xi") {
        throw ConfigError("noise." + key, "config: unknown field 'noise." + key + "'");
      }
    }
    if (!j.contains("xi") || !j.at("xi").is_number()) {
      throw ConfigError("noise.xi", "config: gaussian noise needs numeric 'xi'");
    }
    return sensing::NoiseSpec::gaussian(j.at("xi").get<double>());
  }
  if (kind == "flip") {
    for (const auto& [key, _] : j.items()) {
      if (key != "kind" && key != "p") {
        throw ConfigError("noise." + key, "config: unknown field 'noise." + key + "'");
      }
    }
    if (!j.contains("p") || !j.at("p").is_number()) {
      throw ConfigError("noise.p", "config: flip noise needs numeric 'p'");
    }
    return sensing::NoiseSpec::flip(j.at("p").get<double>());
  }
  throw ConfigError("noise.kind", "config: noise kind must be none|gaussian|flip");
}

ordered_json noise_to_json(const sensing::NoiseSpec& noise) {
  ordered_json j;
  switch (noise.kind) {
    case sensing::NoiseSpec::Kind::none:
      j["kind"] = "none";
      break;
    case sensing::NoiseSpec::Kind::gaussian:
      j["kind"] = "gaussian";
      j["xi"] = noise.xi;
      break;
    case sensing::NoiseSpec::Kind::flip:
      j["kind"] = "flip";
      j["p"] = noise.p;
      break;
  }
  return j;
}

std::ofstream open_output(const std::string& path, const char* field) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError(field, "cannot open output path '" + path + "'");
  }
  return out;
}

std::string value_token(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + suffix;
  }
  return path.substr(0, dot) + suffix + path.substr(dot);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ExperimentConfig::validate() const {
  if (d1 < 2) throw ConfigError("d1", "config: d1 must be >= 2");
  if (d2 < 1) throw ConfigError("d2", "config: d2 must be >= 1");
  if (k < 1 || k > std::min(d1, d2)) {
    throw ConfigError("k", "config: k must be in [1, min(d1, d2)]");
  }
  if (m < 1) throw ConfigError("m", "config: m must be >= 1");
  if (iterations < 1) throw ConfigError("T", "config: T must be >= 1");
  if (n_test < 1) throw ConfigError("n_test", "config: n_test must be >= 1");
  if (out_csv.empty()) throw ConfigError("out_csv", "config: out_csv is empty");
  if (out_summary.empty()) {
    throw ConfigError("out_summary", "config: out_summary is empty");
  }
}

ExperimentConfig parse_config_text(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("<json>", std::string("config: parse error: ") + e.what());
  }
  static const char* known[] = {"d1",     "d2",    "k",    "m",
                                "T",      "mode",  "noise", "n_test",
                                "seed",   "out_csv", "out_summary"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) {
      throw ConfigError(key, "config: unknown field '" + key + "'");
    }
  }

  ExperimentConfig config;
  config.d1 = require_count(j, "d1");
  config.d2 = require_count(j, "d2");
  config.k = require_count(j, "k");
  config.m = require_count(j, "m");
  config.iterations = require_count(j, "T");
  const std::string mode = require_string(j, "mode");
  if (mode == "single_label") {
    config.mode = Mode::single_label;
  } else if (mode == "full_observation") {
    config.mode = Mode::full_observation;
  } else {
    throw ConfigError("mode", "config: mode must be single_label|full_observation");
  }
  if (!j.contains("noise")) {
    throw ConfigError("noise", "config: missing field 'noise'");
  }
  config.noise = parse_noise(j.at("noise"));
  config.n_test = require_count(j, "n_test");
  if (!j.contains("seed") || !j.at("seed").is_number_integer()) {
    throw ConfigError("seed", "config: 'seed' must be an integer");
  }
  config.seed = j.at("seed").get<std::uint64_t>();
  config.out_csv = require_string(j, "out_csv");
  config.out_summary = require_string(j, "out_summary");
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("config", "cannot read config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void run_experiment(const ExperimentConfig& config,
                    const ExperimentOptions& options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const sensing::GroundTruthModel model =
      sensing::make_ground_truth(config.d1, config.d2, config.k, config.seed);

  solver::SolverConfig sc;
  sc.d1 = config.d1;
  sc.d2 = config.d2;
  sc.k = config.k;
  sc.m = config.m;
  sc.iterations = config.iterations;
  sc.seed = config.seed;
  sc.full_observation = config.mode == Mode::full_observation;

  solver::EvalOptions eval;
  eval.n_test = config.n_test;
  eval.eval_seed = derive_seed(config.seed, kEvalSeedTag);
  eval.measure_time = !options.deterministic_timing;

  const solver::RunResult result = solver::run(sc, model, config.noise, eval);

  // Plug-in baseline on the identical total sample budget.
  const Index total_samples = (config.iterations + 1) * config.m;
  const DenseMatrix naive = solver::naive_plug_in(
      model, total_samples, config.noise, derive_seed(config.seed, kNaiveSeedTag));

  const metrics::EvalSet eval_set =
      metrics::make_eval_set(model, config.n_test, eval.eval_seed);
  const double naive_error = metrics::recovery_error(naive, model.w_star);
  const double naive_hamming = metrics::hamming_on(eval_set, naive);
  const double naive_auc = metrics::average_auc_on(eval_set, naive);

  // CSV: one header, one row per iteration, 17 significant digits.
  std::ofstream csv = open_output(config.out_csv, "out_csv");
  csv << "t,samples_seen,recovery_error,tan_theta,hamming,auc_pct,"
         "degenerate_columns,elapsed_ms\n";
  for (const auto& rec : result.history) {
    csv << rec.t << ',' << rec.samples_seen << ','
        << format_double(rec.recovery_error) << ','
        << format_double(rec.tan_theta) << ',' << format_double(rec.hamming)
        << ',' << format_double(rec.auc * 100.0) << ','
        << rec.degenerate_columns << ',' << format_double(rec.elapsed_ms)
        << '\n';
  }
  csv.close();

  const double wall_ms =
      options.deterministic_timing
          ? 0.0
          : std::chrono::duration<double, std::milli>(
                std::chrono::steady_clock::now() - start)
                .count();

  ordered_json summary;
  ordered_json config_echo;
  config_echo["d1"] = config.d1;
  config_echo["d2"] = config.d2;
  config_echo["k"] = config.k;
  config_echo["m"] = config.m;
  config_echo["T"] = config.iterations;
  config_echo["mode"] = config.mode == Mode::single_label ? "single_label"
                                                          : "full_observation";
  config_echo["noise"] = noise_to_json(config.noise);
  config_echo["n_test"] = config.n_test;
  config_echo["seed"] = config.seed;
  config_echo["out_csv"] = config.out_csv;
  config_echo["out_summary"] = config.out_summary;
  summary["config"] = config_echo;
  summary["library_version"] = ONEBIT_VERSION_STRING;

  ordered_json solver_summary;
  const bool has_history = !result.history.empty();
  solver_summary["final_recovery_error"] =
      has_history ? result.history.back().recovery_error
                  : metrics::recovery_error(result.w_final, model.w_star);
  solver_summary["final_tan_theta"] =
      has_history ? result.history.back().tan_theta : 0.0;
  solver_summary["final_hamming"] =
      has_history ? result.history.back().hamming : 0.0;
  solver_summary["final_auc_pct"] =
      has_history ? result.history.back().auc * 100.0 : 0.0;
  solver_summary["samples_seen"] = total_samples;
  summary["solver"] = solver_summary;

  ordered_json naive_summary;
  naive_summary["final_recovery_error"] = naive_error;
  naive_summary["final_hamming"] = naive_hamming;
  naive_summary["final_auc_pct"] = naive_auc * 100.0;
  naive_summary["samples_seen"] = total_samples;
  summary["naive_baseline"] = naive_summary;

  summary["wall_time_ms"] = wall_ms;

  std::ofstream summary_out = open_output(config.out_summary, "out_summary");
  summary_out << summary.dump(2) << '\n';
}

namespace {

struct SuiteResult {
  std::vector<oracle::OracleReport> reports;
};

std::vector<double> unit_e1(Index d) {
  std::vector<double> w(static_cast<std::size_t>(d), 0.0);
  w[0] = 1.0;
  return w;
}

void run_lemma1(SuiteResult& out, Index dim, Index samples, std::uint64_t seed) {
  const Index d = dim > 0 ? dim : 20;
  const Index n = samples > 0 ? samples : 1000000;
  // Random unit direction; rotation invariance makes the choice immaterial.
  std::vector<double> w(static_cast<std::size_t>(d));
  CounterRng rng(seed, Rng::misc, 0, 0);
  double n2 = 0.0;
  for (double& v : w) {
    v = rng.next_gaussian();
    n2 += v * v;
  }
  for (double& v : w) v /= std::sqrt(n2);
  out.reports.push_back(oracle::mc_lemma1_vector(w, n, seed).report);

  const sensing::GroundTruthModel model =
      sensing::make_ground_truth(d, std::max<Index>(2, d / 4), 2, seed);
  out.reports.push_back(
      oracle::mc_lemma1_matrix(model.w_star, n, seed).report);
}

void run_lemma2(SuiteResult& out, Index dim, Index samples, std::uint64_t seed) {
  const Index d = dim > 0 ? dim : 5;
  const Index n = samples > 0 ? samples : 10000000;
  const double alphas[] = {0.3, std::numbers::pi / 4.0, std::numbers::pi / 2.0};
  for (double alpha : alphas) {
    std::vector<double> w = unit_e1(d);
    std::vector<double> wp(static_cast<std::size_t>(d), 0.0);
    wp[0] = std::cos(alpha);
    wp[1] = std::sin(alpha);
    oracle::MatrixEstimate est = oracle::mc_second_moment(w, wp, n, seed);
    out.reports.push_back(est.report);

    double trace = 0.0;
    for (Index r = 0; r < d; ++r) trace += est.estimate(r, r);
    const double want = 4.0 * static_cast<double>(d) * alpha / std::numbers::pi;
    oracle::OracleReport tr;
    tr.name = "lemma2_trace";
    tr.parameters = {{"d", static_cast<double>(d)}, {"alpha", alpha}};
    tr.statistic = trace;
    tr.bound_or_target = want;
    tr.tolerance = 0.01 * want;
    tr.kind = oracle::OracleReport::Kind::target;
    tr.n_samples = n;
    tr.seed = seed;
    tr.finalize();
    out.reports.push_back(tr);
  }
}

void run_rip(SuiteResult& out, Index dim, Index samples, std::uint64_t seed) {
  const Index d1 = dim > 0 ? dim : 50;
  const Index d2 = std::max<Index>(2, (d1 * 2) / 5);
  const Index k = 3;
  const Index batches = 20;
  std::vector<Index> sizes = {2000, 8000, 32000, 128000};
  if (samples > 0) {
    // Override scales the grid, keeping the 4x spacing.
    sizes = {samples / 64, samples / 16, samples / 4, samples};
    for (Index& s : sizes) s = std::max<Index>(s, 100);
  }

  const sensing::GroundTruthModel model_a =
      sensing::make_ground_truth(d1, d2, k, seed);
  const sensing::GroundTruthModel model_b =
      sensing::make_ground_truth(d1, d2, k, derive_seed(seed, 1));

  std::vector<double> log_m;
  std::vector<double> log_med;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    std::vector<double> residuals;
    residuals.reserve(batches);
    for (Index b = 0; b < batches; ++b) {
      const sensing::MiniBatch batch = sensing::sample_batch(
          model_a, sizes[s], sensing::NoiseSpec::none(),
          derive_seed(seed, 100 + static_cast<std::uint64_t>(s) * 64 +
                                static_cast<std::uint64_t>(b)));
      residuals.push_back(
          oracle::rip_residual(model_a.w_star, model_b.w_star, batch));
    }
    std::sort(residuals.begin(), residuals.end());
    const double median =
        0.5 * (residuals[batches / 2] + residuals[(batches - 1) / 2]);
    log_m.push_back(std::log(static_cast<double>(sizes[s])));
    log_med.push_back(std::log(median));
  }

  // Least-squares slope on log-log axes.
  const double n_pts = static_cast<double>(log_m.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < log_m.size(); ++i) {
    mx += log_m[i];
    my += log_med[i];
  }
  mx /= n_pts;
  my /= n_pts;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < log_m.size(); ++i) {
    sxx += (log_m[i] - mx) * (log_m[i] - mx);
    sxy += (log_m[i] - mx) * (log_med[i] - my);
  }
  const double slope = sxy / sxx;

  oracle::OracleReport rep;
  rep.name = "rip_decay_slope";
  rep.parameters = {{"d1", static_cast<double>(d1)},
                    {"d2", static_cast<double>(d2)},
                    {"k", static_cast<double>(k)},
                    {"batches", static_cast<double>(batches)}};
  rep.statistic = slope;
  rep.bound_or_target = -0.5;
  rep.tolerance = 0.15;
  rep.kind = oracle::OracleReport::Kind::target;
  rep.n_samples = batches * (2000 + 8000 + 32000 + 128000);
  rep.seed = seed;
  rep.finalize();
  out.reports.push_back(rep);
}

void run_dilation(SuiteResult& out, Index dim, Index samples,
                  std::uint64_t seed) {
  const Index d1 = dim > 0 ? dim : 10;
  const Index d2 = std::max<Index>(1, (d1 * 3) / 5);
  const Index trials = samples > 0 ? samples : 100;
  double worst = 0.0;
  for (Index t = 0; t < trials; ++t) {
    CounterRng rng(seed, Rng::misc, 1, static_cast<std::uint64_t>(t));
    DenseMatrix w(d1, d2);
    for (Index j = 0; j < d2; ++j) {
      for (Index i = 0; i < d1; ++i) w(i, j) = rng.next_gaussian();
    }
    worst = std::max(worst, oracle::check_dilation_spectrum(w).statistic);
  }
  oracle::OracleReport rep;
  rep.name = "dilation_spectrum";
  rep.parameters = {{"d1", static_cast<double>(d1)},
                    {"d2", static_cast<double>(d2)},
                    {"trials", static_cast<double>(trials)}};
  rep.statistic = worst;
  rep.bound_or_target = 1e-8;
  rep.tolerance = 0.0;
  rep.kind = oracle::OracleReport::Kind::bound;
  rep.n_samples = trials;
  rep.seed = seed;
  rep.finalize();
  out.reports.push_back(rep);
}

void run_normloss(SuiteResult& out, Index dim, Index samples,
                  std::uint64_t seed) {
  const Index d1 = dim > 0 ? dim : 30;
  const Index d2 = std::max<Index>(2, (d1 * 2) / 5);
  const Index k = 3;
  const Index trials = samples > 0 ? samples : 200;
  double worst_ratio = 0.0;
  bool all_pass = true;
  for (Index t = 0; t < trials; ++t) {
    const sensing::GroundTruthModel model = sensing::make_ground_truth(
        d1, d2, k, derive_seed(seed, static_cast<std::uint64_t>(t)));
    CounterRng rng(seed, Rng::misc, 2, static_cast<std::uint64_t>(t));
    // Rank <= 2k candidate: planted matrix plus a rank-k disturbance whose
    // scale sweeps from tiny to dominant across trials.
    DenseMatrix p(d1, k);
    DenseMatrix q(d2, k);
    for (Index c = 0; c < k; ++c) {
      for (Index i = 0; i < d1; ++i) p(i, c) = rng.next_gaussian();
      for (Index i = 0; i < d2; ++i) q(i, c) = rng.next_gaussian();
    }
    const double scale = std::pow(10.0, -3.0 + 4.0 * (static_cast<double>(t) /
                                                      static_cast<double>(trials)));
    DenseMatrix w_tilde = model.w_star;
    for (Index j = 0; j < d2; ++j) {
      auto wj = w_tilde.col(j);
      for (Index c = 0; c < k; ++c) {
        const double qjc = q(j, c) * scale / std::sqrt(static_cast<double>(d1));
        auto pc = p.col(c);
        for (Index i = 0; i < d1; ++i) wj[i] += pc[i] * qjc;
      }
    }
    const oracle::OracleReport rep =
        oracle::check_normalization_loss(model, w_tilde, k);
    all_pass = all_pass && rep.pass;
    if (rep.bound_or_target > 0.0) {
      worst_ratio = std::max(worst_ratio, rep.statistic / rep.bound_or_target);
    }
  }
  oracle::OracleReport rep;
  rep.name = "normalization_loss";
  rep.parameters = {{"d1", static_cast<double>(d1)},
                    {"d2", static_cast<double>(d2)},
                    {"k", static_cast<double>(k)},
                    {"trials", static_cast<double>(trials)}};
  rep.statistic = worst_ratio;
  rep.bound_or_target = 1.0;
  rep.tolerance = 0.0;
  rep.kind = oracle::OracleReport::Kind::bound;
  rep.pass = all_pass && worst_ratio <= 1.0;
  rep.n_samples = trials;
  rep.seed = seed;
  out.reports.push_back(rep);
}

void run_wedin(SuiteResult& out, Index dim, Index samples,
               std::uint64_t seed) {
  const Index d1 = dim > 0 ? dim : 20;
  const Index d2 = std::max<Index>(3, dim > 0 ? dim / 2 : 10);
  const Index trials = samples > 0 ? samples : 100;
  // Rank-3 target with spectrum (3, 2, 1).
  CounterRng rng(seed, Rng::misc, 3, 0);
  DenseMatrix a(d1, 3);
  DenseMatrix b(d2, 3);
  for (Index c = 0; c < 3; ++c) {
    for (Index i = 0; i < d1; ++i) a(i, c) = rng.next_gaussian();
    for (Index i = 0; i < d2; ++i) b(i, c) = rng.next_gaussian();
  }
  const OrthonormalBasis qa = linalg::qr_thin(a).q;
  const OrthonormalBasis qb = linalg::qr_thin(b).q;
  const double spectrum[] = {3.0, 2.0, 1.0};
  DenseMatrix w(d1, d2);
  for (Index c = 0; c < 3; ++c) {
    auto ua = qa.matrix().col(c);
    auto vb = qb.matrix().col(c);
    for (Index j = 0; j < d2; ++j) {
      for (Index i = 0; i < d1; ++i) w(i, j) += spectrum[c] * ua[i] * vb[j];
    }
  }
  out.reports.push_back(oracle::check_wedin_init(w, 0.2, trials, seed));
}

}  // namespace

VerifyOutcome verify(const std::string& suite, const VerifyOptions& options) {
  const std::uint64_t seed =
      options.seed >= 0 ? static_cast<std::uint64_t>(options.seed)
                        : kDefaultVerifySeed;
  SuiteResult result;
  bool known = false;
  auto want = [&suite, &known](const char* name) {
    const bool match = suite == name || suite == "all";
    known = known || suite == name;
    return match;
  };
  if (want("lemma1")) run_lemma1(result, options.dim, options.samples, seed);
  if (want("lemma2")) run_lemma2(result, options.dim, options.samples, seed);
  if (want("rip")) run_rip(result, options.dim, options.samples, seed);
  if (want("dilation")) run_dilation(result, options.dim, options.samples, seed);
  if (want("normloss")) run_normloss(result, options.dim, options.samples, seed);
  if (want("wedin")) run_wedin(result, options.dim, options.samples, seed);
  if (!known && suite != "all") {
    throw ConfigError("suite", "verify: unknown suite '" + suite + "'");
  }

  VerifyOutcome outcome;
  outcome.all_pass = true;
  std::ostringstream table;
  table << "check                     statistic      bound/target   tolerance"
           "      result\n";
  ordered_json reports = ordered_json::array();
  for (const auto& rep : result.reports) {
    outcome.all_pass = outcome.all_pass && rep.pass;
    char line[160];
    std::snprintf(line, sizeof(line), "%-25s %-14.6g %-14.6g %-14.6g %s\n",
                  rep.name.c_str(), rep.statistic, rep.bound_or_target,
                  rep.tolerance, rep.pass ? "PASS" : "FAIL");
    table << line;
    reports.push_back(rep.to_json());
  }
  table << (outcome.all_pass ? "all checks passed" : "SOME CHECKS FAILED")
        << '\n';
  outcome.table = table.str();

  const std::string path = options.out_json.empty()
                               ? "onebit_verify_" + suite + ".json"
                               : options.out_json;
  std::ofstream out = open_output(path, "out_json");
  out << reports.dump(2) << '\n';
  return outcome;
}

void sweep(const ExperimentConfig& base, const std::string& axis,
           const std::vector<double>& values, const SweepOptions& options) {
  base.validate();
  if (values.empty()) {
    throw ConfigError("values", "sweep: values must be nonempty");
  }
  if (axis != "m" && axis != "noise_p" && axis != "noise_xi") {
    throw ConfigError("axis", "sweep: axis must be m|noise_p|noise_xi");
  }

  struct Row {
    double value;
    double recovery_error;
    double auc_pct;
    double hamming;
  };
  std::vector<Row> rows(values.size());

  auto run_point = [&](std::size_t idx) {
    const double value = values[idx];
    ExperimentConfig config = base;
    config.seed = derive_seed(base.seed, static_cast<std::uint64_t>(idx) + 1);
    if (axis == "m") {
      if (value < 1.0 || value != std::floor(value)) {
        throw ConfigError("values", "sweep: m values must be positive integers");
      }
      config.m = static_cast<Index>(value);
    } else if (axis == "noise_p") {
      config.noise = sensing::NoiseSpec::flip(value);
    } else {
      config.noise = sensing::NoiseSpec::gaussian(value);
    }
    const std::string token = "_" + axis + "_" + value_token(value);
    config.out_csv = with_suffix(base.out_csv, token);
    config.out_summary = with_suffix(base.out_summary, token);
    ExperimentOptions exp_options;
    exp_options.deterministic_timing = options.deterministic_timing;
    run_experiment(config, exp_options);

    // Pull the finals back out of the summary this point just wrote.
    std::ifstream in(config.out_summary, std::ios::binary);
    ordered_json summary = ordered_json::parse(in);
    rows[idx] = Row{value, summary["solver"]["final_recovery_error"],
                    summary["solver"]["final_auc_pct"],
                    summary["solver"]["final_hamming"]};
  };

  if (options.parallel) {
    std::vector<std::future<void>> futures;
    futures.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      futures.push_back(std::async(std::launch::async, run_point, i));
    }
    for (auto& f : futures) f.get();
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) run_point(i);
  }

  const std::string sweep_path = with_suffix(base.out_csv, "_sweep_" + axis);
  const bool exists = static_cast<bool>(std::ifstream(sweep_path));
  std::ofstream out(sweep_path, std::ios::binary | std::ios::app);
  if (!out) {
    throw ConfigError("out_csv", "sweep: cannot open '" + sweep_path + "'");
  }
  if (!exists) {
    out << "axis,value,final_recovery_error,final_auc_pct,final_hamming\n";
  }
  for (const Row& row : rows) {
    out << axis << ',' << format_double(row.value) << ','
        << format_double(row.recovery_error) << ','
        << format_double(row.auc_pct) << ',' << format_double(row.hamming)
        << '\n';
  }
}

}  // namespace onebit::experiment

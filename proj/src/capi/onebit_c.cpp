#include "onebit/onebit.h"

#include <cstring>
#include <sstream>
#include <string>

#include "core/error.hpp"
#include "core/experiment.hpp"
#include "core/metrics.hpp"
#include "core/sensing.hpp"
#include "core/solver.hpp"
#include "core/version.hpp"

using onebit::Index;

struct onebit_model {
  onebit::sensing::GroundTruthModel model;
};

struct onebit_batch {
  onebit::sensing::MiniBatch batch;
};

struct onebit_solver {
  onebit::solver::SolverConfig config;
  onebit::solver::FactoredIterate state;
};

namespace {

thread_local std::string g_last_error;

onebit_status fail(onebit_status status, const char* what) {
  g_last_error = what;
  return status;
}

// Runs fn, translating exceptions to status codes.
template <typename Fn>
onebit_status guarded(Fn&& fn) {
  try {
    fn();
    return ONEBIT_OK;
  } catch (const onebit::ConfigError& e) {
    g_last_error = e.what();
    return ONEBIT_ERROR_CONFIG;
  } catch (const onebit::DimensionError& e) {
    g_last_error = e.what();
    return ONEBIT_ERROR_CONFIG;
  } catch (const onebit::NumericError& e) {
    g_last_error = e.what();
    return ONEBIT_ERROR_NUMERIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ONEBIT_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return ONEBIT_ERROR;
  }
}

onebit::sensing::NoiseSpec to_noise(onebit_noise noise) {
  switch (noise.kind) {
    case 0:
      return onebit::sensing::NoiseSpec::none();
    case 1:
      return onebit::sensing::NoiseSpec::gaussian(noise.param);
    case 2:
      return onebit::sensing::NoiseSpec::flip(noise.param);
    default:
      throw onebit::ConfigError("noise", "noise.kind must be 0, 1 or 2");
  }
}

}  // namespace

extern "C" {

const char* onebit_version(void) { return ONEBIT_VERSION_STRING; }

const char* onebit_last_error(void) { return g_last_error.c_str(); }

onebit_status onebit_model_create(int64_t d1, int64_t d2, int64_t k,
                                  uint64_t seed, onebit_model** out) {
  if (out == nullptr) return fail(ONEBIT_ERROR_CONFIG, "out is NULL");
  return guarded([&]() {
    *out = new onebit_model{
        onebit::sensing::make_ground_truth(d1, d2, k, seed)};
  });
}

void onebit_model_destroy(onebit_model* model) { delete model; }

onebit_status onebit_model_dims(const onebit_model* model, int64_t* d1,
                                int64_t* d2, int64_t* k) {
  if (model == nullptr) return fail(ONEBIT_ERROR_CONFIG, "model is NULL");
  if (d1 != nullptr) *d1 = model->model.d1();
  if (d2 != nullptr) *d2 = model->model.d2();
  if (k != nullptr) *k = model->model.k;
  return ONEBIT_OK;
}

onebit_status onebit_model_matrix(const onebit_model* model, double* out,
                                  size_t len) {
  if (model == nullptr) return fail(ONEBIT_ERROR_CONFIG, "model is NULL");
  if (out == nullptr) return fail(ONEBIT_ERROR_CONFIG, "out is NULL");
  const size_t need = static_cast<size_t>(model->model.w_star.size());
  if (len < need) return fail(ONEBIT_ERROR_CONFIG, "output buffer too small");
  std::memcpy(out, model->model.w_star.data(), need * sizeof(double));
  return ONEBIT_OK;
}

onebit_status onebit_batch_sample(const onebit_model* model, int64_t m,
                                  onebit_noise noise, uint64_t seed,
                                  onebit_batch** out) {
  if (model == nullptr) return fail(ONEBIT_ERROR_CONFIG, "model is NULL");
  if (out == nullptr) return fail(ONEBIT_ERROR_CONFIG, "out is NULL");
  return guarded([&]() {
    *out = new onebit_batch{
        onebit::sensing::sample_batch(model->model, m, to_noise(noise), seed)};
  });
}

onebit_status onebit_batch_sample_full(const onebit_model* model,
                                       int64_t n_pairs, onebit_noise noise,
                                       uint64_t seed, onebit_batch** out) {
  if (model == nullptr) return fail(ONEBIT_ERROR_CONFIG, "model is NULL");
  if (out == nullptr) return fail(ONEBIT_ERROR_CONFIG, "out is NULL");
  return guarded([&]() {
    *out = new onebit_batch{onebit::sensing::sample_full_observation(
        model->model, n_pairs, to_noise(noise), seed)};
  });
}

void onebit_batch_destroy(onebit_batch* batch) { delete batch; }

onebit_status onebit_batch_size(const onebit_batch* batch, int64_t* m) {
  if (batch == nullptr) return fail(ONEBIT_ERROR_CONFIG, "batch is NULL");
  if (m != nullptr) *m = batch->batch.m;
  return ONEBIT_OK;
}

onebit_status onebit_solver_create(const onebit_solver_config* config,
                                   const onebit_batch* init_batch,
                                   onebit_solver** out) {
  if (config == nullptr) return fail(ONEBIT_ERROR_CONFIG, "config is NULL");
  if (init_batch == nullptr) return fail(ONEBIT_ERROR_CONFIG, "init_batch is NULL");
  if (out == nullptr) return fail(ONEBIT_ERROR_CONFIG, "out is NULL");
  return guarded([&]() {
    onebit::solver::SolverConfig sc;
    sc.d1 = config->d1;
    sc.d2 = config->d2;
    sc.k = config->k;
    sc.m = config->m;
    sc.iterations = config->iterations;
    sc.init_power_iters =
        config->init_power_iters > 0 ? config->init_power_iters : 30;
    sc.norm_floor = config->norm_floor > 0.0 ? config->norm_floor : 1e-12;
    sc.seed = config->seed;
    *out = new onebit_solver{
        sc, onebit::solver::init_state(init_batch->batch, sc)};
  });
}

void onebit_solver_destroy(onebit_solver* solver) { delete solver; }

onebit_status onebit_solver_step(onebit_solver* solver,
                                 const onebit_batch* batch) {
  if (solver == nullptr) return fail(ONEBIT_ERROR_CONFIG, "solver is NULL");
  if (batch == nullptr) return fail(ONEBIT_ERROR_CONFIG, "batch is NULL");
  return guarded([&]() {
    solver->state =
        onebit::solver::solver_step(solver->state, batch->batch, solver->config);
  });
}

onebit_status onebit_solver_iteration(const onebit_solver* solver,
                                      int64_t* t) {
  if (solver == nullptr) return fail(ONEBIT_ERROR_CONFIG, "solver is NULL");
  if (t != nullptr) *t = solver->state.t;
  return ONEBIT_OK;
}

onebit_status onebit_solver_estimate(const onebit_solver* solver, double* out,
                                     size_t len) {
  if (solver == nullptr) return fail(ONEBIT_ERROR_CONFIG, "solver is NULL");
  if (out == nullptr) return fail(ONEBIT_ERROR_CONFIG, "out is NULL");
  const size_t need = static_cast<size_t>(solver->state.w.size());
  if (len < need) return fail(ONEBIT_ERROR_CONFIG, "output buffer too small");
  std::memcpy(out, solver->state.w.data(), need * sizeof(double));
  return ONEBIT_OK;
}

onebit_status onebit_solver_recovery_error(const onebit_solver* solver,
                                           const onebit_model* model,
                                           double* out) {
  if (solver == nullptr) return fail(ONEBIT_ERROR_CONFIG, "solver is NULL");
  if (model == nullptr) return fail(ONEBIT_ERROR_CONFIG, "model is NULL");
  if (out == nullptr) return fail(ONEBIT_ERROR_CONFIG, "out is NULL");
  return guarded([&]() {
    *out = onebit::metrics::recovery_error(solver->state.w,
                                           model->model.w_star);
  });
}

onebit_status onebit_run_experiment(const char* config_path,
                                    int deterministic_timing) {
  if (config_path == nullptr) {
    return fail(ONEBIT_ERROR_CONFIG, "config_path is NULL");
  }
  return guarded([&]() {
    onebit::experiment::ExperimentOptions options;
    options.deterministic_timing = deterministic_timing != 0;
    onebit::experiment::run_experiment(
        onebit::experiment::load_config(config_path), options);
  });
}

onebit_status onebit_sweep(const char* config_path, const char* axis,
                           const char* comma_values, int deterministic_timing,
                           int parallel) {
  if (config_path == nullptr || axis == nullptr || comma_values == nullptr) {
    return fail(ONEBIT_ERROR_CONFIG, "sweep: NULL argument");
  }
  return guarded([&]() {
    std::vector<double> values;
    std::stringstream ss(comma_values);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (token.empty()) continue;
      std::size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) {
        throw onebit::ConfigError("values", "sweep: bad value '" + token + "'");
      }
      values.push_back(value);
    }
    onebit::experiment::SweepOptions options;
    options.deterministic_timing = deterministic_timing != 0;
    options.parallel = parallel != 0;
    onebit::experiment::sweep(onebit::experiment::load_config(config_path),
                              axis, values, options);
  });
}

onebit_status onebit_verify(const char* suite, int64_t dim_override,
                            int64_t samples_override, int64_t seed_override,
                            const char* report_path, char** table_out) {
  if (suite == nullptr) return fail(ONEBIT_ERROR_CONFIG, "suite is NULL");
  bool all_pass = false;
  const onebit_status status = guarded([&]() {
    onebit::experiment::VerifyOptions options;
    options.dim = dim_override;
    options.samples = samples_override;
    options.seed = seed_override;
    if (report_path != nullptr) options.out_json = report_path;
    const onebit::experiment::VerifyOutcome outcome =
        onebit::experiment::verify(suite, options);
    all_pass = outcome.all_pass;
    if (table_out != nullptr) {
      char* copy = new char[outcome.table.size() + 1];
      std::memcpy(copy, outcome.table.c_str(), outcome.table.size() + 1);
      *table_out = copy;
    }
  });
  if (status != ONEBIT_OK) return status;
  return all_pass ? ONEBIT_OK : ONEBIT_ERROR_VERIFY_FAILED;
}

void onebit_string_free(char* s) { delete[] s; }

}  // extern "C"

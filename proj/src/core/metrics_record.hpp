#pragma once

#include <cstdint>

#include "core/error.hpp"

namespace onebit::metrics {

/// Per-iteration diagnostics emitted by the solver run.
struct MetricsRecord {
  Index t = 0;
  Index samples_seen = 0;
  double recovery_error = 0.0;  // ||W* - W_t||_2
  double tan_theta = 0.0;       // largest principal angle to the planted basis
  double hamming = 0.0;
  double auc = 0.0;             // in [0, 1]; CSV reports percentage
  Index degenerate_columns = 0;
  double elapsed_ms = 0.0;
};

}  // namespace onebit::metrics

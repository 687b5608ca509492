#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cqr/estimators.hpp"

namespace cqr {

struct SimulationConfig {
  LinearModelSpec spec;
  int n_train = 100;
  int n_validation = 100;
  int replications = 100;
  QuantileGrid grid = QuantileGrid::equally_spaced(19);
  Vector lambda_grid;  ///< empty selects default_lambda_grid(n_train)
  std::vector<std::string> methods = {"ls_oracle", "cqr_oracle", "acqr", "ols", "cqr"};
  std::uint64_t seed = 1;

  /// The benchmark design (beta* = (3, 1.5, 0, 0, 2, 0, 0, 0), AR(0.5)
  /// covariance) under one of the five named error settings ex1..ex5.
  static SimulationConfig preset(const std::string& name);
};

struct MethodRecord {
  double me = 0.0;
  int nc = 0;
  int nic = 0;
  bool failed = false;
  std::string error_message;
};

struct ReplicationRecord {
  int replication = 0;
  std::map<std::string, MethodRecord> methods;
};

struct MethodSummary {
  double mean_me = 0.0;
  double median_me = 0.0;
  double mean_nc = 0.0;
  double mean_nic = 0.0;
  int failures = 0;
  int successes = 0;
};

struct SimulationReport {
  SimulationConfig config;
  std::map<std::string, MethodSummary> summary;
  std::vector<ReplicationRecord> records;
};

/// Design-weighted squared estimation error (beta_hat - beta*)' Sigma_x (beta_hat - beta*).
double model_error(const Vector& beta_hat, const LinearModelSpec& spec);

/// (NC, NIC): counts of selected indices inside and outside the true support.
std::pair<int, int> selection_counts(const std::vector<int>& selected,
                                     const LinearModelSpec& spec);

/// One seeded replication: draw train/validation data, fit every requested
/// method, record model error and selection counts. Estimator failures are
/// captured per method; the replication itself always completes.
ReplicationRecord run_replication(const SimulationConfig& config, int rep_index);

/// All replications (parallel across worker threads, capped by the
/// CQRKIT_THREADS environment variable) plus per-method aggregation.
/// Deterministic for a fixed seed regardless of thread count.
SimulationReport run_study(const SimulationConfig& config);

SimulationConfig simulation_config_from_json(const std::string& text);
std::string simulation_report_to_json(const SimulationReport& report);
std::string simulation_report_to_csv(const SimulationReport& report);

}  // namespace cqr

#include "cqr/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace cqr {
namespace {

using nlohmann::json;

const std::vector<std::string> kKnownMethods = {"ls_oracle", "cqr_oracle", "acqr", "ols", "cqr"};

void validate_config(const SimulationConfig& config) {
  if (config.replications < 1) throw std::invalid_argument("simulation: replications must be >= 1");
  if (config.n_train <= config.spec.p()) {
    throw std::invalid_argument("simulation: n_train must exceed p");
  }
  if (config.n_validation < 1) throw std::invalid_argument("simulation: n_validation must be >= 1");
  if (config.methods.empty()) throw std::invalid_argument("simulation: no methods requested");
  for (const std::string& method : config.methods) {
    if (std::find(kKnownMethods.begin(), kKnownMethods.end(), method) == kKnownMethods.end()) {
      throw std::invalid_argument("simulation: unknown method '" + method + "'");
    }
  }
}

FitResult fit_method(const std::string& method, const SimulationConfig& config,
                     const Dataset& train, const Dataset& validation) {
  if (method == "ls_oracle") {
    return fit_oracle(train, config.spec.support, OracleMethod::ls, config.grid);
  }
  if (method == "cqr_oracle") {
    return fit_oracle(train, config.spec.support, OracleMethod::cqr, config.grid);
  }
  if (method == "ols") return fit_ols(train);
  if (method == "cqr") return fit_cqr(train, config.grid);
  if (method == "acqr") {
    const Vector lambdas = config.lambda_grid.size() > 0 ? config.lambda_grid
                                                         : default_lambda_grid(config.n_train);
    return fit_acqr(train, validation, config.grid, lambdas);
  }
  throw std::invalid_argument("simulation: unknown method '" + method + "'");
}

int worker_count(int replications) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (const char* env = std::getenv("CQRKIT_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && parsed >= 1) workers = static_cast<int>(parsed);
  }
  return std::min(workers, replications);
}

ErrorDistribution error_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const double scale = j.value("scale", 1.0);
  switch (kind_from_name(kind)) {
    case DistKind::normal:
      return ErrorDistribution::normal(j.value("mu", 0.0), j.value("sigma2", 1.0), scale);
    case DistKind::double_exponential:
      return ErrorDistribution::double_exponential(scale);
    case DistKind::logistic:
      return ErrorDistribution::logistic(scale);
    case DistKind::student_t:
      return ErrorDistribution::student_t(j.value("v", 3.0), scale);
    case DistKind::cauchy:
      return ErrorDistribution::cauchy(scale);
    case DistKind::normal_mixture:
      return ErrorDistribution::normal_mixture(j.value("r", 0.5), scale);
    case DistKind::double_gamma_mixture:
      return ErrorDistribution::double_gamma_mixture(j.value("alpha", 0.0), scale);
  }
  throw std::invalid_argument("simulation: unknown error kind");
}

json error_to_json(const ErrorDistribution& error) {
  json j;
  j["kind"] = kind_name(error.kind);
  j["scale"] = error.scale;
  switch (error.kind) {
    case DistKind::normal:
      j["mu"] = error.mu;
      j["sigma2"] = error.sigma2;
      break;
    case DistKind::student_t:
      j["v"] = error.v;
      break;
    case DistKind::normal_mixture:
      j["r"] = error.r;
      break;
    case DistKind::double_gamma_mixture:
      j["alpha"] = error.alpha;
      break;
    default:
      break;
  }
  return j;
}

json config_to_json(const SimulationConfig& config) {
  json j;
  j["beta_star"] = std::vector<double>(config.spec.beta_star.data(),
                                       config.spec.beta_star.data() + config.spec.p());
  json sigma = json::array();
  for (int i = 0; i < config.spec.sigma_x.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < config.spec.sigma_x.cols(); ++k) row.push_back(config.spec.sigma_x(i, k));
    sigma.push_back(row);
  }
  j["sigma_x"] = sigma;
  j["error"] = error_to_json(config.spec.error);
  j["n_train"] = config.n_train;
  j["n_validation"] = config.n_validation;
  j["replications"] = config.replications;
  j["quantile_levels"] =
      std::vector<double>(config.grid.levels.data(), config.grid.levels.data() + config.grid.size());
  if (config.lambda_grid.size() > 0) {
    j["lambda_grid"] = std::vector<double>(config.lambda_grid.data(),
                                           config.lambda_grid.data() + config.lambda_grid.size());
  }
  j["methods"] = config.methods;
  j["seed"] = config.seed;
  return j;
}

}  // namespace

SimulationConfig SimulationConfig::preset(const std::string& name) {
  const int p = 8;
  Vector beta_star(p);
  beta_star << 3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0;
  Matrix sigma_x(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) sigma_x(i, j) = std::pow(0.5, std::abs(i - j));
  }
  ErrorDistribution error;
  if (name == "ex1") {
    error = ErrorDistribution::normal(0.0, 3.0);
  } else if (name == "ex2") {
    error = ErrorDistribution::normal_mixture(0.5, std::sqrt(6.0));
  } else if (name == "ex3") {
    error = ErrorDistribution::double_gamma_mixture(14.0, 1.0 / 9.0);
  } else if (name == "ex4") {
    error = ErrorDistribution::student_t(3.0);
  } else if (name == "ex5") {
    error = ErrorDistribution::cauchy();
  } else {
    throw std::invalid_argument("simulation preset must be one of ex1..ex5");
  }
  SimulationConfig config;
  config.spec = LinearModelSpec::make(std::move(beta_star), std::move(sigma_x), error);
  return config;
}

double model_error(const Vector& beta_hat, const LinearModelSpec& spec) {
  if (beta_hat.size() != spec.beta_star.size()) {
    throw std::invalid_argument("model_error: dimension mismatch");
  }
  const Vector diff = beta_hat - spec.beta_star;
  return diff.dot(spec.sigma_x * diff);
}

std::pair<int, int> selection_counts(const std::vector<int>& selected,
                                     const LinearModelSpec& spec) {
  std::vector<char> in_support(spec.p(), 0);
  for (int j : spec.support) in_support[j] = 1;
  int nc = 0;
  int nic = 0;
  for (int j : selected) {
    if (j < 0 || j >= spec.p()) throw std::invalid_argument("selection_counts: index out of range");
    if (in_support[j]) {
      ++nc;
    } else {
      ++nic;
    }
  }
  return {nc, nic};
}

ReplicationRecord run_replication(const SimulationConfig& config, int rep_index) {
  if (rep_index < 0 || rep_index >= config.replications) {
    throw std::invalid_argument("run_replication: replication index out of range");
  }
  const LinearModelSpec& spec = config.spec;
  RngStream stream = RngStream(config.seed).split(static_cast<std::uint64_t>(rep_index));
  const Vector zero_mean = Vector::Zero(spec.p());
  Matrix x_train = sample_mvnormal(stream, zero_mean, spec.sigma_x, config.n_train);
  const Vector eps_train = sample(spec.error, stream, config.n_train);
  Matrix x_val = sample_mvnormal(stream, zero_mean, spec.sigma_x, config.n_validation);
  const Vector eps_val = sample(spec.error, stream, config.n_validation);
  Vector y_train = x_train * spec.beta_star + eps_train;
  Vector y_val = x_val * spec.beta_star + eps_val;
  const Dataset train = Dataset::from_raw(std::move(x_train), std::move(y_train));
  const Dataset validation = Dataset::from_raw(std::move(x_val), std::move(y_val));

  ReplicationRecord record;
  record.replication = rep_index;
  for (const std::string& method : config.methods) {
    MethodRecord result;
    try {
      const FitResult fit = fit_method(method, config, train, validation);
      result.me = model_error(fit.beta, spec);
      const auto [nc, nic] = selection_counts(fit.selected, spec);
      result.nc = nc;
      result.nic = nic;
    } catch (const std::exception& err) {
      result.failed = true;
      result.error_message = err.what();
    }
    record.methods.emplace(method, std::move(result));
  }
  return record;
}

SimulationReport run_study(const SimulationConfig& config) {
  validate_config(config);
  SimulationReport report;
  report.config = config;
  report.records.resize(config.replications);

  const int workers = worker_count(config.replications);
  if (workers <= 1) {
    for (int rep = 0; rep < config.replications; ++rep) {
      report.records[rep] = run_replication(config, rep);
    }
  } else {
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto pull = [&]() {
      try {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= config.replications) return;
          report.records[rep] = run_replication(config, rep);
        }
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(pull);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  for (const std::string& method : config.methods) {
    MethodSummary summary;
    std::vector<double> mes;
    double sum_me = 0.0;
    double sum_nc = 0.0;
    double sum_nic = 0.0;
    for (const ReplicationRecord& record : report.records) {
      const MethodRecord& rec = record.methods.at(method);
      if (rec.failed) {
        ++summary.failures;
        continue;
      }
      ++summary.successes;
      sum_me += rec.me;
      sum_nc += rec.nc;
      sum_nic += rec.nic;
      mes.push_back(rec.me);
    }
    if (summary.successes > 0) {
      summary.mean_me = sum_me / summary.successes;
      summary.mean_nc = sum_nc / summary.successes;
      summary.mean_nic = sum_nic / summary.successes;
      std::sort(mes.begin(), mes.end());
      const size_t mid = mes.size() / 2;
      summary.median_me =
          mes.size() % 2 == 1 ? mes[mid] : 0.5 * (mes[mid - 1] + mes[mid]);
    }
    report.summary.emplace(method, summary);
  }
  return report;
}

namespace {

SimulationConfig config_from_parsed(const json& j) {
  const std::vector<double> beta = j.at("beta_star").get<std::vector<double>>();
  const int p = static_cast<int>(beta.size());
  Vector beta_star = Eigen::Map<const Vector>(beta.data(), p);
  Matrix sigma_x = Matrix::Identity(p, p);
  if (j.contains("sigma_x")) {
    const auto rows = j.at("sigma_x").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != p) {
      throw std::invalid_argument("simulation config: sigma_x must be p x p");
    }
    for (int i = 0; i < p; ++i) {
      if (static_cast<int>(rows[i].size()) != p) {
        throw std::invalid_argument("simulation config: sigma_x must be p x p");
      }
      for (int k = 0; k < p; ++k) sigma_x(i, k) = rows[i][k];
    }
  }
  SimulationConfig config;
  config.spec = LinearModelSpec::make(std::move(beta_star), std::move(sigma_x),
                                      error_from_json(j.at("error")));
  config.n_train = j.value("n_train", 100);
  config.n_validation = j.value("n_validation", 100);
  config.replications = j.value("replications", 100);
  if (j.contains("quantile_levels")) {
    const auto levels = j.at("quantile_levels").get<std::vector<double>>();
    if (levels.empty()) throw std::invalid_argument("simulation config: empty quantile_levels");
    QuantileGrid grid;
    grid.levels = Eigen::Map<const Vector>(levels.data(), static_cast<int>(levels.size()));
    for (int k = 0; k < grid.size(); ++k) {
      if (!(grid.levels[k] > 0.0 && grid.levels[k] < 1.0) ||
          (k > 0 && grid.levels[k] <= grid.levels[k - 1])) {
        throw std::invalid_argument(
            "simulation config: quantile_levels must be strictly increasing in (0,1)");
      }
    }
    config.grid = grid;
  } else {
    config.grid = QuantileGrid::equally_spaced(j.value("K", 19));
  }
  if (j.contains("lambda_grid")) {
    const auto lambdas = j.at("lambda_grid").get<std::vector<double>>();
    config.lambda_grid = Eigen::Map<const Vector>(lambdas.data(), static_cast<int>(lambdas.size()));
  }
  if (j.contains("methods")) config.methods = j.at("methods").get<std::vector<std::string>>();
  config.seed = j.value("seed", std::uint64_t{1});
  validate_config(config);
  return config;
}

}  // namespace

SimulationConfig simulation_config_from_json(const std::string& text) {
  try {
    return config_from_parsed(json::parse(text));
  } catch (const json::exception& err) {
    // Parse failures, missing keys, and type mismatches are all input errors.
    throw std::invalid_argument(std::string("simulation config: ") + err.what());
  }
}

std::string simulation_report_to_json(const SimulationReport& report) {
  json j;
  j["config"] = config_to_json(report.config);
  json summary;
  for (const auto& [method, s] : report.summary) {
    json row;
    row["mean_me"] = s.mean_me;
    row["median_me"] = s.median_me;
    row["mean_nc"] = s.mean_nc;
    row["mean_nic"] = s.mean_nic;
    row["failures"] = s.failures;
    row["successes"] = s.successes;
    summary[method] = row;
  }
  j["summary"] = summary;
  json reps = json::array();
  for (const ReplicationRecord& record : report.records) {
    json r;
    r["replication"] = record.replication;
    json methods;
    for (const auto& [method, rec] : record.methods) {
      json m;
      m["failed"] = rec.failed;
      if (rec.failed) {
        m["error"] = rec.error_message;
      } else {
        m["me"] = rec.me;
        m["nc"] = rec.nc;
        m["nic"] = rec.nic;
      }
      methods[method] = m;
    }
    r["methods"] = methods;
    reps.push_back(r);
  }
  j["replications"] = reps;
  return j.dump(2) + "\n";
}

std::string simulation_report_to_csv(const SimulationReport& report) {
  std::ostringstream out;
  out << "method,replication,ME,NC,NIC\n";
  json value;  // reuse nlohmann's shortest round-trip double formatting
  for (const ReplicationRecord& record : report.records) {
    for (const auto& [method, rec] : record.methods) {
      if (rec.failed) continue;
      value = rec.me;
      out << method << ',' << record.replication << ',' << value.dump() << ',' << rec.nc << ','
          << rec.nic << '\n';
    }
  }
  return out.str();
}

}  // namespace cqr

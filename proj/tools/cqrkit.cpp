#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqr/efficiency.hpp"
#include "cqr/estimators.hpp"
#include "cqr/simulation.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

/// Problems with user-supplied input (files, flags, config) exit with 2;
/// anything thrown past them by the numerics exits with 3.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double x) { return json(x).dump(); }

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open output file: " + path);
  out << content;
  if (!out) throw InputError("failed to write output file: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

struct CsvTable {
  std::vector<std::string> names;
  cqr::Matrix values;
};

/// Comma-separated, header row required, '.' decimal point.
CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError("CSV file is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CsvTable table;
  table.names = split_line(line);
  if (table.names.empty()) throw InputError("CSV header row has no columns: " + path);
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != table.names.size()) {
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.names.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (size_t j = 0; j < fields.size(); ++j) {
      const char* begin = fields[j].c_str();
      char* end = nullptr;
      row[j] = std::strtod(begin, &end);
      if (end == begin || *end != '\0' || !std::isfinite(row[j])) {
        throw InputError(path + ":" + std::to_string(line_no) + ": not a finite number: '" +
                         fields[j] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("CSV file has no data rows: " + path);
  table.values.resize(static_cast<int>(rows.size()), static_cast<int>(table.names.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      table.values(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  return table;
}

cqr::Dataset dataset_from_csv(const std::string& path, const std::string& response) {
  const CsvTable table = read_csv(path);
  int y_col = -1;
  for (size_t j = 0; j < table.names.size(); ++j) {
    if (table.names[j] == response) {
      y_col = static_cast<int>(j);
      break;
    }
  }
  if (y_col < 0) throw InputError("response column '" + response + "' not found in " + path);
  const int n = static_cast<int>(table.values.rows());
  const int p = static_cast<int>(table.names.size()) - 1;
  cqr::Matrix X(n, p);
  std::vector<std::string> names;
  int t = 0;
  for (size_t j = 0; j < table.names.size(); ++j) {
    if (static_cast<int>(j) == y_col) continue;
    X.col(t) = table.values.col(static_cast<int>(j));
    names.push_back(table.names[j]);
    ++t;
  }
  return cqr::Dataset::from_raw(std::move(X), table.values.col(y_col), std::move(names));
}

cqr::ErrorDistribution make_distribution(const std::string& name, double mu, double sigma2,
                                         double v, double r, double alpha, double scale) {
  switch (cqr::kind_from_name(name)) {
    case cqr::DistKind::normal:
      return cqr::ErrorDistribution::normal(mu, sigma2, scale);
    case cqr::DistKind::double_exponential:
      return cqr::ErrorDistribution::double_exponential(scale);
    case cqr::DistKind::logistic:
      return cqr::ErrorDistribution::logistic(scale);
    case cqr::DistKind::student_t:
      return cqr::ErrorDistribution::student_t(v, scale);
    case cqr::DistKind::cauchy:
      return cqr::ErrorDistribution::cauchy(scale);
    case cqr::DistKind::normal_mixture:
      return cqr::ErrorDistribution::normal_mixture(r, scale);
    case cqr::DistKind::double_gamma_mixture:
      return cqr::ErrorDistribution::double_gamma_mixture(alpha, scale);
  }
  throw InputError("unknown distribution: " + name);
}

ordered_json fit_to_json(const cqr::FitResult& fit, const std::vector<std::string>& names) {
  ordered_json j;
  j["method"] = fit.method;
  ordered_json beta;
  for (int k = 0; k < fit.beta.size(); ++k) beta[names[k]] = fit.beta[k];
  j["beta"] = beta;
  j["intercepts"] = std::vector<double>(fit.intercepts.data(),
                                        fit.intercepts.data() + fit.intercepts.size());
  j["quantile_levels"] = std::vector<double>(fit.grid_levels.data(),
                                             fit.grid_levels.data() + fit.grid_levels.size());
  std::vector<std::string> selected;
  for (int k : fit.selected) selected.push_back(names[k]);
  j["selected"] = selected;
  j["objective"] = fit.objective;
  if (fit.lambda.has_value()) {
    j["lambda"] = *fit.lambda;
  } else {
    j["lambda"] = nullptr;
  }
  return j;
}

cqr::Vector parse_lambda_list(const std::string& text) {
  std::vector<double> values;
  std::istringstream stream(text);
  std::string field;
  while (std::getline(stream, field, ',')) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(value) || value < 0.0) {
      throw InputError("bad lambda grid entry: '" + field + "'");
    }
    values.push_back(value);
  }
  if (values.empty()) throw InputError("empty lambda grid");
  return Eigen::Map<const cqr::Vector>(values.data(), static_cast<int>(values.size()));
}

int cmd_fit(const std::string& csv_path, const std::string& response, const std::string& method,
            double tau, int K, const std::string& lambda_text, const std::string& validation_path,
            const std::string& out_path) {
  if (method == "qr" && !(tau > 0.0 && tau < 1.0)) {
    throw InputError("--tau must lie strictly between 0 and 1");
  }
  if ((method == "cqr" || method == "acqr") && K < 1) {
    throw InputError("--K must be at least 1");
  }
  const cqr::Dataset data = dataset_from_csv(csv_path, response);
  std::optional<cqr::Dataset> validation;
  if (method == "acqr") {
    if (validation_path.empty()) throw InputError("--validation is required for method acqr");
    validation = dataset_from_csv(validation_path, response);
  }
  cqr::FitResult fit;
  if (method == "ols") {
    fit = cqr::fit_ols(data);
  } else if (method == "qr") {
    fit = cqr::fit_qr(data, tau);
  } else if (method == "cqr") {
    fit = cqr::fit_cqr(data, cqr::QuantileGrid::equally_spaced(K));
  } else if (method == "acqr") {
    const cqr::Vector lambdas =
        lambda_text.empty() ? cqr::default_lambda_grid(data.n()) : parse_lambda_list(lambda_text);
    fit = cqr::fit_acqr(data, *validation, cqr::QuantileGrid::equally_spaced(K), lambdas);
  } else {
    throw InputError("unknown method: " + method);
  }
  write_output(out_path, fit_to_json(fit, data.column_names).dump(2) + "\n");
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& preset, int reps_override,
                 std::int64_t seed_override, const std::string& out_path,
                 const std::string& csv_path) {
  if (config_path.empty() == preset.empty()) {
    throw InputError("pass exactly one of --config and --preset");
  }
  cqr::SimulationConfig config;
  try {
    config = config_path.empty() ? cqr::SimulationConfig::preset(preset)
                                 : cqr::simulation_config_from_json(read_file(config_path));
  } catch (const std::invalid_argument& err) {
    throw InputError(err.what());
  }
  if (reps_override > 0) config.replications = reps_override;
  if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);

  const cqr::SimulationReport report = cqr::run_study(config);
  write_output(out_path, cqr::simulation_report_to_json(report));
  std::string csv_target = csv_path;
  if (csv_target.empty() && !out_path.empty() && out_path != "-") {
    csv_target = out_path;
    const std::string suffix = ".json";
    if (csv_target.size() > suffix.size() &&
        csv_target.compare(csv_target.size() - suffix.size(), suffix.size(), suffix) == 0) {
      csv_target.resize(csv_target.size() - suffix.size());
    }
    csv_target += ".csv";
  }
  if (!csv_target.empty()) write_output(csv_target, cqr::simulation_report_to_csv(report));
  return 0;
}

int cmd_efficiency(const cqr::ErrorDistribution& error, int K, const std::string& out_path) {
  const cqr::EfficiencyReport report = cqr::efficiency_report(error, K);
  ordered_json j;
  j["distribution"] = cqr::kind_name(error.kind);
  j["K"] = report.K;
  j["are_finite"] = report.are_finite ? json(*report.are_finite) : json(nullptr);
  j["delta_limit"] = report.delta_limit ? json(*report.delta_limit) : json(nullptr);
  j["convergence_ratio"] =
      report.convergence_ratio ? json(*report.convergence_ratio) : json(nullptr);
  j["lower_bound"] = report.lower_bound;
  if (!report.delta_limit.has_value()) {
    j["note"] = "infinite variance: efficiency relative to least squares is undefined";
  }
  write_output(out_path, j.dump(2) + "\n");
  return 0;
}

int cmd_curve(const std::string& family, double lo, double hi, int points,
              const cqr::ErrorDistribution& ratio_error, int k_min, int k_max,
              const std::string& out_path) {
  std::ostringstream out;
  if (family == "ratio") {
    if (k_min < 1 || k_max < k_min) throw InputError("bad K range");
    out << "K,ratio\n";
    try {
      for (int K = k_min; K <= k_max; ++K) {
        out << K << ',' << format_double(cqr::convergence_ratio(K, ratio_error)) << '\n';
      }
    } catch (const std::domain_error& err) {
      throw InputError(err.what());
    }
    write_output(out_path, out.str());
    return 0;
  }
  cqr::DistKind kind;
  if (family == "t") {
    kind = cqr::DistKind::student_t;
  } else if (family == "mixnormal") {
    kind = cqr::DistKind::normal_mixture;
  } else if (family == "dgamma") {
    kind = cqr::DistKind::double_gamma_mixture;
  } else {
    throw InputError("unknown family: " + family);
  }
  if (points < 2 || !(hi > lo)) throw InputError("bad parameter grid");
  cqr::Vector params(points);
  for (int i = 0; i < points; ++i) {
    params[i] = lo + (hi - lo) * i / (points - 1);
  }
  std::vector<cqr::CurvePoint> curve;
  try {
    curve = cqr::delta_curve(kind, params);
  } catch (const std::domain_error& err) {
    throw InputError(err.what());
  }
  out << "parameter,delta\n";
  for (const cqr::CurvePoint& point : curve) {
    out << format_double(point.parameter) << ',' << format_double(point.delta) << '\n';
  }
  write_output(out_path, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"composite quantile regression toolkit"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "fit a model to CSV data");
  std::string fit_csv, fit_response = "y", fit_method, fit_lambda_text, fit_validation, fit_out;
  double fit_tau = 0.5;
  int fit_K = 19;
  fit->add_option("--csv", fit_csv, "input CSV (header row required)")->required();
  fit->add_option("--response", fit_response, "response column name (default y)");
  fit->add_option("--method", fit_method, "ols, qr, cqr, or acqr")->required();
  fit->add_option("--tau", fit_tau, "quantile level for method qr (default 0.5)");
  fit->add_option("--K", fit_K, "number of equally spaced quantile levels (default 19)");
  fit->add_option("--lambda-grid", fit_lambda_text, "comma-separated penalty levels (acqr)");
  fit->add_option("--validation", fit_validation, "validation CSV (required for acqr)");
  fit->add_option("--out", fit_out, "output JSON path (default stdout)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo study");
  std::string sim_config, sim_preset, sim_out, sim_csv;
  int sim_reps = 0;
  std::int64_t sim_seed = -1;
  simulate->add_option("--config", sim_config, "JSON study configuration");
  simulate->add_option("--preset", sim_preset, "named benchmark setting ex1..ex5");
  simulate->add_option("--reps", sim_reps, "override replication count");
  simulate->add_option("--seed", sim_seed, "override RNG seed");
  simulate->add_option("--out", sim_out, "report JSON path (default stdout)");
  simulate->add_option("--csv", sim_csv, "per-replication CSV path (default: out with .csv)");

  // shared distribution flags for efficiency/curve
  std::string dist_name = "normal";
  double dist_mu = 0.0, dist_sigma2 = 1.0, dist_v = 3.0, dist_r = 0.5, dist_alpha = 0.0,
         dist_scale = 1.0;
  auto add_dist_flags = [&](CLI::App* cmd) {
    cmd->add_option("--dist", dist_name, "distribution kind");
    cmd->add_option("--mu", dist_mu, "normal mean");
    cmd->add_option("--sigma2", dist_sigma2, "normal variance");
    cmd->add_option("--v", dist_v, "t degrees of freedom");
    cmd->add_option("--r", dist_r, "normal-mixture contamination fraction");
    cmd->add_option("--alpha", dist_alpha, "double-gamma shape");
    cmd->add_option("--scale", dist_scale, "scale multiplier");
  };

  // efficiency
  auto* efficiency = app.add_subcommand("efficiency", "asymptotic efficiency report");
  std::string eff_out;
  int eff_K = 19;
  add_dist_flags(efficiency);
  efficiency->add_option("--K", eff_K, "number of quantile levels (default 19)");
  efficiency->add_option("--out", eff_out, "output JSON path (default stdout)");

  // curve
  auto* curve = app.add_subcommand("curve", "efficiency curve CSV");
  std::string curve_family, curve_out;
  double curve_min = std::numeric_limits<double>::quiet_NaN();
  double curve_max = std::numeric_limits<double>::quiet_NaN();
  int curve_points = 50, curve_k_min = 1, curve_k_max = 29;
  curve->add_option("--family", curve_family, "t, mixnormal, dgamma, or ratio")->required();
  curve->add_option("--min", curve_min, "smallest family parameter");
  curve->add_option("--max", curve_max, "largest family parameter");
  curve->add_option("--points", curve_points, "grid size (default 50)");
  add_dist_flags(curve);
  curve->add_option("--k-min", curve_k_min, "smallest K for family ratio (default 1)");
  curve->add_option("--k-max", curve_k_max, "largest K for family ratio (default 29)");
  curve->add_option("--out", curve_out, "output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) {
      return cmd_fit(fit_csv, fit_response, fit_method, fit_tau, fit_K, fit_lambda_text,
                     fit_validation, fit_out);
    }
    if (simulate->parsed()) {
      return cmd_simulate(sim_config, sim_preset, sim_reps, sim_seed, sim_out, sim_csv);
    }
    const cqr::ErrorDistribution error = [&] {
      try {
        return make_distribution(dist_name, dist_mu, dist_sigma2, dist_v, dist_r, dist_alpha,
                                 dist_scale);
      } catch (const std::invalid_argument& err) {
        throw InputError(err.what());
      }
    }();
    if (efficiency->parsed()) {
      if (eff_K < 1) throw InputError("--K must be at least 1");
      return cmd_efficiency(error, eff_K, eff_out);
    }
    if (curve->parsed()) {
      if (std::isnan(curve_min) || std::isnan(curve_max)) {
        if (curve_family == "t") {
          curve_min = 2.5;
          curve_max = 50.0;
        } else if (curve_family == "mixnormal") {
          curve_min = 0.05;
          curve_max = 0.95;
        } else if (curve_family == "dgamma") {
          curve_min = 0.0;
          curve_max = 40.0;
        } else {
          curve_min = 0.0;
          curve_max = 1.0;
        }
      }
      return cmd_curve(curve_family, curve_min, curve_max, curve_points, error, curve_k_min,
                       curve_k_max, curve_out);
    }
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 2;
}

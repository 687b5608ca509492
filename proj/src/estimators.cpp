#include "cqr/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cqr/lp.hpp"

namespace cqr {
namespace {

FitResult solve_cqr_problem(const Matrix& X, const Vector& y, const QuantileGrid& grid,
                            const Vector& penalty_weights, LpBasis* basis) {
  const LpProblem lp = build_cqr_lp(X, y, grid, penalty_weights);
  const LpSolution sol = solve_lp(lp, SimplexOptions{}, basis);
  if (sol.status != LpStatus::optimal) {
    const char* what = sol.status == LpStatus::infeasible    ? "infeasible"
                       : sol.status == LpStatus::unbounded   ? "unbounded"
                                                             : "iteration limit";
    throw std::runtime_error(std::string("composite quantile fit: LP solve failed (") + what +
                             ")");
  }
  CqrColumnMap map{static_cast<int>(X.rows()), grid.size(), static_cast<int>(X.cols())};
  FitResult fit;
  fit.beta = cqr_extract_beta(map, sol.x);
  fit.intercepts = cqr_extract_intercepts(map, sol.x);
  fit.grid_levels = grid.levels;
  fit.selected = selected_support(fit.beta);
  fit.objective = sol.objective;
  return fit;
}

}  // namespace

Dataset Dataset::from_raw(Matrix X_raw, Vector y, std::vector<std::string> names) {
  if (X_raw.rows() != y.size()) {
    throw std::invalid_argument("Dataset: X and y disagree on row count");
  }
  if (!names.empty() && static_cast<int>(names.size()) != X_raw.cols()) {
    throw std::invalid_argument("Dataset: column name count mismatch");
  }
  Dataset data;
  data.x_means = X_raw.cols() > 0 ? Vector(X_raw.colwise().mean()) : Vector(0);
  data.X = std::move(X_raw);
  data.X.rowwise() -= data.x_means.transpose();
  data.y = std::move(y);
  data.column_names = std::move(names);
  return data;
}

Dataset Dataset::restrict_to(const std::vector<int>& columns) const {
  if (columns.empty()) {
    throw std::invalid_argument("Dataset: column subset must not be empty");
  }
  Dataset out;
  out.X.resize(n(), static_cast<int>(columns.size()));
  out.x_means.resize(static_cast<int>(columns.size()));
  int t = 0;
  int last = -1;
  for (int j : columns) {
    if (j < 0 || j >= p() || j <= last) {
      throw std::invalid_argument("Dataset: column subset must be strictly increasing in [0, p)");
    }
    out.X.col(t) = X.col(j);
    out.x_means[t] = x_means[j];
    if (!column_names.empty()) out.column_names.push_back(column_names[j]);
    last = j;
    ++t;
  }
  out.y = y;
  return out;
}

LinearModelSpec LinearModelSpec::make(Vector beta_star, Matrix sigma_x, ErrorDistribution error) {
  if (sigma_x.rows() != beta_star.size() || sigma_x.cols() != beta_star.size()) {
    throw std::invalid_argument("LinearModelSpec: sigma_x must be p x p");
  }
  LinearModelSpec spec;
  spec.beta_star = std::move(beta_star);
  spec.sigma_x = std::move(sigma_x);
  spec.error = error;
  for (int j = 0; j < spec.beta_star.size(); ++j) {
    if (spec.beta_star[j] != 0.0) spec.support.push_back(j);
  }
  return spec;
}

double zero_threshold(const Vector& beta) {
  const double peak = beta.size() > 0 ? beta.cwiseAbs().maxCoeff() : 0.0;
  return 1e-8 * std::max(1.0, peak);
}

std::vector<int> selected_support(const Vector& beta) {
  const double threshold = zero_threshold(beta);
  std::vector<int> selected;
  for (int j = 0; j < beta.size(); ++j) {
    if (std::abs(beta[j]) > threshold) selected.push_back(j);
  }
  return selected;
}

double composite_check_loss(const Matrix& X, const Vector& y, const Vector& beta,
                            const Vector& intercepts, const Vector& levels) {
  if (intercepts.size() != levels.size()) {
    throw std::invalid_argument("composite_check_loss: intercepts and levels disagree");
  }
  const Vector xb = X * beta;
  double loss = 0.0;
  for (int k = 0; k < levels.size(); ++k) {
    for (int i = 0; i < y.size(); ++i) {
      loss += check_loss(y[i] - intercepts[k] - xb[i], levels[k]);
    }
  }
  return loss;
}

FitResult fit_ols(const Dataset& data) {
  const int n = data.n();
  const int p = data.p();
  if (n <= p) throw std::invalid_argument("fit_ols: need n > p");
  const double y_mean = data.y.mean();
  FitResult fit;
  fit.method = "ols";
  if (p > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(data.X);
    if (qr.rank() < p) throw std::runtime_error("fit_ols: design is rank deficient");
    fit.beta = qr.solve(data.y);
  } else {
    fit.beta = Vector(0);
  }
  fit.intercepts = Vector::Constant(1, y_mean);
  fit.grid_levels = Vector(0);
  fit.selected = selected_support(fit.beta);
  fit.objective = (data.y.array() - y_mean - (data.X * fit.beta).array()).square().sum();
  return fit;
}

FitResult fit_qr(const Dataset& data, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("fit_qr: tau must lie in (0,1)");
  QuantileGrid grid;
  grid.levels = Vector::Constant(1, tau);
  FitResult fit = solve_cqr_problem(data.X, data.y, grid, Vector(), nullptr);
  fit.method = "qr";
  return fit;
}

FitResult fit_cqr(const Dataset& data, const QuantileGrid& grid) {
  FitResult fit = solve_cqr_problem(data.X, data.y, grid, Vector(), nullptr);
  fit.method = "cqr";
  return fit;
}

Vector default_lambda_grid(int n) {
  if (n < 1) throw std::invalid_argument("default_lambda_grid: need n >= 1");
  const double root_n = std::sqrt(static_cast<double>(n));
  Vector grid(30);
  for (int i = 0; i < 30; ++i) {
    grid[i] = root_n * std::pow(10.0, -2.0 + 5.0 * i / 29.0);
  }
  return grid;
}

FitResult fit_acqr(const Dataset& train, const Dataset& validation, const QuantileGrid& grid,
                   const Vector& lambda_grid, const AcqrOptions& options) {
  if (lambda_grid.size() == 0) throw std::invalid_argument("fit_acqr: empty lambda grid");
  if (validation.p() != train.p()) {
    throw std::invalid_argument("fit_acqr: train/validation predictor mismatch");
  }
  const FitResult pilot = fit_cqr(train, grid);
  Vector weights(train.p());
  for (int j = 0; j < train.p(); ++j) {
    weights[j] =
        1.0 / (std::pow(std::abs(pilot.beta[j]), options.weight_exponent) + options.weight_floor);
  }

  // Validation rows must live in the training centering; shift by the
  // difference of the two column-mean vectors.
  Matrix x_val = validation.X;
  x_val.rowwise() += (validation.x_means - train.x_means).transpose();

  FitResult best;
  double best_loss = std::numeric_limits<double>::infinity();
  bool any_success = false;
  std::string last_error = "no lambda succeeded";
  LpBasis basis;
  for (int t = 0; t < lambda_grid.size(); ++t) {
    const double lambda = lambda_grid[t];
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("fit_acqr: lambda grid entries must be finite and nonnegative");
    }
    FitResult fit;
    try {
      fit = solve_cqr_problem(train.X, train.y, grid, lambda * weights,
                              options.warm_start ? &basis : nullptr);
    } catch (const std::runtime_error& err) {
      last_error = err.what();
      continue;
    }
    any_success = true;
    const double loss =
        composite_check_loss(x_val, validation.y, fit.beta, fit.intercepts, grid.levels);
    if (loss < best_loss) {
      best_loss = loss;
      best = std::move(fit);
      best.lambda = lambda;
    }
  }
  if (!any_success) {
    throw std::runtime_error("fit_acqr: every penalty level failed: " + last_error);
  }
  best.method = "acqr";
  return best;
}

FitResult fit_oracle(const Dataset& data, const std::vector<int>& support, OracleMethod method,
                     const QuantileGrid& grid) {
  if (support.empty()) throw std::domain_error("fit_oracle: empty support");
  const Dataset restricted = data.restrict_to(support);
  FitResult sub = method == OracleMethod::ls ? fit_ols(restricted) : fit_cqr(restricted, grid);
  FitResult fit;
  fit.method = method == OracleMethod::ls ? "ls_oracle" : "cqr_oracle";
  fit.beta = Vector::Zero(data.p());
  for (size_t t = 0; t < support.size(); ++t) fit.beta[support[t]] = sub.beta[t];
  fit.intercepts = sub.intercepts;
  fit.grid_levels = sub.grid_levels;
  fit.selected = selected_support(fit.beta);
  fit.objective = sub.objective;
  return fit;
}

Vector predict(const FitResult& fit, const Matrix& X_new, std::optional<double> tau) {
  if (X_new.cols() != fit.beta.size()) {
    throw std::invalid_argument("predict: column count does not match the fit");
  }
  double intercept = 0.0;
  if (tau.has_value()) {
    int found = -1;
    for (int k = 0; k < fit.grid_levels.size(); ++k) {
      if (std::abs(fit.grid_levels[k] - *tau) <= 1e-12) {
        found = k;
        break;
      }
    }
    if (found < 0) throw std::domain_error("predict: tau is not one of the fit's quantile levels");
    intercept = fit.intercepts[found];
  } else {
    if (fit.intercepts.size() != 1) {
      throw std::domain_error("predict: tau required for multi-quantile fits");
    }
    intercept = fit.intercepts[0];
  }
  return (X_new * fit.beta).array() + intercept;
}

}  // namespace cqr

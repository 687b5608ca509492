#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cqr/distributions.hpp"
#include "cqr/numerics.hpp"
#include "cqr/quantile_grid.hpp"

namespace cqr {

/// Regression data with centered predictors. Columns of X have their means
/// removed on construction; the removed means are kept so new rows (or a
/// validation split) can be shifted into the same coordinates.
struct Dataset {
  Matrix X;       ///< centered design, n x p
  Vector y;       ///< response, length n
  Vector x_means; ///< column means removed from X
  std::vector<std::string> column_names;  ///< optional; empty or length p

  static Dataset from_raw(Matrix X_raw, Vector y, std::vector<std::string> names = {});

  /// Subset of columns (0-based, strictly increasing); keeps centering info.
  Dataset restrict_to(const std::vector<int>& columns) const;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

/// Generative linear model: y = x'beta_star + eps with x ~ N(0, sigma_x).
struct LinearModelSpec {
  Vector beta_star;
  std::vector<int> support;  ///< 0-based indices j with beta_star[j] != 0
  Matrix sigma_x;
  ErrorDistribution error;

  static LinearModelSpec make(Vector beta_star, Matrix sigma_x, ErrorDistribution error);

  int p() const { return static_cast<int>(beta_star.size()); }
  int q() const { return static_cast<int>(support.size()); }
};

struct FitResult {
  std::string method;
  Vector beta;
  Vector intercepts;   ///< one per quantile level; length 1 for least squares
  Vector grid_levels;  ///< quantile levels matching intercepts; empty for least squares
  std::vector<int> selected;  ///< 0-based indices with |beta_j| above zero_threshold
  double objective = 0.0;
  std::optional<double> lambda;  ///< recorded by the penalized fit only
};

/// Coefficients below this are treated as exact zeros when reporting support.
double zero_threshold(const Vector& beta);
std::vector<int> selected_support(const Vector& beta);

double composite_check_loss(const Matrix& X, const Vector& y, const Vector& beta,
                            const Vector& intercepts, const Vector& levels);

FitResult fit_ols(const Dataset& data);
FitResult fit_qr(const Dataset& data, double tau);
FitResult fit_cqr(const Dataset& data, const QuantileGrid& grid);

struct AcqrOptions {
  double weight_floor = 1e-12;
  double weight_exponent = 2.0;  ///< exponent on |pilot beta_j| in 1/(|b|^e + floor)
  bool warm_start = true;        ///< reuse the previous basis across the lambda sweep
};

/// 30 log-spaced penalty levels spanning [1e-2, 1e3] * sqrt(n).
Vector default_lambda_grid(int n);

FitResult fit_acqr(const Dataset& train, const Dataset& validation, const QuantileGrid& grid,
                   const Vector& lambda_grid, const AcqrOptions& options = {});

enum class OracleMethod { ls, cqr };

/// Fit on the columns in `support` only; coefficients elsewhere are fixed at 0.
FitResult fit_oracle(const Dataset& data, const std::vector<int>& support, OracleMethod method,
                     const QuantileGrid& grid);

/// x'beta + b for the requested quantile level (omit tau for single-intercept
/// fits). X_new must be in the same (centered) coordinates as the training X.
Vector predict(const FitResult& fit, const Matrix& X_new, std::optional<double> tau = {});

}  // namespace cqr

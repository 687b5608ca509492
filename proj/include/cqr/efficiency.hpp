#pragma once

#include <optional>
#include <vector>

#include "cqr/distributions.hpp"
#include "cqr/numerics.hpp"
#include "cqr/quantile_grid.hpp"

namespace cqr {

/// Limiting covariance of the composite quantile slope: factor * C^{-1}.
struct AsymptoticCovariance {
  Matrix matrix;
  double factor = 0.0;
};

struct EfficiencyReport {
  ErrorDistribution error;
  int K = 0;
  std::optional<double> are_finite;         ///< empty when the variance is infinite
  std::optional<double> delta_limit;        ///< empty when the variance is infinite
  std::optional<double> convergence_ratio;  ///< empty when the variance is infinite
  double lower_bound = 0.0;
};

/// Scalar multiplying C^{-1} in the limiting covariance:
/// [sum_{k,k'} min(tau_k, tau_k')(1 - max(tau_k, tau_k'))] / [sum_k f(q_{tau_k})]^2.
double cqr_variance_factor(const QuantileGrid& grid, const ErrorDistribution& error);

AsymptoticCovariance asymptotic_cov_cqr(const QuantileGrid& grid, const ErrorDistribution& error,
                                        const Matrix& C);

/// Efficiency relative to least squares at a finite grid: variance / factor.
double are_finite_k(const QuantileGrid& grid, const ErrorDistribution& error);

/// K -> infinity efficiency limit, 12 sigma^2 (E[f(eps)])^2, via quadrature.
double delta_limit(const ErrorDistribution& error);

/// The same limit in closed form; defined for student_t (v > 2),
/// normal_mixture, and double_gamma_mixture.
double delta_closed_form(const ErrorDistribution& error);

/// 6/(e*pi), the infimum of the efficiency limit over all finite-variance laws.
double universal_lower_bound();

/// are_finite_k on the equally spaced K-grid divided by delta_limit.
double convergence_ratio(int K, const ErrorDistribution& error);

EfficiencyReport efficiency_report(const ErrorDistribution& error, int K);

struct CurvePoint {
  double parameter = 0.0;
  double delta = 0.0;
};

/// Efficiency limit as a function of the family parameter (v, r, or alpha).
/// Each closed-form value is cross-checked against the quadrature route.
std::vector<CurvePoint> delta_curve(DistKind family, const Vector& parameters);

}  // namespace cqr

#pragma once

#include "cqr/numerics.hpp"

#include <optional>
#include <string>

namespace cqr {

enum class DistKind {
  normal,
  double_exponential,
  logistic,
  student_t,
  cauchy,
  normal_mixture,
  double_gamma_mixture,
};

/// A named error law. The base law is stretched as eps = scale * eps*, so
/// densities shrink by 1/scale and quantiles grow by scale.
struct ErrorDistribution {
  DistKind kind = DistKind::normal;
  double mu = 0.0;      // normal mean
  double sigma2 = 1.0;  // normal variance
  double v = 3.0;       // student_t degrees of freedom, v >= 1
  double r = 0.5;       // normal_mixture weight, 0 < r < 1
  double alpha = 0.0;   // double_gamma_mixture shape, alpha >= 0
  double scale = 1.0;

  static ErrorDistribution normal(double mu, double sigma2, double scale = 1.0);
  static ErrorDistribution double_exponential(double scale = 1.0);
  static ErrorDistribution logistic(double scale = 1.0);
  static ErrorDistribution student_t(double v, double scale = 1.0);
  static ErrorDistribution cauchy(double scale = 1.0);
  /// (1-r) N(0,1) + r N(0, r^6).
  static ErrorDistribution normal_mixture(double r, double scale = 1.0);
  /// exp(-alpha) on the double-exponential component, the rest on the
  /// double gamma with shape alpha.
  static ErrorDistribution double_gamma_mixture(double alpha, double scale = 1.0);
};

double pdf(const ErrorDistribution& d, double x);
double cdf(const ErrorDistribution& d, double x);

/// Inverse cdf; closed form where the law admits one, otherwise bracketed
/// bisection on the cdf to 1e-12.
double quantile(const ErrorDistribution& d, double u);

/// Variance of the scaled law; empty means infinite (cauchy, student_t with
/// v <= 2).
std::optional<double> variance(const ErrorDistribution& d);

/// n i.i.d. draws.
Vector sample(const ErrorDistribution& d, RngStream& rng, int n);

/// E[f(eps)] where f is the law's own density, the quantity driving the
/// K -> infinity efficiency limit. Closed form for normal, double
/// exponential and logistic; quadrature of u -> f(F^{-1}(u)) otherwise.
double mean_density(const ErrorDistribution& d);

std::string kind_name(DistKind kind);
DistKind kind_from_name(const std::string& name);

}  // namespace cqr

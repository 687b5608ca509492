#include "cqr/efficiency.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace cqr {
namespace {

double finite_variance_or_throw(const ErrorDistribution& error) {
  const std::optional<double> var = variance(error);
  if (!var.has_value()) {
    throw std::domain_error("efficiency: undefined for infinite-variance errors");
  }
  return *var;
}

}  // namespace

double cqr_variance_factor(const QuantileGrid& grid, const ErrorDistribution& error) {
  const int K = grid.size();
  double density_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const double q = quantile(error, grid.levels[k]);
    const double f = pdf(error, q);
    if (!(f > 1e-300)) {
      throw std::domain_error("cqr_variance_factor: density vanishes at a required quantile");
    }
    density_sum += f;
  }
  double numerator = 0.0;
  for (int k = 0; k < K; ++k) {
    for (int k2 = 0; k2 < K; ++k2) {
      const double lo = std::min(grid.levels[k], grid.levels[k2]);
      const double hi = std::max(grid.levels[k], grid.levels[k2]);
      numerator += lo * (1.0 - hi);
    }
  }
  return numerator / (density_sum * density_sum);
}

AsymptoticCovariance asymptotic_cov_cqr(const QuantileGrid& grid, const ErrorDistribution& error,
                                        const Matrix& C) {
  if (C.rows() != C.cols()) throw std::invalid_argument("asymptotic_cov_cqr: C must be square");
  cholesky(C);  // validates symmetry and positive definiteness
  AsymptoticCovariance cov;
  cov.factor = cqr_variance_factor(grid, error);
  const Eigen::LLT<Matrix> llt(C);
  Matrix inverse = llt.solve(Matrix::Identity(C.rows(), C.cols()));
  inverse = 0.5 * (inverse + inverse.transpose()).eval();
  cov.matrix = cov.factor * inverse;
  return cov;
}

double are_finite_k(const QuantileGrid& grid, const ErrorDistribution& error) {
  const double var = finite_variance_or_throw(error);
  return var / cqr_variance_factor(grid, error);
}

double delta_limit(const ErrorDistribution& error) {
  const double var = finite_variance_or_throw(error);
  const double ef = mean_density(error);
  return 12.0 * var * ef * ef;
}

double delta_closed_form(const ErrorDistribution& error) {
  switch (error.kind) {
    case DistKind::student_t: {
      const double v = error.v;
      if (!(v > 2.0)) {
        throw std::domain_error("delta_closed_form: student_t needs v > 2");
      }
      const double g1 = std::exp(std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v));
      const double g2 = std::exp(std::lgamma(v + 0.5) - std::lgamma(v + 1.0));
      return (12.0 / M_PI) * (1.0 / (v - 2.0)) * std::pow(g1, 4.0) * g2 * g2;
    }
    case DistKind::normal_mixture: {
      const double r = error.r;
      const double bracket = (1.0 - r) * (1.0 - r) + 1.0 / r +
                             2.0 * std::sqrt(2.0) * r * (1.0 - r) / std::sqrt(1.0 + std::pow(r, 6.0));
      return (3.0 / M_PI) * bracket * bracket * (1.0 - r + std::pow(r, 7.0));
    }
    case DistKind::double_gamma_mixture: {
      const double a = error.alpha;
      const double w = std::exp(-a);
      const double var = 2.0 * w + (1.0 - w) * (a + 1.0) * (a + 2.0);
      const double third =
          (1.0 - w) * (1.0 - w) *
          std::exp(std::lgamma(2.0 * a + 1.0) - (a + 1.0) * std::log(4.0) -
                   2.0 * std::lgamma(a + 1.0));
      const double mean_f = w * w / 4.0 + w * (1.0 - w) / std::pow(2.0, a + 1.0) + third;
      return 12.0 * var * mean_f * mean_f;
    }
    default:
      throw std::domain_error("delta_closed_form: no closed form for this distribution kind");
  }
}

double universal_lower_bound() { return 6.0 / (M_E * M_PI); }

double convergence_ratio(int K, const ErrorDistribution& error) {
  if (K < 1) throw std::domain_error("convergence_ratio: need K >= 1");
  return are_finite_k(QuantileGrid::equally_spaced(K), error) / delta_limit(error);
}

EfficiencyReport efficiency_report(const ErrorDistribution& error, int K) {
  if (K < 1) throw std::domain_error("efficiency_report: need K >= 1");
  EfficiencyReport report;
  report.error = error;
  report.K = K;
  report.lower_bound = universal_lower_bound();
  if (variance(error).has_value()) {
    report.are_finite = are_finite_k(QuantileGrid::equally_spaced(K), error);
    report.delta_limit = delta_limit(error);
    report.convergence_ratio = *report.are_finite / *report.delta_limit;
  }
  return report;
}

std::vector<CurvePoint> delta_curve(DistKind family, const Vector& parameters) {
  std::vector<CurvePoint> curve;
  curve.reserve(parameters.size());
  for (int i = 0; i < parameters.size(); ++i) {
    const double param = parameters[i];
    ErrorDistribution error;
    switch (family) {
      case DistKind::student_t:
        error = ErrorDistribution::student_t(param);
        break;
      case DistKind::normal_mixture:
        error = ErrorDistribution::normal_mixture(param);
        break;
      case DistKind::double_gamma_mixture:
        error = ErrorDistribution::double_gamma_mixture(param);
        break;
      default:
        throw std::domain_error("delta_curve: family must be student_t, normal_mixture, or "
                                "double_gamma_mixture");
    }
    const double closed = delta_closed_form(error);
    const double quad = delta_limit(error);
    if (std::abs(closed - quad) > 1e-4 * std::abs(closed)) {
      throw std::runtime_error(
          "delta_curve: closed-form and quadrature efficiency limits disagree");
    }
    curve.push_back({param, closed});
  }
  return curve;
}

}  // namespace cqr

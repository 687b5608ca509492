#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>

namespace cqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Asymmetric absolute loss tau*t_+ + (1-tau)*t_-; its minimizer over a
/// sample is the tau-quantile.
template <typename Scalar>
Scalar check_loss(Scalar t, Scalar tau) {
  if (!(tau > Scalar(0) && tau < Scalar(1))) {
    throw std::domain_error("check_loss: tau must lie in (0,1)");
  }
  return t >= Scalar(0) ? tau * t : (tau - Scalar(1)) * t;
}

/// Lower-triangular L with L*L^T = A. Throws std::domain_error if A is not
/// symmetric positive definite.
Matrix cholesky(const Matrix& a);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, Vector& nodes, Vector& weights);

/// Composite Gauss-Legendre estimate of the integral of g over the unit
/// interval. The rule is laid out on (1e-10, 1 - 1e-10) so quantile-transform
/// integrands never see the endpoint singularities of F^{-1}. `nodes` is the
/// total node count (>= 16), split into 16-point panels.
double quadrature_unit_interval(const std::function<double(double)>& g, int nodes = 512);

/// Counter-based 64-bit generator (SplitMix64). Identical seeds give
/// identical draw sequences; split() derives an independent stream for a
/// given index, so parallel replications stay reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform draw strictly inside (0, 1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method.
  double next_normal();

  /// Independent stream derived from this stream's seed and an index.
  RngStream split(std::uint64_t index) const;

 private:
  std::uint64_t state_;
};

/// n rows of mean + L*z with z standard normal and L = cholesky(cov).
Matrix sample_mvnormal(RngStream& rng, const Vector& mean, const Matrix& cov, int n);

}  // namespace cqr

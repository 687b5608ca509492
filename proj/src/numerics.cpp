#include "cqr/numerics.hpp"

#include <cmath>
#include <limits>

namespace cqr {

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::domain_error("cholesky: matrix must be square");
  }
  const double scale = a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale)) {
    throw std::domain_error("cholesky: matrix must be symmetric");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("cholesky: not positive definite");
  }
  return llt.matrixL();
}

void gauss_legendre(int n, Vector& nodes, Vector& weights) {
  nodes.resize(n);
  weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-angle initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

double quadrature_unit_interval(const std::function<double(double)>& g, int nodes) {
  if (nodes < 16) {
    throw std::domain_error("quadrature_unit_interval: need at least 16 nodes");
  }
  constexpr int kPanelNodes = 16;
  constexpr double kEdge = 1e-10;
  const int panels = (nodes + kPanelNodes - 1) / kPanelNodes;

  static thread_local Vector base_nodes, base_weights;
  if (base_nodes.size() != kPanelNodes) {
    gauss_legendre(kPanelNodes, base_nodes, base_weights);
  }

  const double lo = kEdge;
  const double hi = 1.0 - kEdge;
  const double h = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * h;
    const double mid = a + 0.5 * h;
    double acc = 0.0;
    for (int j = 0; j < kPanelNodes; ++j) {
      const double u = mid + 0.5 * h * base_nodes[j];
      const double value = g(u);
      if (!std::isfinite(value)) {
        throw std::runtime_error("quadrature_unit_interval: integrand not finite at interior node");
      }
      acc += base_weights[j] * value;
    }
    total += 0.5 * h * acc;
  }
  return total;
}

double RngStream::next_normal() {
  for (;;) {
    const double u = 2.0 * next_uniform() - 1.0;
    const double v = 2.0 * next_uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

RngStream RngStream::split(std::uint64_t index) const {
  // Feed (seed, index) through one SplitMix64 round so streams with nearby
  // indices decorrelate.
  std::uint64_t z = state_ + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return RngStream(z ^ (z >> 31));
}

Matrix sample_mvnormal(RngStream& rng, const Vector& mean, const Matrix& cov, int n) {
  const auto p = mean.size();
  if (cov.rows() != p || cov.cols() != p) {
    throw std::domain_error("sample_mvnormal: mean/cov dimension mismatch");
  }
  const Matrix chol_lower = cholesky(cov);
  Matrix draws(n, p);
  Vector z(p);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      z[j] = rng.next_normal();
    }
    draws.row(i) = (mean + chol_lower * z).transpose();
  }
  return draws;
}

}  // namespace cqr

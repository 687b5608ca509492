#include "cqr/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cqr {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

/// Acklam's rational approximation, polished with one Halley step.
double normal_quantile(double u) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (u < p_low) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - p_low) {
    const double q = u - 0.5;
    const double t = q * q;
    x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * q /
        (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double err = normal_cdf(x) - u;
  const double step = err / normal_pdf(x);
  return x - step / (1.0 + 0.5 * x * step);
}

double beta_continued_fraction(double a, double b, double x) {
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 400; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                        a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(log_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - bt * beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Regularized lower incomplete gamma P(a, x).
double reg_lower_gamma(double a, double x) {
  if (x <= 0.0) return 0.0;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 1; n <= 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(log_prefactor);
  }
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return 1.0 - std::exp(log_prefactor) * h;
}

// ---- standard (scale = 1) laws -------------------------------------------

double std_pdf(const ErrorDistribution& d, double x) {
  switch (d.kind) {
    case DistKind::normal: {
      const double sigma = std::sqrt(d.sigma2);
      return normal_pdf((x - d.mu) / sigma) / sigma;
    }
    case DistKind::double_exponential:
      return 0.5 * std::exp(-std::abs(x));
    case DistKind::logistic: {
      const double e = std::exp(-std::abs(x));
      const double denom = 1.0 + e;
      return e / (denom * denom);
    }
    case DistKind::student_t: {
      const double v = d.v;
      const double log_norm =
          std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) - 0.5 * std::log(v * M_PI);
      return std::exp(log_norm - 0.5 * (v + 1.0) * std::log1p(x * x / v));
    }
    case DistKind::cauchy:
      return 1.0 / (M_PI * (1.0 + x * x));
    case DistKind::normal_mixture: {
      const double s = d.r * d.r * d.r;
      return (1.0 - d.r) * normal_pdf(x) + d.r * normal_pdf(x / s) / s;
    }
    case DistKind::double_gamma_mixture: {
      const double w = std::exp(-d.alpha);
      const double ax = std::abs(x);
      const double laplace = 0.5 * std::exp(-ax);
      if (d.alpha == 0.0) return laplace;
      const double gamma_part =
          ax == 0.0 ? 0.0
                    : 0.5 * std::exp(d.alpha * std::log(ax) - ax - std::lgamma(d.alpha + 1.0));
      return w * laplace + (1.0 - w) * gamma_part;
    }
  }
  return 0.0;
}

double std_cdf(const ErrorDistribution& d, double x) {
  switch (d.kind) {
    case DistKind::normal:
      return normal_cdf((x - d.mu) / std::sqrt(d.sigma2));
    case DistKind::double_exponential:
      return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
    case DistKind::logistic:
      return 1.0 / (1.0 + std::exp(-x));
    case DistKind::student_t: {
      // Near the center, v / (v + x^2) rounds to 1 and loses all precision,
      // so the complement form I_{x^2/(v+x^2)}(1/2, v/2) is used there; the
      // direct form is kept for the tails where the complement cancels.
      const double v = d.v;
      if (x == 0.0) return 0.5;
      const double x2 = x * x;
      const double tail = x2 <= v
                              ? 0.5 * (1.0 - reg_inc_beta(0.5, 0.5 * v, x2 / (v + x2)))
                              : 0.5 * reg_inc_beta(0.5 * v, 0.5, v / (v + x2));
      return x > 0.0 ? 1.0 - tail : tail;
    }
    case DistKind::cauchy:
      return 0.5 + std::atan(x) / M_PI;
    case DistKind::normal_mixture: {
      const double s = d.r * d.r * d.r;
      return (1.0 - d.r) * normal_cdf(x) + d.r * normal_cdf(x / s);
    }
    case DistKind::double_gamma_mixture: {
      const double w = std::exp(-d.alpha);
      const double ax = std::abs(x);
      const double central = w * (-std::expm1(-ax)) + (1.0 - w) * reg_lower_gamma(d.alpha + 1.0, ax);
      return x >= 0.0 ? 0.5 + 0.5 * central : 0.5 - 0.5 * central;
    }
  }
  return 0.0;
}

/// Bracketed bisection for laws without a closed-form inverse. The cdf is
/// strictly increasing (nonvanishing density), so the bracket is expanded
/// geometrically from [-1, 1] until it straddles u.
double invert_cdf(const ErrorDistribution& d, double u) {
  double lo = -1.0;
  double hi = 1.0;
  while (std_cdf(d, lo) > u && lo > -1e300) lo *= 2.0;
  while (std_cdf(d, hi) < u && hi < 1e300) hi *= 2.0;
  for (int iter = 0; iter < 400 && hi - lo > 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (std_cdf(d, mid) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double std_quantile(const ErrorDistribution& d, double u) {
  switch (d.kind) {
    case DistKind::normal:
      return d.mu + std::sqrt(d.sigma2) * normal_quantile(u);
    case DistKind::double_exponential:
      return u < 0.5 ? std::log(2.0 * u) : -std::log(2.0 * (1.0 - u));
    case DistKind::logistic:
      return std::log(u / (1.0 - u));
    case DistKind::cauchy:
      return std::tan(M_PI * (u - 0.5));
    case DistKind::student_t:
    case DistKind::normal_mixture:
    case DistKind::double_gamma_mixture:
      return invert_cdf(d, u);
  }
  return 0.0;
}

/// Marsaglia-Tsang; the a < 1 case is lifted with the U^{1/a} boost.
double gamma_draw(RngStream& rng, double a) {
  if (a < 1.0) {
    const double u = rng.next_uniform();
    return gamma_draw(rng, a + 1.0) * std::pow(u, 1.0 / a);
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double z = rng.next_normal();
    const double t = 1.0 + c * z;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.next_uniform();
    if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
    if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double std_draw(const ErrorDistribution& d, RngStream& rng) {
  switch (d.kind) {
    case DistKind::normal:
      return d.mu + std::sqrt(d.sigma2) * rng.next_normal();
    case DistKind::double_exponential:
    case DistKind::logistic:
    case DistKind::cauchy:
      return std_quantile(d, rng.next_uniform());
    case DistKind::student_t: {
      const double z = rng.next_normal();
      const double chi2 = 2.0 * gamma_draw(rng, 0.5 * d.v);
      return z / std::sqrt(chi2 / d.v);
    }
    case DistKind::normal_mixture: {
      const double u = rng.next_uniform();
      const double z = rng.next_normal();
      return u < d.r ? d.r * d.r * d.r * z : z;
    }
    case DistKind::double_gamma_mixture: {
      const double u = rng.next_uniform();
      if (u < std::exp(-d.alpha)) {
        return std_quantile(ErrorDistribution::double_exponential(), rng.next_uniform());
      }
      const double magnitude = gamma_draw(rng, d.alpha + 1.0);
      return rng.next_uniform() < 0.5 ? -magnitude : magnitude;
    }
  }
  return 0.0;
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

ErrorDistribution ErrorDistribution::normal(double mu, double sigma2, double scale) {
  require(sigma2 > 0.0, "normal: sigma2 must be positive");
  require(scale > 0.0, "scale must be positive");
  ErrorDistribution d;
  d.kind = DistKind::normal;
  d.mu = mu;
  d.sigma2 = sigma2;
  d.scale = scale;
  return d;
}

ErrorDistribution ErrorDistribution::double_exponential(double scale) {
  require(scale > 0.0, "scale must be positive");
  ErrorDistribution d;
  d.kind = DistKind::double_exponential;
  d.scale = scale;
  return d;
}

ErrorDistribution ErrorDistribution::logistic(double scale) {
  require(scale > 0.0, "scale must be positive");
  ErrorDistribution d;
  d.kind = DistKind::logistic;
  d.scale = scale;
  return d;
}

ErrorDistribution ErrorDistribution::student_t(double v, double scale) {
  require(v >= 1.0, "student_t: need v >= 1");
  require(scale > 0.0, "scale must be positive");
  ErrorDistribution d;
  d.kind = DistKind::student_t;
  d.v = v;
  d.scale = scale;
  return d;
}

ErrorDistribution ErrorDistribution::cauchy(double scale) {
  require(scale > 0.0, "scale must be positive");
  ErrorDistribution d;
  d.kind = DistKind::cauchy;
  d.scale = scale;
  return d;
}

ErrorDistribution ErrorDistribution::normal_mixture(double r, double scale) {
  require(r > 0.0 && r < 1.0, "normal_mixture: need 0 < r < 1");
  require(scale > 0.0, "scale must be positive");
  ErrorDistribution d;
  d.kind = DistKind::normal_mixture;
  d.r = r;
  d.scale = scale;
  return d;
}

ErrorDistribution ErrorDistribution::double_gamma_mixture(double alpha, double scale) {
  require(alpha >= 0.0, "double_gamma_mixture: need alpha >= 0");
  require(scale > 0.0, "scale must be positive");
  ErrorDistribution d;
  d.kind = DistKind::double_gamma_mixture;
  d.alpha = alpha;
  d.scale = scale;
  return d;
}

double pdf(const ErrorDistribution& d, double x) { return std_pdf(d, x / d.scale) / d.scale; }

double cdf(const ErrorDistribution& d, double x) { return std_cdf(d, x / d.scale); }

double quantile(const ErrorDistribution& d, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("quantile: u must lie in (0,1)");
  }
  return d.scale * std_quantile(d, u);
}

std::optional<double> variance(const ErrorDistribution& d) {
  const double s2 = d.scale * d.scale;
  switch (d.kind) {
    case DistKind::normal:
      return s2 * d.sigma2;
    case DistKind::double_exponential:
      return s2 * 2.0;
    case DistKind::logistic:
      return s2 * M_PI * M_PI / 3.0;
    case DistKind::student_t:
      if (d.v <= 2.0) return std::nullopt;
      return s2 * d.v / (d.v - 2.0);
    case DistKind::cauchy:
      return std::nullopt;
    case DistKind::normal_mixture:
      return s2 * (1.0 - d.r + std::pow(d.r, 7.0));
    case DistKind::double_gamma_mixture: {
      const double w = std::exp(-d.alpha);
      return s2 * (2.0 * w + (1.0 - w) * (d.alpha + 1.0) * (d.alpha + 2.0));
    }
  }
  return std::nullopt;
}

Vector sample(const ErrorDistribution& d, RngStream& rng, int n) {
  if (n < 1) throw std::domain_error("sample: need n >= 1");
  Vector out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = d.scale * std_draw(d, rng);
  }
  return out;
}

double mean_density(const ErrorDistribution& d) {
  switch (d.kind) {
    case DistKind::normal:
      return 1.0 / (2.0 * std::sqrt(M_PI * d.sigma2)) / d.scale;
    case DistKind::double_exponential:
      return 0.25 / d.scale;
    case DistKind::logistic:
      return (1.0 / 6.0) / d.scale;
    default: {
      // The narrow mixture component concentrates r of the mass in a spike
      // whose image under the quantile transform shrinks with r, so the
      // panel count grows as 1/r to keep several panels across the spike.
      int nodes = 8192;
      if (d.kind == DistKind::normal_mixture) {
        const double wanted = 1024.0 / d.r;
        nodes = wanted > 131072.0 ? 131072 : (wanted > 8192.0 ? static_cast<int>(wanted) : 8192);
      }
      return quadrature_unit_interval([&](double u) { return pdf(d, quantile(d, u)); }, nodes);
    }
  }
}

std::string kind_name(DistKind kind) {
  switch (kind) {
    case DistKind::normal: return "normal";
    case DistKind::double_exponential: return "double_exponential";
    case DistKind::logistic: return "logistic";
    case DistKind::student_t: return "student_t";
    case DistKind::cauchy: return "cauchy";
    case DistKind::normal_mixture: return "normal_mixture";
    case DistKind::double_gamma_mixture: return "double_gamma_mixture";
  }
  return "unknown";
}

DistKind kind_from_name(const std::string& name) {
  if (name == "normal") return DistKind::normal;
  if (name == "double_exponential" || name == "laplace") return DistKind::double_exponential;
  if (name == "logistic") return DistKind::logistic;
  if (name == "student_t" || name == "t") return DistKind::student_t;
  if (name == "cauchy") return DistKind::cauchy;
  if (name == "normal_mixture" || name == "mixnormal") return DistKind::normal_mixture;
  if (name == "double_gamma_mixture" || name == "dgamma") return DistKind::double_gamma_mixture;
  throw std::invalid_argument("unknown distribution kind: " + name);
}

}  // namespace cqr

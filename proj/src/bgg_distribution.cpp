#include "bgg/bgg_distribution.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bgg/errors.hpp"
#include "bgg/special_functions.hpp"

namespace bgg {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

[[noreturn]] void domain_fail(const char* who, const std::string& detail) {
  std::ostringstream msg;
  msg << who << ": " << detail;
  throw std::domain_error(msg.str());
}

void check_positive(const char* who, const char* name, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream d;
    d << name << " must be positive and finite (got " << v << ")";
    domain_fail(who, d.str());
  }
}

void check_count(const char* who, const char* name, long n) {
  if (n < 1) {
    std::ostringstream d;
    d << name << " must be >= 1 (got " << n << ")";
    domain_fail(who, d.str());
  }
}

// log of the mixture series sum_{n>=1} a^n / Gamma(alpha n) with
// a = (1-p)(beta x)^alpha.  Shared by the marginal density and the
// conditional pmf of N given X = x.
double log_mixture_series(const BggParams& params, double x, const SeriesControl& control) {
  const double log_a = std::log1p(-params.p) + params.alpha * std::log(params.beta * x);
  return log_sum_series(
      [&](long k) {
        const double n = static_cast<double>(k + 1);
        return n * log_a - log_gamma(params.alpha * n);
      },
      control);
}

// log(sinh v) without overflow for large v.
double log_sinh(double v) {
  return v + std::log1p(-std::exp(-2.0 * v)) - std::log(2.0);
}

}  // namespace

void validate(const BggParams& params) {
  check_positive("BggParams", "beta", params.beta);
  check_positive("BggParams", "alpha", params.alpha);
  if (!(params.p > 0.0 && params.p < 1.0)) {
    std::ostringstream d;
    d << "p must lie strictly inside (0,1) (got " << params.p << ")";
    domain_fail("BggParams", d.str());
  }
}

void validate(const BggParamsOrtho& params) {
  check_positive("BggParamsOrtho", "mu", params.mu);
  check_positive("BggParamsOrtho", "alpha", params.alpha);
  if (!(params.p > 0.0 && params.p < 1.0)) {
    std::ostringstream d;
    d << "p must lie strictly inside (0,1) (got " << params.p << ")";
    domain_fail("BggParamsOrtho", d.str());
  }
}

BggParams to_rate(const BggParamsOrtho& params) {
  validate(params);
  return BggParams{params.alpha / params.mu, params.alpha, params.p};
}

BggParamsOrtho to_ortho(const BggParams& params) {
  validate(params);
  return BggParamsOrtho{params.alpha / params.beta, params.alpha, params.p};
}

double joint_log_pdf(const BggParams& params, double x, long n) {
  validate(params);
  check_positive("joint_pdf", "x", x);
  check_count("joint_pdf", "n", n);
  const double na = static_cast<double>(n) * params.alpha;
  return na * std::log(params.beta) - log_gamma(na) + (na - 1.0) * std::log(x) -
         params.beta * x + std::log(params.p) +
         static_cast<double>(n - 1) * std::log1p(-params.p);
}

double joint_pdf(const BggParams& params, double x, long n) {
  return std::exp(joint_log_pdf(params, x, n));
}

double joint_cdf(const BggParams& params, double x, long n) {
  validate(params);
  check_positive("joint_cdf", "x", x);
  check_count("joint_cdf", "n", n);
  double sum = 0.0;
  double weight = params.p;
  for (long j = 1; j <= n; ++j) {
    sum += weight * gamma_p(static_cast<double>(j) * params.alpha, params.beta * x);
    weight *= 1.0 - params.p;
    if (weight < 1e-18) break;
  }
  return sum;
}

double marginal_log_pdf_x(const BggParams& params, double x, const SeriesControl& control) {
  validate(params);
  check_positive("marginal_pdf_x", "x", x);
  const double log_prefactor = std::log(params.p) - std::log(x) - params.beta * x -
                               std::log1p(-params.p);
  return log_prefactor + log_mixture_series(params, x, control);
}

double marginal_pdf_x(const BggParams& params, double x, const SeriesControl& control) {
  return std::exp(marginal_log_pdf_x(params, x, control));
}

double marginal_cdf_x(const BggParams& params, double x, const SeriesControl& control) {
  validate(params);
  check_positive("marginal_cdf_x", "x", x);
  double sum = 0.0;
  double weight = params.p;
  int small_streak = 0;
  for (long j = 1; j <= control.max_terms; ++j) {
    const double term = weight * gamma_p(static_cast<double>(j) * params.alpha, params.beta * x);
    sum += term;
    weight *= 1.0 - params.p;
    const double threshold = std::max(control.abs_tol, control.rel_tol * sum);
    small_streak = (term <= threshold) ? small_streak + 1 : 0;
    if (small_streak >= 2) return sum;
  }
  throw SeriesError("marginal_cdf_x: series did not converge", sum, control.max_terms);
}

double marginal_pdf_x_closed(const BggParams& params, double x) {
  validate(params);
  check_positive("marginal_pdf_x_closed", "x", x);
  const double q = 1.0 - params.p;
  if (params.alpha == 1.0) {
    return params.p * params.beta * std::exp(-params.p * params.beta * x);
  }
  const double a = q * std::pow(params.beta * x, params.alpha);
  const double log_prefactor = std::log(params.p) - params.beta * x - std::log(q * x);
  if (params.alpha == 0.5) {
    // sum_{n>=1} a^n/Gamma(n/2) = a/sqrt(pi) + a^2 e^{a^2} (1 + erf a)
    const double log_t1 = std::log(a) - 0.5 * std::log(kPi);
    const double log_t2 = 2.0 * std::log(a) + a * a + std::log1p(erf(a));
    const double hi = std::max(log_t1, log_t2);
    const double log_sum = hi + std::log(std::exp(log_t1 - hi) + std::exp(log_t2 - hi));
    return std::exp(log_prefactor + log_sum);
  }
  if (params.alpha == 2.0) {
    const double v = std::sqrt(a);
    return std::exp(log_prefactor + std::log(v) + log_sinh(v));
  }
  if (params.alpha == 3.0) {
    // sum a^n/Gamma(3n) = (u/3)[e^u + 2 e^{-u/2} cos(sqrt(3) u / 2 + 2 pi/3)]
    const double u = std::cbrt(a);
    const double angle = 0.5 * std::sqrt(3.0) * u + 2.0 * kPi / 3.0;
    if (u < 700.0) {
      const double s = (u / 3.0) * (std::exp(u) + 2.0 * std::exp(-0.5 * u) * std::cos(angle));
      return std::exp(log_prefactor) * s;
    }
    const double log_s = std::log(u / 3.0) + u + std::log1p(2.0 * std::exp(-1.5 * u) * std::cos(angle));
    return std::exp(log_prefactor + log_s);
  }
  if (params.alpha == 4.0) {
    // sum a^n/Gamma(4n) = (w/2)(sinh w - sin w)
    const double w = std::pow(a, 0.25);
    if (w < 700.0) {
      const double s = 0.5 * w * (std::sinh(w) - std::sin(w));
      return std::exp(log_prefactor) * s;
    }
    const double log_s = std::log(0.5 * w) + log_sinh(w) +
                         std::log1p(-std::sin(w) / std::sinh(w));
    return std::exp(log_prefactor + log_s);
  }
  std::ostringstream msg;
  msg << "marginal_pdf_x_closed: no closed form for alpha = " << params.alpha
      << " (supported: 0.5, 1, 2, 3, 4)";
  throw std::invalid_argument(msg.str());
}

double conditional_pmf_n_given_x(const BggParams& params, double x, long n,
                                 const SeriesControl& control) {
  validate(params);
  check_positive("conditional_pmf_n_given_x", "x", x);
  check_count("conditional_pmf_n_given_x", "n", n);
  const double log_a = std::log1p(-params.p) + params.alpha * std::log(params.beta * x);
  const double log_num = static_cast<double>(n) * log_a - log_gamma(params.alpha * n);
  return std::exp(log_num - log_mixture_series(params, x, control));
}

double conditional_cdf_given_n_le(const BggParams& params, double x, long m, long n) {
  validate(params);
  check_positive("conditional_cdf_given_n_le", "x", x);
  check_count("conditional_cdf_given_n_le", "m", m);
  check_count("conditional_cdf_given_n_le", "n", n);
  if (m > n) {
    std::ostringstream d;
    d << "requires m <= n (got m = " << m << ", n = " << n << ")";
    domain_fail("conditional_cdf_given_n_le", d.str());
  }
  const double mass_n = -std::expm1(static_cast<double>(n) * std::log1p(-params.p));
  return joint_cdf(params, x, m) / mass_n;
}

double conditional_cdf_given_x_le(const BggParams& params, double x, long n, double y,
                                  const SeriesControl& control) {
  if (!(x <= y)) {
    std::ostringstream d;
    d << "requires x <= y (got x = " << x << ", y = " << y << ")";
    domain_fail("conditional_cdf_given_x_le", d.str());
  }
  return conditional_cdf_given_x_le_cached(params, x, n, marginal_cdf_x(params, y, control));
}

double conditional_cdf_given_x_le_cached(const BggParams& params, double x, long n,
                                         double cdf_x_at_y) {
  validate(params);
  check_positive("conditional_cdf_given_x_le", "x", x);
  check_count("conditional_cdf_given_x_le", "n", n);
  if (!(cdf_x_at_y > 0.0) || cdf_x_at_y > 1.0) {
    domain_fail("conditional_cdf_given_x_le", "conditioning mass must lie in (0,1]");
  }
  const double num = joint_cdf(params, x, n);
  // Rounding in the two truncated series can push the ratio a few ulps past
  // one when x == y and n is large; clamp that, but reject genuine overshoot.
  if (num > cdf_x_at_y * (1.0 + 1e-9)) {
    domain_fail("conditional_cdf_given_x_le",
                "joint mass exceeds the conditioning mass; is x <= y?");
  }
  return std::min(num / cdf_x_at_y, 1.0);
}

double mgf(const BggParams& params, double t, double s) {
  validate(params);
  const double q = 1.0 - params.p;
  const double bound =
      params.beta * (1.0 - std::pow(q * std::exp(s), 1.0 / params.alpha));
  if (!(t < bound)) {
    std::ostringstream d;
    d << "t must lie below beta (1 - ((1-p) e^s)^{1/alpha}) = " << bound << " (got t = " << t
      << ")";
    domain_fail("mgf", d.str());
  }
  const double num = params.p * std::exp(s) * std::pow(params.beta, params.alpha);
  const double den = std::pow(params.beta - t, params.alpha) -
                     std::exp(s) * std::pow(params.beta, params.alpha) * q;
  return num / den;
}

std::complex<double> cf(const BggParams& params, double t, double s) {
  validate(params);
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> eis = std::exp(i * s);
  const double beta_alpha = std::pow(params.beta, params.alpha);
  const std::complex<double> num = params.p * eis * beta_alpha;
  const std::complex<double> den =
      std::pow(std::complex<double>(params.beta, -t), params.alpha) -
      eis * beta_alpha * (1.0 - params.p);
  return num / den;
}

double product_moment(const BggParams& params, long m, long k, const SeriesControl& control) {
  validate(params);
  check_count("product_moment", "m", m);
  if (k < 0) domain_fail("product_moment", "requires k >= 0");
  const double md = static_cast<double>(m);
  const double log_prefactor =
      std::log(params.p) + log_gamma(md) - md * std::log(params.beta);
  const double log_q = std::log1p(-params.p);
  const double log_series = log_sum_series(
      [&](long j) {
        const double n = static_cast<double>(j + 1);
        return static_cast<double>(k) * std::log(n) + (n - 1.0) * log_q -
               log_beta(params.alpha * n, md);
      },
      control);
  return std::exp(log_prefactor + log_series);
}

double marginal_moment_x(const BggParams& params, double r, const SeriesControl& control) {
  validate(params);
  check_positive("marginal_moment_x", "r", r);
  const double log_prefactor = std::log(params.p) + log_gamma(r) - r * std::log(params.beta);
  const double log_q = std::log1p(-params.p);
  const double log_series = log_sum_series(
      [&](long j) {
        const double n = static_cast<double>(j + 1);
        return (n - 1.0) * log_q - log_beta(params.alpha * n, r);
      },
      control);
  return std::exp(log_prefactor + log_series);
}

CovarianceMatrix covariance(const BggParams& params) {
  validate(params);
  const double q = 1.0 - params.p;
  const double p2 = params.p * params.p;
  const double b2 = params.beta * params.beta;
  CovarianceMatrix out;
  out.var_x = q * params.alpha * params.alpha / (p2 * b2) + params.alpha / (b2 * params.p);
  out.var_n = q / p2;
  out.cov_xn = q * params.alpha / (params.beta * p2);
  return out;
}

double correlation(const BggParams& params) {
  validate(params);
  const double q = 1.0 - params.p;
  return std::sqrt(q / (q + params.p / params.alpha));
}

}  // namespace bgg

#include "bgg/bmixgnb_distribution.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bgg/errors.hpp"
#include "bgg/special_functions.hpp"

namespace bgg {

namespace {

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

void check_interior(const char* who, const char* name, double v) {
  if (!(v > 0.0 && v < 1.0)) {
    std::ostringstream d;
    d << name << " must lie strictly inside (0,1) (got " << v << ")";
    domain_fail(who, d.str());
  }
}

void check_nonneg_count(const char* who, const char* name, long n) {
  if (n < 0) {
    std::ostringstream d;
    d << name << " must be >= 0 (got " << n << ")";
    domain_fail(who, d.str());
  }
}

// log of sum_{j>=0} Gamma(j+r)/(j! Gamma(alpha(j+r))) c^j with
// c = (1-p)(beta y)^alpha, the normalizer of the conditional pmf of M.
double log_conditional_series(const BmixgnbParams& params, double y,
                              const SeriesControl& control) {
  const double log_c = std::log1p(-params.p) + params.alpha * std::log(params.beta * y);
  return log_sum_series(
      [&](long j) {
        const double jd = static_cast<double>(j);
        return log_gamma(jd + params.r) - log_gamma(jd + 1.0) -
               log_gamma(params.alpha * (jd + params.r)) + jd * log_c;
      },
      control);
}

}  // namespace

void validate(const BmixgnbParams& params) {
  check_positive("BmixgnbParams", "beta", params.beta);
  check_positive("BmixgnbParams", "alpha", params.alpha);
  check_interior("BmixgnbParams", "p", params.p);
  check_positive("BmixgnbParams", "r", params.r);
}

void validate(const BmixgnbParamsOrtho& params) {
  check_positive("BmixgnbParamsOrtho", "mu", params.mu);
  check_positive("BmixgnbParamsOrtho", "alpha", params.alpha);
  check_interior("BmixgnbParamsOrtho", "p", params.p);
  check_positive("BmixgnbParamsOrtho", "r", params.r);
}

BmixgnbParams to_rate(const BmixgnbParamsOrtho& params) {
  validate(params);
  return {params.alpha / params.mu, params.alpha, params.p, params.r};
}

BmixgnbParamsOrtho to_ortho(const BmixgnbParams& params) {
  validate(params);
  return {params.alpha / params.beta, params.alpha, params.p, params.r};
}

double nb_log_pmf(double r, double p, long k) {
  check_positive("nb_pmf", "r", r);
  check_interior("nb_pmf", "p", p);
  check_nonneg_count("nb_pmf", "k", k);
  const double kd = static_cast<double>(k);
  return log_gamma(kd + r) - log_gamma(kd + 1.0) - log_gamma(r) + r * std::log(p) +
         kd * std::log1p(-p);
}

double nb_pmf(double r, double p, long k) { return std::exp(nb_log_pmf(r, p, k)); }

double joint_log_pdf_ym(const BmixgnbParams& params, double y, long n) {
  validate(params);
  check_positive("joint_pdf_ym", "y", y);
  check_nonneg_count("joint_pdf_ym", "n", n);
  const double shape = params.alpha * (params.r + static_cast<double>(n));
  return nb_log_pmf(params.r, params.p, n) + shape * std::log(params.beta) - log_gamma(shape) +
         (shape - 1.0) * std::log(y) - params.beta * y;
}

double joint_pdf_ym(const BmixgnbParams& params, double y, long n) {
  return std::exp(joint_log_pdf_ym(params, y, n));
}

double joint_cdf_ym(const BmixgnbParams& params, double y, long n) {
  validate(params);
  check_positive("joint_cdf_ym", "y", y);
  check_nonneg_count("joint_cdf_ym", "n", n);
  const double q = 1.0 - params.p;
  // Iterative NB weight: w_0 = p^r, w_{j+1} = w_j (j+r)/(j+1) (1-p).
  double weight = std::exp(params.r * std::log(params.p));
  const double past_mode = params.r * q / params.p;
  double sum = 0.0;
  for (long j = 0; j <= n; ++j) {
    const double jd = static_cast<double>(j);
    sum += weight * gamma_p(params.alpha * (params.r + jd), params.beta * y);
    if (weight < 1e-18 && jd > past_mode) break;
    weight *= (jd + params.r) / (jd + 1.0) * q;
  }
  return sum;
}

double marginal_log_pdf_y(const BmixgnbParams& params, double y, const SeriesControl& control) {
  validate(params);
  check_positive("marginal_pdf_y", "y", y);
  return log_sum_series(
      [&](long n) {
        const double shape = params.alpha * (params.r + static_cast<double>(n));
        return nb_log_pmf(params.r, params.p, n) + shape * std::log(params.beta) -
               log_gamma(shape) + (shape - 1.0) * std::log(y) - params.beta * y;
      },
      control);
}

double marginal_pdf_y(const BmixgnbParams& params, double y, const SeriesControl& control) {
  return std::exp(marginal_log_pdf_y(params, y, control));
}

double marginal_cdf_y(const BmixgnbParams& params, double y, const SeriesControl& control) {
  validate(params);
  check_positive("marginal_cdf_y", "y", y);
  const double q = 1.0 - params.p;
  double weight = std::exp(params.r * std::log(params.p));
  const double past_mode = params.r * q / params.p;
  double sum = 0.0;
  int small_streak = 0;
  for (long j = 0; j < control.max_terms; ++j) {
    const double jd = static_cast<double>(j);
    const double term = weight * gamma_p(params.alpha * (params.r + jd), params.beta * y);
    sum += term;
    const double threshold = std::max(control.abs_tol, control.rel_tol * sum);
    small_streak = (term <= threshold && jd > past_mode) ? small_streak + 1 : 0;
    if (small_streak >= 2) return sum;
    weight *= (jd + params.r) / (jd + 1.0) * q;
  }
  throw SeriesError("marginal_cdf_y: series did not converge", sum, control.max_terms);
}

double conditional_pmf_m_given_y(const BmixgnbParams& params, double y, long n,
                                 const SeriesControl& control) {
  validate(params);
  check_positive("conditional_pmf_m_given_y", "y", y);
  check_nonneg_count("conditional_pmf_m_given_y", "n", n);
  const double nd = static_cast<double>(n);
  const double log_c = std::log1p(-params.p) + params.alpha * std::log(params.beta * y);
  const double log_num = log_gamma(nd + params.r) - log_gamma(nd + 1.0) -
                         log_gamma(params.alpha * (nd + params.r)) + nd * log_c;
  return std::exp(log_num - log_conditional_series(params, y, control));
}

double conditional_cdf_ym_given_m_le(const BmixgnbParams& params, double y, long m, long n) {
  validate(params);
  check_positive("conditional_cdf_ym_given_m_le", "y", y);
  check_nonneg_count("conditional_cdf_ym_given_m_le", "m", m);
  check_nonneg_count("conditional_cdf_ym_given_m_le", "n", n);
  if (m > n) {
    std::ostringstream d;
    d << "requires m <= n (got m = " << m << ", n = " << n << ")";
    domain_fail("conditional_cdf_ym_given_m_le", d.str());
  }
  const double q = 1.0 - params.p;
  double weight = std::exp(params.r * std::log(params.p));
  const double past_mode = params.r * q / params.p;
  double mass = 0.0;
  for (long j = 0; j <= n; ++j) {
    const double jd = static_cast<double>(j);
    mass += weight;
    if (weight < 1e-18 && jd > past_mode) break;
    weight *= (jd + params.r) / (jd + 1.0) * q;
  }
  return joint_cdf_ym(params, y, m) / mass;
}

double conditional_cdf_ym_given_y_le(const BmixgnbParams& params, double x, long n, double y,
                                     const SeriesControl& control) {
  validate(params);
  check_positive("conditional_cdf_ym_given_y_le", "x", x);
  check_nonneg_count("conditional_cdf_ym_given_y_le", "n", n);
  if (!(x <= y)) {
    std::ostringstream d;
    d << "requires x <= y (got x = " << x << ", y = " << y << ")";
    domain_fail("conditional_cdf_ym_given_y_le", d.str());
  }
  const double num = joint_cdf_ym(params, x, n);
  const double den = marginal_cdf_y(params, y, control);
  if (num > den * (1.0 + 1e-9)) {
    domain_fail("conditional_cdf_ym_given_y_le", "joint mass exceeds the conditioning mass");
  }
  return std::min(num / den, 1.0);
}

std::complex<double> cf_process(const BmixgnbParams& params, double t, double s) {
  validate(params);
  const std::complex<double> i(0.0, 1.0);
  const double beta_alpha = std::pow(params.beta, params.alpha);
  const std::complex<double> base =
      params.p * beta_alpha /
      (std::pow(std::complex<double>(params.beta, -t), params.alpha) -
       std::exp(i * s) * beta_alpha * (1.0 - params.p));
  return std::pow(base, std::complex<double>(params.r, 0.0));
}

double product_moment_ym(const BmixgnbParams& params, long n, long k,
                         const SeriesControl& control) {
  validate(params);
  if (n < 1) domain_fail("product_moment_ym", "requires n >= 1");
  if (k < 0) domain_fail("product_moment_ym", "requires k >= 0");
  const double nd = static_cast<double>(n);
  const double log_prefactor = params.r * std::log(params.p) + log_gamma(nd) -
                               nd * std::log(params.beta) - log_gamma(params.r);
  const double log_q = std::log1p(-params.p);
  // m = 0 contributes only when k = 0; shift the series start accordingly.
  const long first = (k == 0) ? 0 : 1;
  const double log_series = log_sum_series(
      [&](long j) {
        const double m = static_cast<double>(j + first);
        double lt = m * log_q + log_gamma(m + params.r) - log_gamma(m + 1.0) -
                    log_beta(params.alpha * (params.r + m), nd);
        if (k > 0) lt += static_cast<double>(k) * std::log(m);
        return lt;
      },
      control);
  return std::exp(log_prefactor + log_series);
}

double compose_time_change(double p, double q) {
  check_interior("compose_time_change", "p", p);
  check_interior("compose_time_change", "q", q);
  return p * q / (1.0 - p + p * q);
}

void save_path_csv(const ProcessPath& path, const std::string& file_path) {
  std::ofstream out(file_path);
  if (!out) throw std::runtime_error("save_path_csv: cannot open " + file_path);
  out << "t,x,n\n";
  out.precision(17);
  for (size_t i = 0; i < path.times.size(); ++i) {
    out << path.times[i] << ',' << path.x_values[i] << ',' << path.n_values[i] << '\n';
  }
  if (!out) throw std::runtime_error("save_path_csv: write failed for " + file_path);
}

}  // namespace bgg

#pragma once

#include <complex>

#include "bgg/series.hpp"

namespace bgg {

// Bivariate law of (X, N): N geometric on {1,2,...} with success probability
// p, and X | N = n gamma with shape n*alpha and rate beta.
struct BggParams {
  double beta;
  double alpha;
  double p;
};

// Orthogonal parametrization with mu = alpha / beta, the mean of one gamma
// summand.
struct BggParamsOrtho {
  double mu;
  double alpha;
  double p;
};

struct CovarianceMatrix {
  double var_x;
  double var_n;
  double cov_xn;
};

// Strict interior-parameter validation; boundary values are rejected.
void validate(const BggParams& params);
void validate(const BggParamsOrtho& params);

BggParams to_rate(const BggParamsOrtho& params);
BggParamsOrtho to_ortho(const BggParams& params);

// Joint density f(x,n) = beta^{n a}/Gamma(n a) x^{n a - 1} e^{-beta x}
// p (1-p)^{n-1}, assembled in log scale.
double joint_log_pdf(const BggParams& params, double x, long n);
double joint_pdf(const BggParams& params, double x, long n);

// P(X <= x, N <= n).
double joint_cdf(const BggParams& params, double x, long n);

// Marginal density of X as the gamma-mixture series.
double marginal_log_pdf_x(const BggParams& params, double x, const SeriesControl& control = {});
double marginal_pdf_x(const BggParams& params, double x, const SeriesControl& control = {});

// P(X <= x), the n -> infinity limit of joint_cdf.
double marginal_cdf_x(const BggParams& params, double x, const SeriesControl& control = {});

// Closed-form marginal density, available for alpha in {1/2, 1, 2, 3, 4}
// only; other shapes raise std::invalid_argument.
double marginal_pdf_x_closed(const BggParams& params, double x);

// P(N = n | X = x).
double conditional_pmf_n_given_x(const BggParams& params, double x, long n,
                                 const SeriesControl& control = {});

// P(X <= x, N <= m | N <= n), m <= n.
double conditional_cdf_given_n_le(const BggParams& params, double x, long m, long n);

// P(X <= x, N <= n | X <= y), x <= y.  The denominator depends on y alone,
// so repeated calls at one y can precompute it with marginal_cdf_x and use
// the _cached variant.
double conditional_cdf_given_x_le(const BggParams& params, double x, long n, double y,
                                  const SeriesControl& control = {});
double conditional_cdf_given_x_le_cached(const BggParams& params, double x, long n,
                                         double cdf_x_at_y);

// Joint mgf E[e^{tX + sN}]; t must satisfy
// t < beta (1 - ((1-p) e^s)^{1/alpha}).
double mgf(const BggParams& params, double t, double s);

// Joint characteristic function, principal branch of the complex power.
std::complex<double> cf(const BggParams& params, double t, double s);

// E[X^m N^k] for integer m >= 1, k >= 0.
double product_moment(const BggParams& params, long m, long k, const SeriesControl& control = {});

// E[X^r] for real r > 0.
double marginal_moment_x(const BggParams& params, double r, const SeriesControl& control = {});

CovarianceMatrix covariance(const BggParams& params);

// corr(X, N) = sqrt((1-p) / (1-p + p/alpha)).
double correlation(const BggParams& params);

}  // namespace bgg

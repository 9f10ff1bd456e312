#pragma once

#include <complex>
#include <string>
#include <vector>

#include "bgg/series.hpp"

namespace bgg {

// Law of (Y, M): M negative binomial NB(r, p) on {0,1,...} and Y | M = m
// gamma with shape alpha (r + m) and rate beta.  For r = 1 this is the BGG
// law shifted by one count: (Y, M) =d (X, N - 1).
struct BmixgnbParams {
  double beta;
  double alpha;
  double p;
  double r;
};

// Orthogonal parametrization with mu = alpha / beta.
struct BmixgnbParamsOrtho {
  double mu;
  double alpha;
  double p;
  double r;
};

// Grid view of the bivariate process (X(t), NB(t)): both coordinate paths
// are nondecreasing and share the time grid.
struct ProcessPath {
  std::vector<double> times;
  std::vector<double> x_values;
  std::vector<long> n_values;
};

void validate(const BmixgnbParams& params);
void validate(const BmixgnbParamsOrtho& params);

BmixgnbParams to_rate(const BmixgnbParamsOrtho& params);
BmixgnbParamsOrtho to_ortho(const BmixgnbParams& params);

// NB(r, p) mass function on k = 0, 1, ...
double nb_log_pmf(double r, double p, long k);
double nb_pmf(double r, double p, long k);

double joint_log_pdf_ym(const BmixgnbParams& params, double y, long n);
double joint_pdf_ym(const BmixgnbParams& params, double y, long n);

// P(Y <= y, M <= n).
double joint_cdf_ym(const BmixgnbParams& params, double y, long n);

double marginal_log_pdf_y(const BmixgnbParams& params, double y, const SeriesControl& control = {});
double marginal_pdf_y(const BmixgnbParams& params, double y, const SeriesControl& control = {});

// P(Y <= y), the n -> infinity limit of joint_cdf_ym.
double marginal_cdf_y(const BmixgnbParams& params, double y, const SeriesControl& control = {});

// P(M = n | Y = y).
double conditional_pmf_m_given_y(const BmixgnbParams& params, double y, long n,
                                 const SeriesControl& control = {});

// P(Y <= y, M <= m | M <= n), m <= n.
double conditional_cdf_ym_given_m_le(const BmixgnbParams& params, double y, long m, long n);

// P(Y <= x, M <= n | Y <= y), x <= y.
double conditional_cdf_ym_given_y_le(const BmixgnbParams& params, double x, long n, double y,
                                     const SeriesControl& control = {});

// Characteristic function of (X(r), NB(r)), principal branch:
// {p beta^alpha / [(beta - it)^alpha - e^{is} beta^alpha (1-p)]}^r.
std::complex<double> cf_process(const BmixgnbParams& params, double t, double s);

// E[Y^n M^k] for integer n >= 1, k >= 0.
double product_moment_ym(const BmixgnbParams& params, long n, long k,
                         const SeriesControl& control = {});

// Success probability of the negative binomial process obtained by running
// one NB clock (parameter p) at the random time of another (parameter q):
// p* = p q / (1 - p + p q).
double compose_time_change(double p, double q);

// Writes `t,x,n` rows at 17 significant digits.
void save_path_csv(const ProcessPath& path, const std::string& file_path);

}  // namespace bgg

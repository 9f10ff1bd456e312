#pragma once

#include <array>
#include <string>
#include <vector>

#include "bgg/bgg_distribution.hpp"
#include "bgg/bmixgnb_distribution.hpp"
#include "bgg/gof.hpp"
#include "bgg/series.hpp"

namespace bgg {

enum class ModelKind { kBgg, kBmixgnb };

// Paired magnitudes and counts.  Counts are >= 1 under the BGG tag and
// >= 0 under the BMixGNB tag.
struct PairSample {
  std::vector<double> xs;
  std::vector<long> ns;
  ModelKind model_kind = ModelKind::kBgg;
};

void validate(const PairSample& data);

double mean_x(const PairSample& data);
double mean_n(const PairSample& data);

// CSV with an `x,n` header; x written at 17 significant digits.
PairSample load_pairs_csv(const std::string& file_path, ModelKind model_kind);
void save_pairs_csv(const PairSample& data, const std::string& file_path);

struct SolverOptions {
  double tol = 1e-10;
  int max_iterations = 200;
  // Standard errors from the analytic information matrix by default; set to
  // use the finite-difference observed information at the estimate instead.
  bool observed_information = false;
  double confidence_level = 0.95;
  SeriesControl series{};
};

using Matrix = std::vector<std::vector<double>>;

struct FitReport {
  std::string model;
  std::string parametrization;
  std::vector<std::string> param_names;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
  double loglik_at_mle = 0.0;
  bool converged = false;
  int iterations = 0;
  // Per-observation information at the estimate (the matrix the standard
  // errors were computed from).
  Matrix information_matrix;
};

std::string fit_report_to_json(const FitReport& report);

// Two-sided standard-normal quantile at the given central coverage, e.g.
// 0.95 -> 1.959963984540054.
double normal_quantile_two_sided(double level);

// --- Three-parameter law of (X, N) ---

// Exact sum of joint log densities (no constants dropped).
double bgg_loglik(const BggParams& theta, const PairSample& data);
std::array<double, 3> bgg_score(const BggParams& theta, const PairSample& data);
std::array<double, 3> bgg_score_ortho(const BggParamsOrtho& theta, const PairSample& data);

// Closed-form p and beta given alpha; alpha from a bracketed safeguarded
// Newton solve of the profiled score.
FitReport bgg_fit(const PairSample& data, const SolverOptions& opts = {});
FitReport bgg_fit_ortho(const PairSample& data, const SolverOptions& opts = {});

// Maximized log-likelihood with alpha held fixed (beta and p close forms);
// the restricted fit behind likelihood-ratio tests of alpha.
double bgg_profile_loglik_alpha(const PairSample& data, double alpha);

// Restricted model with alpha = 1 (exponential run magnitudes); closed-form
// estimates of (beta, p) with a diagonal information matrix.
FitReport beg_fit(const PairSample& data, const SolverOptions& opts = {});

// Expected information per observation, parameters ordered (beta, alpha, p)
// and (mu, alpha, p).
Matrix bgg_fisher(const BggParams& theta, const SeriesControl& control = {});
Matrix bgg_fisher_ortho(const BggParamsOrtho& theta, const SeriesControl& control = {});

// --- Four-parameter law of (Y, M) ---

double bmixgnb_loglik(const BmixgnbParams& theta, const PairSample& data);
std::array<double, 4> bmixgnb_score(const BmixgnbParams& theta, const PairSample& data);
std::array<double, 4> bmixgnb_score_ortho(const BmixgnbParamsOrtho& theta,
                                          const PairSample& data);

// Profiles beta and p, then runs a damped Newton iteration on the remaining
// (alpha, r) score equations, restarting from a coarse grid on failure.
FitReport bmixgnb_fit(const PairSample& data, const SolverOptions& opts = {});
FitReport bmixgnb_fit_ortho(const PairSample& data, const SolverOptions& opts = {});

// Fit with r held fixed; reports the three free parameters (beta, alpha, p).
FitReport bmixgnb_fit_fixed_r(const PairSample& data, double r,
                              const SolverOptions& opts = {});

// Expected information per observation, parameters ordered
// (beta, alpha, p, r) and (mu, alpha, p, r).
Matrix bmixgnb_fisher(const BmixgnbParams& theta, const SeriesControl& control = {});
Matrix bmixgnb_fisher_ortho(const BmixgnbParamsOrtho& theta,
                            const SeriesControl& control = {});

// --- Tests ---

// ((estimate - null) / se)^2 against chi-square(1).
TestResult wald_test(const FitReport& report, const std::string& component,
                     double null_value);

// 2 (l_full - l_restricted) against chi-square(df).
TestResult lr_test(double loglik_full, double loglik_restricted, int df);

}  // namespace bgg

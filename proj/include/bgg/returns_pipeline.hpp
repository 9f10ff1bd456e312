#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bgg/bgg_distribution.hpp"
#include "bgg/gof.hpp"
#include "bgg/inference.hpp"

namespace bgg {

// Calendar dates are serial day numbers with 1970-01-01 = 0, so strict
// ordering and day arithmetic are integer operations.
int parse_iso_date(const std::string& text);
std::string format_iso_date(int serial_day);

struct RateSeries {
  std::vector<int> dates;
  std::vector<double> rates;
};

// Equal lengths, positive rates, strictly increasing dates.
void validate(const RateSeries& series);

// Header `date,rate`, ISO-8601 dates, one observation per row.
RateSeries load_rates_csv(const std::string& file_path);
void save_rates_csv(const RateSeries& series, const std::string& file_path);

// r_i = ln(rate_{i+1} / rate_i); length is one less than the series.
std::vector<double> log_returns(const RateSeries& series);

struct RunExtraction {
  // One (magnitude, duration) pair per maximal run of consecutive strictly
  // positive returns.
  PairSample pairs;
  // Every individual positive return, in order of appearance.
  std::vector<double> one_day_positive;
  // The series ended inside a positive run; that run is still counted as a
  // complete observation, which slightly understates its true duration.
  bool trailing_open_run = false;
};

// Zeros and negative returns terminate runs and are otherwise dropped.
RunExtraction extract_positive_runs(std::span<const double> returns);

struct StabilityResult {
  // Two-sample comparison of the run magnitudes with the scaled one-day
  // returns D_i / p_hat.
  TestResult ks;
  // Reference slope 1 / p_hat for the quantile pairs.
  double slope = 0.0;
  // (one-day quantile, magnitude quantile) pairs.
  std::vector<std::pair<double, double>> qq;
};

StabilityResult stability_check(const RunExtraction& extraction, double p_hat);

// Geometric duration probabilities p q^{n-1} for n = 1..rows plus the tail
// mass q^rows, and the matching observed relative frequencies.
std::vector<double> geometric_duration_row(double p, int rows);
std::vector<double> observed_duration_row(std::span<const long> durations, int rows);

struct SyntheticSeries {
  RateSeries series;
  // The (magnitude, duration) pairs the series was built from.
  PairSample pairs;
};

// Builds a rate series whose positive-return runs realize the given law:
// each run is a geometric number of gamma day returns, runs are separated
// by single exponential down moves, and rates cumulate from 1.0 with one
// observation per day.
SyntheticSeries synthesize_rate_series(const BggParams& params, int n_pairs,
                                       std::uint64_t seed,
                                       int start_date = 10959 /* 2000-01-03 */);

struct AnalysisConfig {
  int histogram_bins = 30;
  int duration_rows = 6;
  int conditional_max_duration = 5;
  SolverOptions solver{};
};

struct AnalysisResult {
  FitReport fit_rate;
  FitReport fit_ortho;
  FitReport fit_restricted;
  TestResult lr_unit_shape;
  TestResult wald_unit_shape;
  TestResult stability_ks;
  double empirical_correlation = 0.0;
  double fitted_correlation = 0.0;
  double qq_slope = 0.0;
  bool trailing_open_run = false;
};

// Fits the full and restricted models, tests the unit-shape hypothesis, and
// writes the report files (fit JSONs, test JSON, density/survival/duration/
// conditional-KS/QQ CSVs, summary JSON) into out_dir. Nothing is written if
// a fit fails.
AnalysisResult run_full_analysis(const RunExtraction& extraction,
                                 const AnalysisConfig& config,
                                 const std::string& out_dir);

}  // namespace bgg

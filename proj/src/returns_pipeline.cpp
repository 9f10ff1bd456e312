#include "bgg/returns_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bgg/errors.hpp"
#include "bgg/sampling.hpp"
#include "bgg/special_functions.hpp"

namespace bgg {

namespace {

[[noreturn]] void domain_fail(const std::string& who, const std::string& what) {
  throw std::domain_error(who + ": " + what);
}

bool leap_year(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && leap_year(y)) return 29;
  return kDays[m - 1];
}

// Proleptic Gregorian civil <-> serial day conversions (1970-01-01 = 0).
int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int serial, int& y, int& m, int& d) {
  const int z = serial + 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int year = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = year + (m <= 2);
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  return sab / std::sqrt(saa * sbb);
}

std::ofstream open_csv(const std::string& who, const std::string& file_path) {
  std::ofstream out(file_path);
  if (!out) throw std::runtime_error(who + ": cannot open " + file_path);
  out.precision(17);
  return out;
}

void finish_csv(const std::string& who, const std::string& file_path,
                std::ofstream& out) {
  if (!out) throw std::runtime_error(who + ": write failed for " + file_path);
}

void write_text_file(const std::string& who, const std::string& file_path,
                     const std::string& text) {
  std::ofstream out(file_path);
  if (!out) throw std::runtime_error(who + ": cannot open " + file_path);
  out << text << '\n';
  finish_csv(who, file_path, out);
}

}  // namespace

int parse_iso_date(const std::string& text) {
  const auto fail = [&](const std::string& why) {
    throw ParseError("parse_iso_date: `" + text + "`: " + why);
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    fail("expected YYYY-MM-DD");
  }
  for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) fail("expected YYYY-MM-DD");
  }
  const int y = std::stoi(text.substr(0, 4));
  const int m = std::stoi(text.substr(5, 2));
  const int d = std::stoi(text.substr(8, 2));
  if (m < 1 || m > 12) fail("month out of range");
  if (d < 1 || d > days_in_month(y, m)) fail("day out of range");
  return days_from_civil(y, m, d);
}

std::string format_iso_date(int serial_day) {
  int y = 0, m = 0, d = 0;
  civil_from_days(serial_day, y, m, d);
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02d", y, m, d);
  return buffer;
}

void validate(const RateSeries& series) {
  if (series.dates.size() != series.rates.size()) {
    domain_fail("RateSeries", "dates and rates differ in length");
  }
  for (size_t i = 0; i < series.rates.size(); ++i) {
    if (!(series.rates[i] > 0.0) || !std::isfinite(series.rates[i])) {
      std::ostringstream msg;
      msg << "rate at index " << i << " must be positive and finite, got "
          << series.rates[i];
      domain_fail("RateSeries", msg.str());
    }
    if (i > 0 && series.dates[i] <= series.dates[i - 1]) {
      std::ostringstream msg;
      msg << "dates must be strictly increasing, violated at index " << i << " ("
          << format_iso_date(series.dates[i - 1]) << " then "
          << format_iso_date(series.dates[i]) << ")";
      domain_fail("RateSeries", msg.str());
    }
  }
}

RateSeries load_rates_csv(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw std::runtime_error("load_rates_csv: cannot open " + file_path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("load_rates_csv: empty file " + file_path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "date,rate") {
    throw ParseError("load_rates_csv: expected header `date,rate`, got `" + line + "`");
  }
  RateSeries out;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::ostringstream ctx;
    ctx << "load_rates_csv: row " << row << " `" << line << "`";
    const size_t comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(ctx.str() + ": expected exactly two fields");
    }
    int date = 0;
    try {
      date = parse_iso_date(line.substr(0, comma));
    } catch (const ParseError& e) {
      throw ParseError(ctx.str() + ": " + e.what());
    }
    double rate = 0.0;
    try {
      size_t used = 0;
      const std::string rate_text = line.substr(comma + 1);
      rate = std::stod(rate_text, &used);
      if (used != rate_text.size()) {
        throw ParseError(ctx.str() + ": trailing text after rate");
      }
    } catch (const std::invalid_argument&) {
      throw ParseError(ctx.str() + ": rate is not a number");
    } catch (const std::out_of_range&) {
      throw ParseError(ctx.str() + ": rate out of range");
    }
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      domain_fail("load_rates_csv", ctx.str() + ": rate must be positive");
    }
    if (!out.dates.empty() && date <= out.dates.back()) {
      domain_fail("load_rates_csv", ctx.str() + ": dates must be strictly increasing");
    }
    out.dates.push_back(date);
    out.rates.push_back(rate);
  }
  validate(out);
  return out;
}

void save_rates_csv(const RateSeries& series, const std::string& file_path) {
  validate(series);
  std::ofstream out = open_csv("save_rates_csv", file_path);
  out << "date,rate\n";
  for (size_t i = 0; i < series.rates.size(); ++i) {
    out << format_iso_date(series.dates[i]) << ',' << series.rates[i] << '\n';
  }
  finish_csv("save_rates_csv", file_path, out);
}

std::vector<double> log_returns(const RateSeries& series) {
  validate(series);
  if (series.rates.size() < 2) {
    domain_fail("log_returns", "need at least two observations");
  }
  std::vector<double> out(series.rates.size() - 1);
  for (size_t i = 0; i + 1 < series.rates.size(); ++i) {
    out[i] = std::log(series.rates[i + 1] / series.rates[i]);
  }
  return out;
}

RunExtraction extract_positive_runs(std::span<const double> returns) {
  if (returns.empty()) domain_fail("extract_positive_runs", "no returns given");
  RunExtraction out;
  out.pairs.model_kind = ModelKind::kBgg;
  double run_sum = 0.0;
  long run_length = 0;
  const auto close_run = [&] {
    out.pairs.xs.push_back(run_sum);
    out.pairs.ns.push_back(run_length);
    run_sum = 0.0;
    run_length = 0;
  };
  for (double r : returns) {
    if (!std::isfinite(r)) domain_fail("extract_positive_runs", "non-finite return");
    if (r > 0.0) {
      run_sum += r;
      ++run_length;
      out.one_day_positive.push_back(r);
    } else if (run_length > 0) {
      close_run();
    }
  }
  if (run_length > 0) {
    close_run();
    out.trailing_open_run = true;
  }
  return out;
}

StabilityResult stability_check(const RunExtraction& extraction, double p_hat) {
  if (!(p_hat > 0.0) || !(p_hat < 1.0)) {
    domain_fail("stability_check", "p_hat must lie in (0, 1)");
  }
  if (extraction.pairs.xs.empty() || extraction.one_day_positive.empty()) {
    domain_fail("stability_check", "extraction holds no positive runs");
  }
  StabilityResult result;
  result.slope = 1.0 / p_hat;
  std::vector<double> scaled = extraction.one_day_positive;
  for (double& d : scaled) d /= p_hat;
  result.ks = ks_two_sample(extraction.pairs.xs, scaled);
  result.qq = qq_points(extraction.one_day_positive, extraction.pairs.xs);
  return result;
}

std::vector<double> geometric_duration_row(double p, int rows) {
  if (!(p > 0.0) || !(p < 1.0)) {
    domain_fail("geometric_duration_row", "p must lie in (0, 1)");
  }
  if (rows < 1) domain_fail("geometric_duration_row", "need at least one row");
  std::vector<double> out;
  out.reserve(static_cast<size_t>(rows) + 1);
  double mass = p;
  for (int n = 1; n <= rows; ++n) {
    out.push_back(mass);
    mass *= 1.0 - p;
  }
  // mass is now p q^rows; the tail q^rows closes the distribution.
  out.push_back(mass / p);
  return out;
}

std::vector<double> observed_duration_row(std::span<const long> durations, int rows) {
  if (durations.empty()) domain_fail("observed_duration_row", "no durations given");
  if (rows < 1) domain_fail("observed_duration_row", "need at least one row");
  std::vector<double> out(static_cast<size_t>(rows) + 1, 0.0);
  for (long n : durations) {
    if (n < 1) domain_fail("observed_duration_row", "durations must be at least 1");
    if (n <= rows) {
      out[static_cast<size_t>(n - 1)] += 1.0;
    } else {
      out.back() += 1.0;
    }
  }
  for (double& f : out) f /= static_cast<double>(durations.size());
  return out;
}

SyntheticSeries synthesize_rate_series(const BggParams& params, int n_pairs,
                                       std::uint64_t seed, int start_date) {
  validate(params);
  if (n_pairs < 1) domain_fail("synthesize_rate_series", "need at least one pair");
  RandomStream rng(seed);
  SyntheticSeries out;
  out.pairs.model_kind = ModelKind::kBgg;
  double log_rate = 0.0;
  int date = start_date;
  out.series.dates.push_back(date);
  out.series.rates.push_back(1.0);
  const auto push = [&](double log_return) {
    log_rate += log_return;
    out.series.dates.push_back(++date);
    out.series.rates.push_back(std::exp(log_rate));
  };
  // Down moves with mean alpha / (beta p) cancel the expected run magnitude,
  // keeping the walk drift-free so long series stay in floating-point range.
  const double down_rate = params.beta * params.p / params.alpha;
  for (int i = 0; i < n_pairs; ++i) {
    const long n = sample_geometric(params.p, rng);
    double magnitude = 0.0;
    for (long j = 0; j < n; ++j) {
      const double day = sample_gamma(params.alpha, params.beta, rng);
      magnitude += day;
      push(day);
    }
    out.pairs.xs.push_back(magnitude);
    out.pairs.ns.push_back(n);
    push(-sample_gamma(1.0, down_rate, rng));
  }
  return out;
}

AnalysisResult run_full_analysis(const RunExtraction& extraction,
                                 const AnalysisConfig& config,
                                 const std::string& out_dir) {
  if (extraction.pairs.xs.empty()) {
    domain_fail("run_full_analysis", "extraction holds no positive runs");
  }
  if (config.histogram_bins < 1 || config.duration_rows < 1 ||
      config.conditional_max_duration < 1) {
    domain_fail("run_full_analysis", "table sizes must be positive");
  }

  AnalysisResult result;
  result.trailing_open_run = extraction.trailing_open_run;
  result.fit_rate = bgg_fit(extraction.pairs, config.solver);
  result.fit_ortho = bgg_fit_ortho(extraction.pairs, config.solver);
  result.fit_restricted = beg_fit(extraction.pairs, config.solver);
  result.lr_unit_shape = lr_test(result.fit_rate.loglik_at_mle,
                                 result.fit_restricted.loglik_at_mle, 1);
  result.wald_unit_shape = wald_test(result.fit_rate, "alpha", 1.0);

  const BggParams theta{result.fit_rate.estimates[0], result.fit_rate.estimates[1],
                        result.fit_rate.estimates[2]};
  const StabilityResult stability = stability_check(extraction, theta.p);
  result.stability_ks = stability.ks;
  result.qq_slope = stability.slope;

  std::vector<double> durations_real(extraction.pairs.ns.begin(),
                                     extraction.pairs.ns.end());
  result.empirical_correlation =
      pearson_correlation(extraction.pairs.xs, durations_real);
  result.fitted_correlation = correlation(theta);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };

  write_text_file("run_full_analysis", path("fit_bgg.json"),
                  fit_report_to_json(result.fit_rate));
  write_text_file("run_full_analysis", path("fit_bgg_ortho.json"),
                  fit_report_to_json(result.fit_ortho));
  write_text_file("run_full_analysis", path("fit_beg.json"),
                  fit_report_to_json(result.fit_restricted));

  nlohmann::ordered_json tests;
  tests["lr_unit_shape"] = nlohmann::json::parse(test_result_to_json(result.lr_unit_shape));
  tests["wald_unit_shape"] =
      nlohmann::json::parse(test_result_to_json(result.wald_unit_shape));
  tests["stability_ks"] = nlohmann::json::parse(test_result_to_json(result.stability_ks));
  tests["correlation"] = {{"empirical", result.empirical_correlation},
                          {"fitted", result.fitted_correlation}};
  write_text_file("run_full_analysis", path("tests.json"), tests.dump(2));

  const std::vector<double>& xs = extraction.pairs.xs;
  const double n_real = static_cast<double>(xs.size());
  {
    const double x_max = *std::max_element(xs.begin(), xs.end());
    const double width = x_max / config.histogram_bins;
    std::vector<long> counts(static_cast<size_t>(config.histogram_bins), 0);
    for (double x : xs) {
      size_t bin = static_cast<size_t>(x / width);
      if (bin >= counts.size()) bin = counts.size() - 1;
      ++counts[bin];
    }
    std::ofstream out = open_csv("run_full_analysis", path("marginal_density.csv"));
    out << "bin_left,bin_right,count,empirical_density,fitted_density\n";
    for (size_t b = 0; b < counts.size(); ++b) {
      const double left = width * static_cast<double>(b);
      const double right = left + width;
      out << left << ',' << right << ',' << counts[b] << ','
          << static_cast<double>(counts[b]) / (n_real * width) << ','
          << marginal_pdf_x(theta, 0.5 * (left + right)) << '\n';
    }
    finish_csv("run_full_analysis", path("marginal_density.csv"), out);
  }
  {
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    std::ofstream out = open_csv("run_full_analysis", path("survival.csv"));
    out << "x,empirical_survival,fitted_survival\n";
    for (size_t i = 0; i < sorted.size(); ++i) {
      out << sorted[i] << ',' << 1.0 - static_cast<double>(i + 1) / n_real << ','
          << 1.0 - marginal_cdf_x(theta, sorted[i]) << '\n';
    }
    finish_csv("run_full_analysis", path("survival.csv"), out);
  }
  {
    const std::vector<double> observed =
        observed_duration_row(extraction.pairs.ns, config.duration_rows);
    const std::vector<double> fitted =
        geometric_duration_row(theta.p, config.duration_rows);
    std::ofstream out = open_csv("run_full_analysis", path("duration_table.csv"));
    out << "duration,observed,fitted\n";
    for (size_t k = 0; k < observed.size(); ++k) {
      if (k + 1 < observed.size()) {
        out << (k + 1);
      } else {
        out << '>' << config.duration_rows;
      }
      out << ',' << observed[k] << ',' << fitted[k] << '\n';
    }
    finish_csv("run_full_analysis", path("duration_table.csv"), out);
  }
  {
    std::ofstream out = open_csv("run_full_analysis", path("conditional_ks.csv"));
    out << "duration,count,statistic,p_value\n";
    for (long n = 1; n <= config.conditional_max_duration; ++n) {
      std::vector<double> subset;
      for (size_t i = 0; i < xs.size(); ++i) {
        if (extraction.pairs.ns[i] == n) subset.push_back(xs[i]);
      }
      if (subset.empty()) continue;
      const double shape = theta.alpha * static_cast<double>(n);
      const TestResult ks = ks_one_sample(
          subset, [&](double x) { return gamma_p(shape, theta.beta * x); });
      out << n << ',' << subset.size() << ',' << ks.statistic << ',' << ks.p_value
          << '\n';
    }
    finish_csv("run_full_analysis", path("conditional_ks.csv"), out);
  }
  save_qq_csv(stability.qq, path("stability_qq.csv"));

  nlohmann::ordered_json summary;
  summary["n_pairs"] = xs.size();
  summary["n_one_day_positive"] = extraction.one_day_positive.size();
  summary["trailing_open_run"] = extraction.trailing_open_run;
  if (extraction.trailing_open_run) {
    summary["note"] =
        "the series ended inside a positive run; that run is counted as a "
        "complete observation and its true duration may be longer";
  }
  summary["p_hat"] = theta.p;
  summary["qq_slope"] = result.qq_slope;
  summary["files"] = {"fit_bgg.json",      "fit_bgg_ortho.json",
                      "fit_beg.json",      "tests.json",
                      "marginal_density.csv", "survival.csv",
                      "duration_table.csv", "conditional_ks.csv",
                      "stability_qq.csv"};
  write_text_file("run_full_analysis", path("summary.json"), summary.dump(2));

  return result;
}

}  // namespace bgg

#include "bgg/gof.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bgg/errors.hpp"
#include "bgg/special_functions.hpp"

namespace bgg {

namespace {

std::vector<double> sorted_copy(std::span<const double> sample, const char* who) {
  if (sample.empty()) {
    throw std::domain_error(std::string(who) + ": sample must be nonempty");
  }
  std::vector<double> out(sample.begin(), sample.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

StepFunction::StepFunction(std::vector<double> sorted_values, bool survival)
    : values_(std::move(sorted_values)), survival_(survival) {}

double StepFunction::operator()(double x) const {
  const auto at_most = std::upper_bound(values_.begin(), values_.end(), x) - values_.begin();
  const double cdf = static_cast<double>(at_most) / static_cast<double>(values_.size());
  return survival_ ? 1.0 - cdf : cdf;
}

StepFunction empirical_cdf(std::span<const double> sample) {
  return StepFunction(sorted_copy(sample, "empirical_cdf"), false);
}

StepFunction empirical_survival(std::span<const double> sample) {
  return StepFunction(sorted_copy(sample, "empirical_survival"), true);
}

double kolmogorov_q(double lambda) {
  if (!(lambda >= 0.0)) throw std::domain_error("kolmogorov_q: lambda must be >= 0");
  if (lambda == 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (long k = 1; k < 100000; ++k) {
    const double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) *
                                 lambda * lambda);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_one_sample(std::span<const double> sample,
                         const std::function<double(double)>& cdf) {
  const std::vector<double> xs = sorted_copy(sample, "ks_one_sample");
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  double prev_f = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    if (!(f >= 0.0 && f <= 1.0) || f < prev_f - 1e-12) {
      std::ostringstream msg;
      msg << "ks_one_sample: cdf produced an invalid value " << f << " at x = " << xs[i];
      throw std::invalid_argument(msg.str());
    }
    prev_f = f;
    const double upper = static_cast<double>(i + 1) / n - f;
    const double lower = f - static_cast<double>(i) / n;
    d = std::max({d, upper, lower});
  }
  return {d, kolmogorov_q(std::sqrt(n) * d), n};
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> xa = sorted_copy(a, "ks_two_sample");
  const std::vector<double> xb = sorted_copy(b, "ks_two_sample");
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < xa.size() && j < xb.size()) {
    const double x = std::min(xa[i], xb[j]);
    while (i < xa.size() && xa[i] <= x) ++i;
    while (j < xb.size() && xb[j] <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double n_eff = na * nb / (na + nb);
  return {d, kolmogorov_q(std::sqrt(n_eff) * d), n_eff};
}

TestResult pearson_chi_square(std::span<const long> observed_counts,
                              std::span<const double> expected_probs, int df_adjust) {
  if (observed_counts.empty() || observed_counts.size() != expected_probs.size()) {
    throw std::domain_error("pearson_chi_square: counts and probabilities must align");
  }
  double prob_sum = 0.0;
  long n = 0;
  for (size_t i = 0; i < observed_counts.size(); ++i) {
    if (observed_counts[i] < 0) {
      throw std::domain_error("pearson_chi_square: counts must be nonnegative");
    }
    n += observed_counts[i];
    prob_sum += expected_probs[i];
  }
  if (std::fabs(prob_sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "pearson_chi_square: probabilities sum to " << prob_sum << ", expected 1";
    throw std::domain_error(msg.str());
  }
  const int df = static_cast<int>(observed_counts.size()) - 1 - df_adjust;
  if (df < 1) throw std::domain_error("pearson_chi_square: degrees of freedom below 1");
  double stat = 0.0;
  for (size_t i = 0; i < observed_counts.size(); ++i) {
    const double expected = static_cast<double>(n) * expected_probs[i];
    if (expected < 1e-12) {
      throw DegenerateError(
          "pearson_chi_square: an expected cell count is numerically zero; merge bins");
    }
    const double delta = static_cast<double>(observed_counts[i]) - expected;
    stat += delta * delta / expected;
  }
  return {stat, chi_square_survival(stat, df), static_cast<double>(df)};
}

double chi_square_survival(double x, int df) {
  if (!(x >= 0.0)) throw std::domain_error("chi_square_survival: x must be >= 0");
  if (df < 1) throw std::domain_error("chi_square_survival: df must be >= 1");
  return gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

std::vector<std::pair<double, double>> qq_points(std::span<const double> sample,
                                                 std::span<const double> reference) {
  const std::vector<double> xs = sorted_copy(sample, "qq_points");
  const std::vector<double> ref = sorted_copy(reference, "qq_points");
  const double m = static_cast<double>(ref.size());
  const auto ref_quantile = [&](double u) {
    // Piecewise-linear through (j/(m+1), ref[j-1]), clamped at the ends.
    const double pos = u * (m + 1.0);
    if (pos <= 1.0) return ref.front();
    if (pos >= m) return ref.back();
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const double w = pos - static_cast<double>(lo);
    return ref[lo - 1] * (1.0 - w) + ref[lo] * w;
  };
  std::vector<std::pair<double, double>> out;
  out.reserve(xs.size());
  const double n = static_cast<double>(xs.size());
  for (size_t k = 1; k <= xs.size(); ++k) {
    const double u = static_cast<double>(k) / (n + 1.0);
    out.emplace_back(xs[k - 1], ref_quantile(u));
  }
  return out;
}

std::vector<std::pair<double, double>> qq_points(
    std::span<const double> sample, const std::function<double(double)>& quantile) {
  const std::vector<double> xs = sorted_copy(sample, "qq_points");
  std::vector<std::pair<double, double>> out;
  out.reserve(xs.size());
  const double n = static_cast<double>(xs.size());
  for (size_t k = 1; k <= xs.size(); ++k) {
    out.emplace_back(xs[k - 1], quantile(static_cast<double>(k) / (n + 1.0)));
  }
  return out;
}

std::string test_result_to_json(const TestResult& result) {
  nlohmann::json j;
  j["statistic"] = result.statistic;
  j["p_value"] = result.p_value;
  j["df_or_n"] = result.df_or_n;
  return j.dump(2);
}

void save_qq_csv(std::span<const std::pair<double, double>> points,
                 const std::string& file_path) {
  std::ofstream out(file_path);
  if (!out) throw std::runtime_error("save_qq_csv: cannot open " + file_path);
  out << "x,y\n";
  out.precision(17);
  for (const auto& [x, y] : points) out << x << ',' << y << '\n';
  if (!out) throw std::runtime_error("save_qq_csv: write failed for " + file_path);
}

}  // namespace bgg

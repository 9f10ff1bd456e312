#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bgg {

struct TestResult {
  double statistic;
  double p_value;
  // Sample size for KS tests (effective size for the two-sample form),
  // degrees of freedom for chi-square.
  double df_or_n;
};

// Right-continuous empirical distribution function with jumps 1/n at the
// order statistics; the survival variant returns 1 - F.
class StepFunction {
 public:
  StepFunction(std::vector<double> sorted_values, bool survival);
  double operator()(double x) const;
  size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
  bool survival_;
};

StepFunction empirical_cdf(std::span<const double> sample);
StepFunction empirical_survival(std::span<const double> sample);

// Upper tail of the asymptotic Kolmogorov distribution,
// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 lambda^2}.
double kolmogorov_q(double lambda);

// Exact sup-distance of the empirical cdf from a fitted continuous cdf,
// with the asymptotic p-value at sqrt(n) D.
TestResult ks_one_sample(std::span<const double> sample,
                         const std::function<double(double)>& cdf);

// Sup-distance between two empirical cdfs; effective size
// n_a n_b / (n_a + n_b).
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Pearson statistic against expected cell probabilities; df is
// cells - 1 - df_adjust.
TestResult pearson_chi_square(std::span<const long> observed_counts,
                              std::span<const double> expected_probs, int df_adjust);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi_square_survival(double x, int df);

// Paired quantiles at plotting positions k/(n+1): the k-th order statistic
// of the sample against the reference quantile at the same position
// (interpolated between reference order statistics, or from the callable).
std::vector<std::pair<double, double>> qq_points(std::span<const double> sample,
                                                 std::span<const double> reference);
std::vector<std::pair<double, double>> qq_points(
    std::span<const double> sample, const std::function<double(double)>& quantile);

std::string test_result_to_json(const TestResult& result);

// Writes `x,y` rows at 17 significant digits.
void save_qq_csv(std::span<const std::pair<double, double>> points,
                 const std::string& file_path);

}  // namespace bgg

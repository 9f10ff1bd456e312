#include "bgg/series.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bgg/errors.hpp"

namespace bgg {

namespace {

[[noreturn]] void throw_not_converged(const char* who, double partial, long terms) {
  std::ostringstream msg;
  msg << who << ": no convergence after " << terms << " terms (partial sum " << partial << ")";
  throw SeriesError(msg.str(), partial, terms);
}

}  // namespace

double sum_series(const std::function<LogTerm(long)>& term, const SeriesControl& control) {
  // Running representation: sum = acc * exp(offset).  The offset tracks the
  // largest term magnitude seen so far, which keeps acc within range even
  // when individual terms would overflow exp().
  double offset = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  int small_streak = 0;
  for (long k = 0; k < control.max_terms; ++k) {
    const LogTerm t = term(k);
    double abs_term = 0.0;
    if (t.sign != 0 && t.log_abs > -std::numeric_limits<double>::infinity()) {
      if (t.log_abs > offset) {
        acc *= std::exp(offset - t.log_abs);
        offset = t.log_abs;
      }
      abs_term = std::exp(t.log_abs - offset);
      acc += (t.sign > 0) ? abs_term : -abs_term;
    }
    const double sum_now = (acc == 0.0) ? 0.0 : acc * std::exp(offset);
    const double threshold =
        std::max(control.abs_tol, control.rel_tol * std::fabs(acc)) ;
    // Both the term and the threshold live at the shared offset scale, so the
    // comparison is exact even when exp(offset) overflows.
    small_streak = (abs_term <= threshold) ? small_streak + 1 : 0;
    if (small_streak >= 2 && k >= 1) return sum_now;
  }
  const double partial = (acc == 0.0) ? 0.0 : acc * std::exp(offset);
  throw_not_converged("sum_series", partial, control.max_terms);
}

double log_sum_series(const std::function<double(long)>& log_term, const SeriesControl& control) {
  double offset = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  int small_streak = 0;
  for (long k = 0; k < control.max_terms; ++k) {
    const double lt = log_term(k);
    double abs_term = 0.0;
    if (lt > -std::numeric_limits<double>::infinity()) {
      if (lt > offset) {
        acc *= std::exp(offset - lt);
        offset = lt;
      }
      abs_term = std::exp(lt - offset);
      acc += abs_term;
    }
    const double threshold = std::max(control.abs_tol, control.rel_tol * acc);
    small_streak = (abs_term <= threshold) ? small_streak + 1 : 0;
    if (small_streak >= 2 && k >= 1) {
      if (acc <= 0.0) return -std::numeric_limits<double>::infinity();
      return offset + std::log(acc);
    }
  }
  const double partial =
      (acc > 0.0) ? offset + std::log(acc) : -std::numeric_limits<double>::infinity();
  throw_not_converged("log_sum_series", partial, control.max_terms);
}

double sum_series_linear(const std::function<double(long)>& term, const SeriesControl& control) {
  double sum = 0.0;
  int small_streak = 0;
  for (long k = 0; k < control.max_terms; ++k) {
    const double t = term(k);
    sum += t;
    const double threshold = std::max(control.abs_tol, control.rel_tol * std::fabs(sum));
    small_streak = (std::fabs(t) <= threshold) ? small_streak + 1 : 0;
    if (small_streak >= 2 && k >= 1) return sum;
  }
  throw_not_converged("sum_series_linear", sum, control.max_terms);
}

}  // namespace bgg

#pragma once

#include <functional>

namespace bgg {

// Truncation policy shared by every infinite-series evaluation in the
// library.  A series is cut off once two consecutive terms fall below
// max(abs_tol, rel_tol * |partial sum|); if max_terms is reached first a
// SeriesError is thrown.
struct SeriesControl {
  double rel_tol = 1e-12;
  double abs_tol = 1e-300;
  long max_terms = 100000;
};

// One series term in log scale: value = sign * exp(log_abs).  sign == 0
// denotes an exactly-zero term (log_abs ignored).
struct LogTerm {
  double log_abs;
  int sign;
};

// Sum of term(0) + term(1) + ... with terms supplied in log scale.
// Accumulation happens against a running offset of the largest magnitude
// seen, so terms may individually overflow exp() as long as the sum is
// representable.
double sum_series(const std::function<LogTerm(long)>& term, const SeriesControl& control = {});

// log of a sum of strictly positive terms supplied as log_term(k).  Result
// stays in log scale, so the sum itself may exceed the double range.
double log_sum_series(const std::function<double(long)>& log_term,
                      const SeriesControl& control = {});

// Plain linear-scale variant for series whose terms are already safe to
// represent directly.
double sum_series_linear(const std::function<double(long)>& term,
                         const SeriesControl& control = {});

}  // namespace bgg

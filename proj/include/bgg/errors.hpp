#pragma once

#include <stdexcept>
#include <string>

namespace bgg {

// Thrown when an infinite-series evaluation hits its term cap before the
// stopping rule is satisfied.  Carries the partial sum so callers can decide
// whether the truncation is usable as a diagnostic.
class SeriesError : public std::runtime_error {
 public:
  SeriesError(const std::string& what, double partial_sum, long terms_used)
      : std::runtime_error(what), partial_sum_(partial_sum), terms_used_(terms_used) {}
  double partial_sum() const { return partial_sum_; }
  long terms_used() const { return terms_used_; }

 private:
  double partial_sum_;
  long terms_used_;
};

// Thrown when an iterative solver exhausts its iteration budget or cannot
// bracket a root.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when the data make the requested quantity unidentifiable, e.g. a
// maximum-likelihood fit on a sample whose counts are all one, or an
// information matrix that is not positive definite.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a text input (CSV row, header, number) cannot be decoded.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bgg

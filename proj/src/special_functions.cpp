#include "bgg/special_functions.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bgg/errors.hpp"

namespace bgg {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

[[noreturn]] void domain_fail(const char* who, const char* requirement, double value) {
  std::ostringstream msg;
  msg << who << ": " << requirement << " (got " << value << ")";
  throw std::domain_error(msg.str());
}

// Lanczos coefficients for g = 607/128, 15 terms (Godfrey's set).
constexpr double kLanczosG = 607.0 / 128.0;
constexpr double kLanczos[15] = {
    0.99999999999999709182,     57.156235665862923517,     -59.597960355475491248,
    14.136097974741747174,      -0.49191381609762019978,   0.33994649984811888699e-4,
    0.46523628927048575665e-4,  -0.98374475304879564677e-4, 0.15808870322491248884e-3,
    -0.21026444172410488319e-3, 0.21743961811521264320e-3, -0.16431810653676389022e-3,
    0.84418223983852743293e-4,  -0.26190838401581408670e-4, 0.36899182659531622704e-5,
};

// Bernoulli numbers B_2 .. B_14 divided by 2k, for the digamma tail
// sum_k B_{2k} / (2k x^{2k}).
constexpr double kDigammaTail[7] = {
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
};

// Bernoulli numbers B_2 .. B_14 for the trigamma tail sum_k B_{2k} / x^{2k+1}.
constexpr double kTrigammaTail[7] = {
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0,
    5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0,
};

// P(a,x) by its power series; requires x < a + 1 for fast convergence.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) {
      return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
  }
  throw SeriesError("gamma_p: series did not converge", sum, 10000);
}

// Q(a,x) by the Lentz continued fraction; requires x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double kFpMin = std::numeric_limits<double>::min() / 1e-16;
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) {
      return h * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
  }
  throw SeriesError("gamma_q: continued fraction did not converge", h, 10000);
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) domain_fail("log_gamma", "requires x > 0", x);
  double acc = kLanczos[0];
  for (int i = 1; i < 15; ++i) acc += kLanczos[i] / (x + static_cast<double>(i) - 1.0);
  const double t = x + kLanczosG - 0.5;
  return 0.5 * std::log(2.0 * kPi) + (x - 0.5) * std::log(t) - t + std::log(acc);
}

double digamma(double x) {
  if (!(x > 0.0)) domain_fail("digamma", "requires x > 0", x);
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  double tail = 0.0;
  double power = inv2;
  for (int k = 0; k < 7; ++k) {
    tail += kDigammaTail[k] * power;
    power *= inv2;
  }
  return shift + std::log(x) - 0.5 / x - tail;
}

double trigamma(double x) {
  if (!(x > 0.0)) domain_fail("trigamma", "requires x > 0", x);
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double tail = 0.0;
  double power = inv * inv2;
  for (int k = 0; k < 7; ++k) {
    tail += kTrigammaTail[k] * power;
    power *= inv2;
  }
  return shift + inv + 0.5 * inv2 + tail;
}

double gamma_p(double a, double x) {
  if (!(a > 0.0)) domain_fail("gamma_p", "requires a > 0", a);
  if (!(x >= 0.0)) domain_fail("gamma_p", "requires x >= 0", x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0)) domain_fail("gamma_q", "requires a > 0", a);
  if (!(x >= 0.0)) domain_fail("gamma_q", "requires x >= 0", x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double erf(double x) {
  if (x == 0.0) return 0.0;
  const double p = gamma_p(0.5, x * x);
  return (x > 0.0) ? p : -p;
}

double erf_normal_kernel(double x) {
  constexpr double kSqrt2 = 1.41421356237309504880168872420969808;
  return kSqrt2 * erf(x / kSqrt2);
}

double log_beta(double a, double b) {
  if (!(a > 0.0)) domain_fail("log_beta", "requires a > 0", a);
  if (!(b > 0.0)) domain_fail("log_beta", "requires b > 0", b);
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

}  // namespace bgg

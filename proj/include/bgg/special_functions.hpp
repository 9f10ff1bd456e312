#pragma once

#include "bgg/series.hpp"

namespace bgg {

// ln Gamma(x) for x > 0, Lanczos approximation (g = 607/128, 15 terms),
// relative accuracy around 1e-15.
double log_gamma(double x);

// Psi(x) = d/dx ln Gamma(x) for x > 0.  Recurrence shift to x >= 10 followed
// by the asymptotic Bernoulli series.
double digamma(double x);

// Psi'(x) for x > 0, same shift-then-asymptotic scheme.
double trigamma(double x);

// Regularized incomplete gamma functions, P(a,x) + Q(a,x) = 1, a > 0, x >= 0.
// Power series for x < a+1, Lentz continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Conventional error function, computed as sign(x) * P(1/2, x^2).
double erf(double x);

// Variant with the standard-normal kernel, (2/sqrt(pi)) Int_0^x e^{-t^2/2} dt
// = sqrt(2) erf(x / sqrt(2)).  Odd in x, range (-sqrt(2), sqrt(2)).
double erf_normal_kernel(double x);

// ln B(a,b) for a, b > 0.
double log_beta(double a, double b);

}  // namespace bgg

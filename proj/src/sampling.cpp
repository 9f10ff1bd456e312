#include "bgg/sampling.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bgg/special_functions.hpp"

namespace bgg {

namespace {

[[noreturn]] void domain_fail(const char* who, const std::string& detail) {
  std::ostringstream msg;
  msg << who << ": " << detail;
  throw std::domain_error(msg.str());
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  // Mix the stream id into the splitmix chain so streams with equal seeds
  // start from unrelated states.
  std::uint64_t chain = seed ^ (0xD2B74407B1CE6E93ULL * (stream_id + 1));
  for (auto& word : state_) word = splitmix64(chain);
}

std::uint64_t RandomStream::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RandomStream::next_uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double sample_uniform(RandomStream& rng) { return rng.next_uniform(); }

double sample_normal(RandomStream& rng) {
  double u, v, s;
  do {
    u = 2.0 * rng.next_uniform() - 1.0;
    v = 2.0 * rng.next_uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

double sample_gamma(double shape, double rate, RandomStream& rng) {
  if (!(shape > 0.0)) domain_fail("sample_gamma", "shape must be positive");
  if (!(rate > 0.0)) domain_fail("sample_gamma", "rate must be positive");
  // Boost small shapes above one, then scale back by U^{1/shape}.
  if (shape < 1.0) {
    const double u = rng.next_uniform();
    return sample_gamma(shape + 1.0, rate, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

long sample_geometric(double p, RandomStream& rng) {
  if (!(p > 0.0 && p < 1.0)) domain_fail("sample_geometric", "p must lie in (0,1)");
  const double n = std::ceil(std::log(rng.next_uniform()) / std::log1p(-p));
  return (n < 1.0) ? 1 : static_cast<long>(n);
}

long sample_poisson(double lambda, RandomStream& rng) {
  if (!(lambda > 0.0)) domain_fail("sample_poisson", "lambda must be positive");
  if (lambda < 30.0) {
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = rng.next_uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.next_uniform();
    }
    return k;
  }
  // Transformed rejection with squeeze for large means.
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.next_uniform() - 0.5;
    const double v = rng.next_uniform();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        -lambda + k * std::log(lambda) - log_gamma(k + 1.0)) {
      return static_cast<long>(kf);
    }
  }
}

long sample_nb(double r, double p, RandomStream& rng) {
  if (!(r > 0.0)) domain_fail("sample_nb", "r must be positive");
  if (!(p > 0.0 && p < 1.0)) domain_fail("sample_nb", "p must lie in (0,1)");
  const double mean = sample_gamma(r, p / (1.0 - p), rng);
  if (mean == 0.0) return 0;
  return sample_poisson(mean, rng);
}

long sample_logarithmic(double p, RandomStream& rng) {
  if (!(p > 0.0 && p < 1.0)) domain_fail("sample_logarithmic", "p must lie in (0,1)");
  const double q = 1.0 - p;
  const double lambda = -std::log(p);
  const double u = rng.next_uniform();
  double term = q / lambda;
  double cum = term;
  long k = 1;
  // Remaining mass after k is below q^{k+1} / (lambda (k+1) p); cap there.
  while (cum < u) {
    const double tail_bound = term * q * static_cast<double>(k) /
                              (static_cast<double>(k + 1) * p);
    if (tail_bound < 1e-15) break;
    ++k;
    term *= q * static_cast<double>(k - 1) / static_cast<double>(k);
    cum += term;
  }
  return k;
}

BggDraw sample_bgg(const BggParams& params, RandomStream& rng, bool literal_sum) {
  validate(params);
  const long n = sample_geometric(params.p, rng);
  double x;
  if (literal_sum) {
    x = 0.0;
    for (long i = 0; i < n; ++i) x += sample_gamma(params.alpha, params.beta, rng);
  } else {
    x = sample_gamma(static_cast<double>(n) * params.alpha, params.beta, rng);
  }
  return {x, n};
}

BggDraw sample_bgg_compound_poisson(const BggParams& params, RandomStream& rng) {
  validate(params);
  double x = sample_gamma(params.alpha, params.beta, rng);
  long n = 1;
  const long q = sample_poisson(-std::log(params.p), rng);
  for (long i = 0; i < q; ++i) {
    const long z = sample_logarithmic(params.p, rng);
    x += sample_gamma(static_cast<double>(z) * params.alpha, params.beta, rng);
    n += z;
  }
  return {x, n};
}

BggDraw sample_bgg_geometric_sum(double q, const BggParams& inner, RandomStream& rng) {
  validate(inner);
  const long m = sample_geometric(q, rng);
  double x = 0.0;
  long n = 0;
  for (long i = 0; i < m; ++i) {
    const BggDraw draw = sample_bgg(inner, rng);
    x += draw.x;
    n += draw.n;
  }
  return {x, n};
}

BmixgnbDraw sample_bmixgnb(const BmixgnbParams& params, RandomStream& rng,
                           bool drift_plus_sum) {
  validate(params);
  const long m = sample_nb(params.r, params.p, rng);
  double y;
  if (drift_plus_sum) {
    y = sample_gamma(params.r * params.alpha, params.beta, rng);
    for (long i = 0; i < m; ++i) y += sample_gamma(params.alpha, params.beta, rng);
  } else {
    y = sample_gamma(params.alpha * (params.r + static_cast<double>(m)), params.beta, rng);
  }
  return {y, m};
}

BmixgnbDraw sample_bmixgnb_time_changed(const BmixgnbParams& params, double q,
                                        RandomStream& rng) {
  validate(params);
  if (!(q > 0.0 && q < 1.0)) {
    domain_fail("sample_bmixgnb_time_changed", "q must lie in (0,1)");
  }
  const long outer = sample_nb(params.r, q, rng);
  const long m = sample_nb(params.r + static_cast<double>(outer), params.p, rng);
  const double y =
      sample_gamma(params.alpha * (params.r + static_cast<double>(m)), params.beta, rng);
  return {y, m};
}

ProcessPath simulate_path(const BmixgnbParams& params, std::span<const double> times,
                          RandomStream& rng) {
  // r plays no role here; validate the shared (beta, alpha, p) triple.
  validate(BmixgnbParams{params.beta, params.alpha, params.p, 1.0});
  ProcessPath path;
  if (times.empty()) return path;
  if (!(times[0] >= 0.0)) domain_fail("simulate_path", "times must start at or after 0");
  for (size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      domain_fail("simulate_path", "times must be strictly increasing");
    }
  }
  path.times.assign(times.begin(), times.end());
  path.x_values.resize(times.size());
  path.n_values.resize(times.size());
  double x = 0.0;
  long n = 0;
  double prev_t = 0.0;
  for (size_t i = 0; i < times.size(); ++i) {
    const double dt = times[i] - prev_t;
    if (dt > 0.0) {
      const long dn = sample_nb(dt, params.p, rng);
      n += dn;
      const double shape = params.alpha * (dt + static_cast<double>(dn));
      x += sample_gamma(shape, params.beta, rng);
    }
    path.x_values[i] = x;
    path.n_values[i] = n;
    prev_t = times[i];
  }
  return path;
}

}  // namespace bgg

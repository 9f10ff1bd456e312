#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "bgg/bgg_distribution.hpp"
#include "bgg/bmixgnb_distribution.hpp"

namespace bgg {

// Deterministic counter-seeded generator (xoshiro256++ state filled by
// splitmix64).  Identical (seed, stream_id) reproduce the same sequence;
// distinct stream_ids give independent streams safe to run in parallel.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();
  // Strictly inside (0,1), 53-bit resolution.
  double next_uniform();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::array<std::uint64_t, 4> state_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

double sample_uniform(RandomStream& rng);
double sample_normal(RandomStream& rng);

// Gamma(shape, rate) with density beta^a/Gamma(a) x^{a-1} e^{-beta x}.
double sample_gamma(double shape, double rate, RandomStream& rng);

// Geometric on {1, 2, ...}, P(N = n) = p (1-p)^{n-1}.
long sample_geometric(double p, RandomStream& rng);

long sample_poisson(double lambda, RandomStream& rng);

// NB(r, p) on {0, 1, ...} via a Poisson draw with gamma-distributed mean,
// exact for all real r > 0.
long sample_nb(double r, double p, RandomStream& rng);

// Logarithmic distribution, P(Z = k) = (1-p)^k / (lambda k) with
// lambda = -log p, k >= 1.
long sample_logarithmic(double p, RandomStream& rng);

struct BggDraw {
  double x;
  long n;
};

struct BmixgnbDraw {
  double y;
  long m;
};

// N ~ Geom(p), X | N ~ Gamma(N alpha, beta).  With literal_sum the X draw is
// the explicit sum of N unit-shape-alpha gammas instead of the one-shot
// equivalent.
BggDraw sample_bgg(const BggParams& params, RandomStream& rng, bool literal_sum = false);

// Compound-Poisson construction: (G, 1) plus a Poisson(-log p) number of
// (Gamma(alpha Z, beta), Z) pairs with logarithmic Z.
BggDraw sample_bgg_compound_poisson(const BggParams& params, RandomStream& rng);

// Sum of a Geom(q) number of iid BGG(beta, alpha, p) draws; distributed
// BGG(beta, alpha, p q).
BggDraw sample_bgg_geometric_sum(double q, const BggParams& inner, RandomStream& rng);

// M ~ NB(r, p), Y | M ~ Gamma(alpha (r + M), beta).  With drift_plus_sum the
// Y draw is Gamma(alpha r, beta) plus M unit gammas instead of one draw.
BmixgnbDraw sample_bmixgnb(const BmixgnbParams& params, RandomStream& rng,
                           bool drift_plus_sum = false);

// One NB clock (parameter p) run at the random time t + NB_q(t) of another;
// the result is BMixGNB(beta, alpha, p q/(1-p+pq), t) with
// (beta, alpha, p) = (params.beta, params.alpha, params.p) and t = params.r.
BmixgnbDraw sample_bmixgnb_time_changed(const BmixgnbParams& params, double q,
                                        RandomStream& rng);

// Grid simulation of (X(t), NB(t)): NB increments over each interval, then
// gamma increments with shape alpha (dt + dNB).  params.r is ignored; the
// grid supplies the time indices.
ProcessPath simulate_path(const BmixgnbParams& params, std::span<const double> times,
                          RandomStream& rng);

}  // namespace bgg

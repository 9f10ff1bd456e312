#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgg/errors.hpp"
#include "bgg/inference.hpp"
#include "bgg/sampling.hpp"
#include "bgg/special_functions.hpp"

using namespace bgg;

namespace {

bool close(double a, double b, double tol = 1e-12) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

PairSample simulate_bgg_sample(const BggParams& params, int n, std::uint64_t seed) {
  PairSample data;
  data.model_kind = ModelKind::kBgg;
  RandomStream rng(seed);
  for (int i = 0; i < n; ++i) {
    const BggDraw d = sample_bgg(params, rng);
    data.xs.push_back(d.x);
    data.ns.push_back(d.n);
  }
  return data;
}

PairSample simulate_bmixgnb_sample(const BmixgnbParams& params, int n,
                                   std::uint64_t seed) {
  PairSample data;
  data.model_kind = ModelKind::kBmixgnb;
  RandomStream rng(seed);
  for (int i = 0; i < n; ++i) {
    const BmixgnbDraw d = sample_bmixgnb(params, rng);
    data.xs.push_back(d.y);
    data.ns.push_back(d.m);
  }
  return data;
}

double fd_partial(const std::function<double(const std::vector<double>&)>& f,
                  std::vector<double> theta, size_t j) {
  const double h = 1e-6 * std::max(1.0, std::fabs(theta[j]));
  std::vector<double> up = theta, down = theta;
  up[j] += h;
  down[j] -= h;
  return (f(up) - f(down)) / (2.0 * h);
}

// Average observed information over the sample: the negated symmetrized
// central-difference Jacobian of the total score, divided by n.
Matrix mc_information(
    const std::function<std::vector<double>(const std::vector<double>&)>& score,
    const std::vector<double>& theta, double n) {
  const size_t d = theta.size();
  Matrix hess(d, std::vector<double>(d, 0.0));
  for (size_t j = 0; j < d; ++j) {
    const double h = 1e-5 * std::max(1.0, std::fabs(theta[j]));
    std::vector<double> up = theta, down = theta;
    up[j] += h;
    down[j] -= h;
    const std::vector<double> su = score(up);
    const std::vector<double> sd = score(down);
    for (size_t i = 0; i < d; ++i) hess[i][j] = (su[i] - sd[i]) / (2.0 * h);
  }
  Matrix info(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) info[i][j] = -0.5 * (hess[i][j] + hess[j][i]) / n;
  }
  return info;
}

void check_info_agreement(const Matrix& analytic, const Matrix& simulated, double tol) {
  for (size_t i = 0; i < analytic.size(); ++i) {
    for (size_t j = 0; j < analytic.size(); ++j) {
      CAPTURE(i);
      CAPTURE(j);
      const double scale = std::sqrt(analytic[i][i] * analytic[j][j]);
      if (std::fabs(analytic[i][j]) > 1e-9 * scale) {
        CHECK(std::fabs(simulated[i][j] - analytic[i][j]) <=
              tol * std::fabs(analytic[i][j]));
      } else {
        CHECK(std::fabs(simulated[i][j]) <= tol * scale);
      }
    }
  }
}

}  // namespace

TEST_CASE("pair sample basics") {
  PairSample data;
  data.xs = {1.5, 2.5, 3.0};
  data.ns = {1, 2, 3};
  validate(data);
  CHECK(close(mean_x(data), 7.0 / 3.0));
  CHECK(close(mean_n(data), 2.0));

  SUBCASE("count bounds follow the model tag") {
    PairSample zero = data;
    zero.ns[0] = 0;
    CHECK_THROWS_AS(validate(zero), std::domain_error);
    zero.model_kind = ModelKind::kBmixgnb;
    validate(zero);
    zero.ns[0] = -1;
    CHECK_THROWS_AS(validate(zero), std::domain_error);
  }

  SUBCASE("invalid magnitudes") {
    PairSample bad = data;
    bad.xs[1] = 0.0;
    CHECK_THROWS_AS(validate(bad), std::domain_error);
    bad.xs[1] = -2.0;
    CHECK_THROWS_AS(validate(bad), std::domain_error);
  }

  SUBCASE("length mismatch and empty") {
    PairSample bad = data;
    bad.ns.pop_back();
    CHECK_THROWS_AS(validate(bad), std::domain_error);
    CHECK_THROWS_AS(validate(PairSample{}), std::domain_error);
  }
}

TEST_CASE("pairs csv round trip") {
  PairSample data;
  data.xs = {3.141592653589793, 0.0001220703125, 17.0};
  data.ns = {2, 1, 40};
  const std::string path = "test_inference_pairs.csv";
  save_pairs_csv(data, path);
  const PairSample loaded = load_pairs_csv(path, ModelKind::kBgg);
  REQUIRE(loaded.xs.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(loaded.xs[i] == data.xs[i]);
    CHECK(loaded.ns[i] == data.ns[i]);
  }
  std::remove(path.c_str());

  SUBCASE("parse failures") {
    const auto write_file = [](const std::string& p, const std::string& text) {
      std::FILE* f = std::fopen(p.c_str(), "w");
      std::fputs(text.c_str(), f);
      std::fclose(f);
    };
    const std::string bad = "test_inference_bad.csv";
    write_file(bad, "wrong,header\n1.0,1\n");
    CHECK_THROWS_AS(load_pairs_csv(bad, ModelKind::kBgg), ParseError);
    write_file(bad, "x,n\n1.0\n");
    CHECK_THROWS_AS(load_pairs_csv(bad, ModelKind::kBgg), ParseError);
    write_file(bad, "x,n\n1.0,abc\n");
    CHECK_THROWS_AS(load_pairs_csv(bad, ModelKind::kBgg), ParseError);
    write_file(bad, "x,n\n1.0,2,3\n");
    CHECK_THROWS_AS(load_pairs_csv(bad, ModelKind::kBgg), ParseError);
    write_file(bad, "x,n\n-1.0,2\n");
    CHECK_THROWS_AS(load_pairs_csv(bad, ModelKind::kBgg), std::domain_error);
    std::remove(bad.c_str());
  }
}

TEST_CASE("normal quantile") {
  CHECK(close(normal_quantile_two_sided(0.95), 1.9599639845400542));
  CHECK(close(normal_quantile_two_sided(0.99), 2.5758293035489008, 1e-12));
  CHECK(close(normal_quantile_two_sided(0.5), 0.67448975019608171, 1e-12));
  CHECK_THROWS_AS(normal_quantile_two_sided(0.0), std::domain_error);
  CHECK_THROWS_AS(normal_quantile_two_sided(1.0), std::domain_error);
}

TEST_CASE("bgg log-likelihood") {
  PairSample one;
  one.xs = {1.0};
  one.ns = {1};
  CHECK(close(bgg_loglik({1.0, 1.0, 0.5}, one), -1.6931471805599453));

  SUBCASE("sums the joint log densities") {
    const BggParams theta{1.3, 0.9, 0.45};
    const PairSample data = simulate_bgg_sample({1.0, 1.2, 0.5}, 50, 3001);
    double direct = 0.0;
    for (size_t i = 0; i < data.xs.size(); ++i) {
      direct += joint_log_pdf(theta, data.xs[i], data.ns[i]);
    }
    CHECK(close(bgg_loglik(theta, data), direct, 1e-10));
  }

  SUBCASE("model tag is enforced") {
    PairSample wrong = one;
    wrong.model_kind = ModelKind::kBmixgnb;
    CHECK_THROWS_AS(bgg_loglik({1.0, 1.0, 0.5}, wrong), std::domain_error);
  }
}

TEST_CASE("bgg score") {
  const PairSample data = simulate_bgg_sample({2.0, 1.4, 0.35}, 80, 3002);
  const BggParams theta{1.7, 1.1, 0.52};
  const std::array<double, 3> score = bgg_score(theta, data);
  const auto loglik = [&](const std::vector<double>& t) {
    return bgg_loglik({t[0], t[1], t[2]}, data);
  };
  const std::vector<double> tv{theta.beta, theta.alpha, theta.p};
  for (size_t j = 0; j < 3; ++j) {
    CAPTURE(j);
    CHECK(close(score[j], fd_partial(loglik, tv, j), 1e-4));
  }

  SUBCASE("p component vanishes exactly at the count-mean reciprocal") {
    PairSample dyadic;
    dyadic.xs = {1.0, 2.0};
    dyadic.ns = {1, 3};
    const std::array<double, 3> s = bgg_score({1.0, 1.0, 0.5}, dyadic);
    CHECK(s[2] == 0.0);
  }

  SUBCASE("orthogonal chain rule") {
    const BggParamsOrtho star = to_ortho(theta);
    const std::array<double, 3> score_star = bgg_score_ortho(star, data);
    const auto loglik_star = [&](const std::vector<double>& t) {
      return bgg_loglik(to_rate(BggParamsOrtho{t[0], t[1], t[2]}), data);
    };
    const std::vector<double> sv{star.mu, star.alpha, star.p};
    for (size_t j = 0; j < 3; ++j) {
      CAPTURE(j);
      CHECK(close(score_star[j], fd_partial(loglik_star, sv, j), 1e-4));
    }
  }
}

TEST_CASE("bgg fit") {
  SUBCASE("closed-form p") {
    PairSample data;
    data.xs = {0.5, 3.0, 2.2};
    data.ns = {1, 2, 3};
    const FitReport report = bgg_fit(data);
    CHECK(close(report.estimates[2], 0.5));
    CHECK(report.converged);
  }

  SUBCASE("proportional data pushes the shape to the boundary") {
    PairSample data;
    data.xs = {1.0, 2.0, 3.0};
    data.ns = {1, 2, 3};
    CHECK_THROWS_AS(bgg_fit(data), ConvergenceError);
  }

  SUBCASE("score vanishes at the estimate") {
    const PairSample data = simulate_bgg_sample({1.5, 0.9, 0.4}, 400, 3003);
    const FitReport report = bgg_fit(data);
    const std::array<double, 3> s = bgg_score(
        {report.estimates[0], report.estimates[1], report.estimates[2]}, data);
    for (double comp : s) CHECK(std::fabs(comp) < 1e-8);
  }

  SUBCASE("recovers simulated truth within four standard errors") {
    const BggParams truth{0.8805 / 0.0082, 0.8805, 0.5093};
    const PairSample data = simulate_bgg_sample(truth, 549, 3004);
    const FitReport report = bgg_fit(data);
    const std::vector<double> target{truth.beta, truth.alpha, truth.p};
    for (size_t k = 0; k < 3; ++k) {
      CAPTURE(k);
      CHECK(std::fabs(report.estimates[k] - target[k]) < 4.0 * report.std_errors[k]);
      CHECK(report.ci_lower[k] < report.estimates[k]);
      CHECK(report.estimates[k] < report.ci_upper[k]);
    }
    CHECK(report.iterations > 0);

    SUBCASE("local maximum") {
      const double at_mle = report.loglik_at_mle;
      for (size_t k = 0; k < 3; ++k) {
        for (double sign : {-1.0, 1.0}) {
          std::vector<double> t{report.estimates[0], report.estimates[1],
                                report.estimates[2]};
          t[k] *= 1.0 + sign * 1e-3;
          CHECK(bgg_loglik({t[0], t[1], t[2]}, data) < at_mle);
        }
      }
    }
  }

  SUBCASE("rate and orthogonal fits agree") {
    const PairSample data = simulate_bgg_sample({2.0, 1.2, 0.45}, 300, 3005);
    const FitReport rate = bgg_fit(data);
    const FitReport star = bgg_fit_ortho(data);
    CHECK(close(star.estimates[1], rate.estimates[1], 1e-10));
    CHECK(close(star.estimates[2], rate.estimates[2], 1e-10));
    CHECK(close(star.estimates[0], rate.estimates[1] / rate.estimates[0], 1e-10));
    CHECK(close(star.loglik_at_mle, rate.loglik_at_mle, 1e-10));
    CHECK(star.parametrization == "orthogonal");
  }

  SUBCASE("degenerate and invalid data") {
    PairSample ones;
    ones.xs = {1.0, 2.0, 3.0};
    ones.ns = {1, 1, 1};
    CHECK_THROWS_AS(bgg_fit(ones), DegenerateError);
    PairSample single;
    single.xs = {1.0};
    single.ns = {2};
    CHECK_THROWS_AS(bgg_fit(single), std::domain_error);
  }

  SUBCASE("unit-shape confidence intervals cover") {
    int covered = 0;
    for (int rep = 0; rep < 100; ++rep) {
      const PairSample data =
          simulate_bgg_sample({2.5, 1.0, 0.45}, 500, 4000 + static_cast<std::uint64_t>(rep));
      const FitReport report = bgg_fit(data);
      if (report.ci_lower[1] <= 1.0 && 1.0 <= report.ci_upper[1]) ++covered;
    }
    CHECK(covered >= 90);
  }

  SUBCASE("observed-information errors are close to expected ones") {
    const PairSample data = simulate_bgg_sample({1.5, 0.9, 0.4}, 2000, 3006);
    SolverOptions opts;
    const FitReport expected = bgg_fit(data, opts);
    opts.observed_information = true;
    const FitReport observed = bgg_fit(data, opts);
    for (size_t k = 0; k < 3; ++k) {
      CHECK(close(observed.std_errors[k], expected.std_errors[k], 0.2));
    }
  }
}

TEST_CASE("restricted shape profile") {
  const PairSample data = simulate_bgg_sample({1.5, 1.0, 0.4}, 500, 3007);
  const FitReport full = bgg_fit(data);
  const double restricted = bgg_profile_loglik_alpha(data, 1.0);
  CHECK(restricted <= full.loglik_at_mle + 1e-9);
  CHECK(bgg_profile_loglik_alpha(data, full.estimates[1]) ==
        doctest::Approx(full.loglik_at_mle).epsilon(1e-12));
  const TestResult lr = lr_test(full.loglik_at_mle, restricted, 1);
  CHECK(lr.statistic >= 0.0);
  CHECK(lr.p_value > 0.001);
}

TEST_CASE("bgg information matrix") {
  SUBCASE("closed entries") {
    const Matrix j = bgg_fisher({1.0, 1.0, 0.5});
    CHECK(close(j[2][2], 8.0));
    CHECK(close(j[0][0], 2.0));
    CHECK(close(j[0][1], -2.0));
    CHECK(j[0][2] == 0.0);
    CHECK(j[1][2] == 0.0);
    CHECK(close(j[1][1], 2.6035725200595023457, 1e-10));
  }

  SUBCASE("series entry at a second point") {
    const Matrix j = bgg_fisher({3.0, 0.8805, 0.5093});
    CHECK(close(j[1][1], 3.0245751071547746626, 1e-10));
  }

  SUBCASE("matches the averaged observed information") {
    const BggParams theta{0.8805 / 0.0082, 0.8805, 0.5093};
    const PairSample data = simulate_bgg_sample(theta, 100000, 3008);
    const Matrix simulated = mc_information(
        [&](const std::vector<double>& t) {
          const std::array<double, 3> s = bgg_score({t[0], t[1], t[2]}, data);
          return std::vector<double>{s[0], s[1], s[2]};
        },
        {theta.beta, theta.alpha, theta.p}, static_cast<double>(data.xs.size()));
    check_info_agreement(bgg_fisher(theta), simulated, 0.02);
  }

  SUBCASE("orthogonal form") {
    const Matrix j = bgg_fisher_ortho({1.0, 1.0, 0.5});
    CHECK(close(j[0][0], 2.0));
    CHECK(close(j[1][1], 2.6035725200595023457 - 2.0, 1e-9));
    CHECK(close(j[2][2], 8.0));
    CHECK(j[0][1] == 0.0);

    const BggParamsOrtho star{0.0082, 0.8805, 0.5093};
    const PairSample data = simulate_bgg_sample(to_rate(star), 100000, 3009);
    const Matrix simulated = mc_information(
        [&](const std::vector<double>& t) {
          const std::array<double, 3> s =
              bgg_score_ortho(BggParamsOrtho{t[0], t[1], t[2]}, data);
          return std::vector<double>{s[0], s[1], s[2]};
        },
        {star.mu, star.alpha, star.p}, static_cast<double>(data.xs.size()));
    const Matrix analytic = bgg_fisher_ortho(star);
    check_info_agreement(analytic, simulated, 0.02);
    // The (mu, alpha) cross term has no analytic counterpart to compare
    // against; it must be small next to its diagonal neighbors.
    CHECK(std::fabs(simulated[0][1]) <
          0.02 * std::sqrt(analytic[0][0] * analytic[1][1]));
  }
}

TEST_CASE("bmixgnb log-likelihood and score") {
  const BmixgnbParams theta{1.0, 1.5, 0.4, 2.0};
  const PairSample data = simulate_bmixgnb_sample({0.8, 1.2, 0.5, 1.7}, 60, 3010);

  SUBCASE("sums the joint log densities") {
    double direct = 0.0;
    for (size_t i = 0; i < data.xs.size(); ++i) {
      direct += joint_log_pdf_ym(theta, data.xs[i], data.ns[i]);
    }
    CHECK(close(bmixgnb_loglik(theta, data), direct, 1e-10));
  }

  SUBCASE("score matches finite differences") {
    const std::array<double, 4> score = bmixgnb_score(theta, data);
    const auto loglik = [&](const std::vector<double>& t) {
      return bmixgnb_loglik({t[0], t[1], t[2], t[3]}, data);
    };
    const std::vector<double> tv{theta.beta, theta.alpha, theta.p, theta.r};
    for (size_t j = 0; j < 4; ++j) {
      CAPTURE(j);
      CHECK(close(score[j], fd_partial(loglik, tv, j), 1e-4));
    }
  }

  SUBCASE("orthogonal chain rule") {
    const BmixgnbParamsOrtho star = to_ortho(theta);
    const std::array<double, 4> score_star = bmixgnb_score_ortho(star, data);
    const auto loglik_star = [&](const std::vector<double>& t) {
      return bmixgnb_loglik(to_rate(BmixgnbParamsOrtho{t[0], t[1], t[2], t[3]}), data);
    };
    const std::vector<double> sv{star.mu, star.alpha, star.p, star.r};
    for (size_t j = 0; j < 4; ++j) {
      CAPTURE(j);
      CHECK(close(score_star[j], fd_partial(loglik_star, sv, j), 1e-4));
    }
  }
}

TEST_CASE("bmixgnb fit") {
  SUBCASE("recovers simulated truth within four standard errors") {
    const BmixgnbParams truth{1.0, 1.5, 0.4, 2.0};
    const PairSample data = simulate_bmixgnb_sample(truth, 2000, 3011);
    const FitReport report = bmixgnb_fit(data);
    const std::vector<double> target{truth.beta, truth.alpha, truth.p, truth.r};
    for (size_t k = 0; k < 4; ++k) {
      CAPTURE(k);
      CHECK(std::fabs(report.estimates[k] - target[k]) < 4.0 * report.std_errors[k]);
    }

    SUBCASE("profile identities and stationarity") {
      double mbar = 0.0;
      for (long m : data.ns) mbar += static_cast<double>(m);
      mbar /= static_cast<double>(data.ns.size());
      const double r_hat = report.estimates[3];
      CHECK(close(report.estimates[2], r_hat / (r_hat + mbar), 1e-12));
      const std::array<double, 4> s =
          bmixgnb_score({report.estimates[0], report.estimates[1], report.estimates[2],
                         report.estimates[3]},
                        data);
      const double n = static_cast<double>(data.xs.size());
      for (double comp : s) CHECK(std::fabs(comp) < 1e-6 * n);
    }

    SUBCASE("local maximum") {
      for (size_t k = 0; k < 4; ++k) {
        for (double sign : {-1.0, 1.0}) {
          std::vector<double> t{report.estimates[0], report.estimates[1],
                                report.estimates[2], report.estimates[3]};
          t[k] *= 1.0 + sign * 1e-3;
          CHECK(bmixgnb_loglik({t[0], t[1], t[2], t[3]}, data) < report.loglik_at_mle);
        }
      }
    }

    SUBCASE("orthogonal fit agrees") {
      const FitReport star = bmixgnb_fit_ortho(data);
      CHECK(close(star.estimates[0], report.estimates[1] / report.estimates[0], 1e-10));
      CHECK(close(star.estimates[1], report.estimates[1], 1e-10));
      CHECK(close(star.estimates[2], report.estimates[2], 1e-10));
      CHECK(close(star.estimates[3], report.estimates[3], 1e-10));
    }
  }

  SUBCASE("unit r with shifted counts reproduces the three-parameter fit") {
    const PairSample bgg_data = simulate_bgg_sample({1.5, 0.9, 0.4}, 400, 3012);
    PairSample shifted;
    shifted.model_kind = ModelKind::kBmixgnb;
    shifted.xs = bgg_data.xs;
    for (long n : bgg_data.ns) shifted.ns.push_back(n - 1);
    const FitReport three = bgg_fit(bgg_data);
    const FitReport fixed = bmixgnb_fit_fixed_r(shifted, 1.0);
    for (size_t k = 0; k < 3; ++k) {
      CAPTURE(k);
      CHECK(close(fixed.estimates[k], three.estimates[k], 1e-6));
    }
    CHECK(close(fixed.loglik_at_mle, three.loglik_at_mle, 1e-10));
  }

  SUBCASE("degenerate counts") {
    PairSample zeros;
    zeros.model_kind = ModelKind::kBmixgnb;
    zeros.xs = {1.0, 2.0, 0.5};
    zeros.ns = {0, 0, 0};
    CHECK_THROWS_AS(bmixgnb_fit(zeros), DegenerateError);
  }
}

TEST_CASE("bmixgnb information matrix") {
  const BmixgnbParams theta{1.0, 1.5, 0.4, 2.0};

  SUBCASE("entries") {
    const Matrix j = bmixgnb_fisher(theta);
    CHECK(close(j[0][0], 7.5));
    CHECK(close(j[0][1], -5.0));
    CHECK(j[0][2] == 0.0);
    CHECK(close(j[0][3], -1.5));
    CHECK(close(j[1][1], 3.5682345136285108978, 1e-10));
    CHECK(close(j[1][3], 1.0926048972862333469, 1e-10));
    CHECK(close(j[2][2], 2.0 / (0.16 * 0.6)));
    CHECK(close(j[2][3], -2.5));
    CHECK(close(j[3][3], 0.77299985640081906871, 1e-10));
  }

  SUBCASE("matches the averaged observed information") {
    const PairSample data = simulate_bmixgnb_sample(theta, 100000, 3013);
    const Matrix simulated = mc_information(
        [&](const std::vector<double>& t) {
          const std::array<double, 4> s =
              bmixgnb_score(BmixgnbParams{t[0], t[1], t[2], t[3]}, data);
          return std::vector<double>{s[0], s[1], s[2], s[3]};
        },
        {theta.beta, theta.alpha, theta.p, theta.r},
        static_cast<double>(data.xs.size()));
    check_info_agreement(bmixgnb_fisher(theta), simulated, 0.02);
  }

  SUBCASE("orthogonal form") {
    const BmixgnbParamsOrtho star = to_ortho(theta);
    const Matrix j = bmixgnb_fisher_ortho(star);
    CHECK(close(j[0][0], theta.alpha * theta.r / (star.mu * star.mu * theta.p)));
    CHECK(close(j[0][3], theta.alpha / star.mu));
    CHECK(j[0][1] == 0.0);
    CHECK(j[0][2] == 0.0);
    CHECK(close(j[1][1], 3.5682345136285108978 - 2.0 / (1.5 * 0.4), 1e-9));
    CHECK(close(j[1][3], 0.0926048972862333469, 1e-9));

    const PairSample data = simulate_bmixgnb_sample(theta, 100000, 3014);
    const Matrix simulated = mc_information(
        [&](const std::vector<double>& t) {
          const std::array<double, 4> s =
              bmixgnb_score_ortho(BmixgnbParamsOrtho{t[0], t[1], t[2], t[3]}, data);
          return std::vector<double>{s[0], s[1], s[2], s[3]};
        },
        {star.mu, star.alpha, star.p, star.r}, static_cast<double>(data.xs.size()));
    check_info_agreement(j, simulated, 0.02);
    CHECK(std::fabs(simulated[0][1]) < 0.02 * std::sqrt(j[0][0] * j[1][1]));
  }
}

TEST_CASE("wald and likelihood-ratio tests") {
  const PairSample data = simulate_bgg_sample({1.5, 0.9, 0.4}, 300, 3015);
  const FitReport report = bgg_fit(data);

  SUBCASE("wald at the estimate is null") {
    const TestResult t = wald_test(report, "alpha", report.estimates[1]);
    CHECK(t.statistic == 0.0);
    CHECK(t.p_value == 1.0);
    CHECK(t.df_or_n == 1.0);
  }

  SUBCASE("wald away from the estimate") {
    const TestResult t = wald_test(report, "alpha", 0.0);
    const double z = report.estimates[1] / report.std_errors[1];
    CHECK(close(t.statistic, z * z));
    CHECK(t.p_value < 0.05);
  }

  SUBCASE("component lookup") {
    CHECK_THROWS_AS(wald_test(report, "tau", 1.0), std::invalid_argument);
    FitReport broken = report;
    broken.converged = false;
    CHECK_THROWS_AS(wald_test(broken, "alpha", 1.0), std::domain_error);
  }

  SUBCASE("likelihood ratio") {
    const TestResult same = lr_test(-10.0, -10.0, 1);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    const TestResult anchor = lr_test(-100.0, -102.833, 1);
    CHECK(close(anchor.statistic, 5.666));
    CHECK(std::fabs(anchor.p_value - 0.0173) < 5e-4);
    CHECK_THROWS_AS(lr_test(-1.0, -2.0, 0), std::domain_error);
  }
}

TEST_CASE("fit report serialization") {
  const PairSample data = simulate_bgg_sample({1.5, 0.9, 0.4}, 200, 3016);
  const FitReport report = bgg_fit(data);
  const auto parsed = nlohmann::json::parse(fit_report_to_json(report));
  CHECK(parsed["model"] == "bgg");
  CHECK(parsed["parametrization"] == "rate");
  CHECK(parsed["estimates"]["beta"].get<double>() == report.estimates[0]);
  CHECK(parsed["std_errors"]["p"].get<double>() == report.std_errors[2]);
  CHECK(parsed["ci"]["alpha"][0].get<double>() == report.ci_lower[1]);
  CHECK(parsed["ci"]["alpha"][1].get<double>() == report.ci_upper[1]);
  CHECK(parsed["loglik"].get<double>() == report.loglik_at_mle);
  CHECK(parsed["converged"].get<bool>());
  CHECK(parsed["iterations"].get<int>() == report.iterations);
}

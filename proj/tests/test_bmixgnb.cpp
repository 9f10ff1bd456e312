#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <vector>

#include "bgg/bgg_distribution.hpp"
#include "bgg/bmixgnb_distribution.hpp"

using bgg::BggParams;
using bgg::BmixgnbParams;

namespace {

bool close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals) {
  const double h = (hi - lo) / intervals;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) {
    sum += f(lo + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("negative binomial pmf") {
  CHECK(close(bgg::nb_pmf(1.0, 0.4, 0), 0.4, 1e-14));
  CHECK(close(bgg::nb_pmf(2.5, 0.3, 3), 0.11096003198558563637, 1e-13));
  SUBCASE("geometric reduction at r = 1") {
    for (long k : {0L, 1L, 4L, 9L}) {
      CHECK(close(bgg::nb_pmf(1.0, 0.35, k), 0.35 * std::pow(0.65, k), 1e-13));
    }
  }
  SUBCASE("normalizes") {
    for (double r : {0.6, 1.0, 3.7}) {
      double acc = 0.0;
      for (long k = 0; k < 600; ++k) acc += bgg::nb_pmf(r, 0.25, k);
      CHECK(close(acc, 1.0, 1e-10));
    }
  }
  CHECK_THROWS_AS(bgg::nb_pmf(0.0, 0.4, 1), std::domain_error);
  CHECK_THROWS_AS(bgg::nb_pmf(1.0, 1.0, 1), std::domain_error);
  CHECK_THROWS_AS(bgg::nb_pmf(1.0, 0.4, -1), std::domain_error);
}

TEST_CASE("joint density of (y, m)") {
  CHECK(close(bgg::joint_pdf_ym(BmixgnbParams{1, 1, 0.5, 1}, 1.0, 0), 0.5 * std::exp(-1.0),
              1e-13));
  CHECK(close(bgg::joint_pdf_ym(BmixgnbParams{1, 0.8, 0.4, 2.5}, 1.3, 2),
              0.02311559506110827287, 1e-13));
  SUBCASE("r = 1 shifts onto the bivariate gamma-geometric joint") {
    const BmixgnbParams params{1.4, 0.9, 0.3, 1.0};
    const BggParams base{1.4, 0.9, 0.3};
    for (double y : {0.2, 1.0, 3.7}) {
      for (long n : {0L, 1L, 2L, 7L}) {
        CHECK(close(bgg::joint_log_pdf_ym(params, y, n), bgg::joint_log_pdf(base, y, n + 1),
                    1e-12));
      }
    }
  }
}

TEST_CASE("joint cdf of (y, m)") {
  CHECK(close(bgg::joint_cdf_ym(BmixgnbParams{1, 2, 0.5, 0.7}, 1.0, 1),
              0.29678249905538471490, 1e-12));
  CHECK(close(bgg::joint_cdf_ym(BmixgnbParams{1, 2, 0.5, 0.7}, 80.0, 400), 1.0, 1e-9));
  SUBCASE("r = 1 shift identity") {
    const BmixgnbParams params{0.9, 1.6, 0.45, 1.0};
    const BggParams base{0.9, 1.6, 0.45};
    for (double y : {0.3, 1.5, 6.0}) {
      for (long n : {0L, 2L, 5L}) {
        CHECK(close(bgg::joint_cdf_ym(params, y, n), bgg::joint_cdf(base, y, n + 1), 1e-12));
      }
    }
  }
  SUBCASE("nondecreasing in both arguments") {
    const BmixgnbParams params{1.2, 0.8, 0.35, 2.0};
    double prev = 0.0;
    for (double y : {0.5, 2.0, 5.0, 12.0}) {
      const double v = bgg::joint_cdf_ym(params, y, 3);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("marginal density of y") {
  CHECK(close(bgg::marginal_pdf_y(BmixgnbParams{1, 0.8, 0.4, 2.5}, 1.3),
              0.11192051529959488887, 1e-12));
  CHECK(close(bgg::marginal_pdf_y(BmixgnbParams{1, 3, 0.8, 2}, 2.5), 0.04355162534564860337,
              1e-12));
  SUBCASE("BEG reduction at r = 1, alpha = 1") {
    const BmixgnbParams params{1.6, 1.0, 0.3, 1.0};
    for (double y : {0.4, 1.0, 2.9}) {
      CHECK(close(bgg::marginal_pdf_y(params, y),
                  params.p * params.beta * std::exp(-params.p * params.beta * y), 1e-12));
    }
  }
  SUBCASE("integrates to one") {
    const BmixgnbParams params{1.0, 2.0, 0.45, 1.8};
    const double mass =
        simpson([&](double y) { return bgg::marginal_pdf_y(params, y); }, 1e-8, 120.0, 8192);
    CHECK(close(mass, 1.0, 1e-8));
  }
  SUBCASE("equals the sum of the joint over m") {
    const BmixgnbParams params{1.1, 1.3, 0.5, 2.2};
    for (double y : {0.2, 1.4, 4.4}) {
      double acc = 0.0;
      for (long n = 0; n <= 200; ++n) acc += bgg::joint_pdf_ym(params, y, n);
      CHECK(close(bgg::marginal_pdf_y(params, y), acc, 1e-10));
    }
  }
}

TEST_CASE("marginal cdf of y") {
  CHECK(close(bgg::marginal_cdf_y(BmixgnbParams{1, 0.8, 0.4, 2.5}, 1.3),
              0.08077568681281978917, 1e-12));
  const BmixgnbParams params{1.0, 2.0, 0.45, 1.8};
  SUBCASE("matches quadrature") {
    const double mass =
        simpson([&](double y) { return bgg::marginal_pdf_y(params, y); }, 1e-8, 3.0, 4096);
    CHECK(close(bgg::marginal_cdf_y(params, 3.0), mass, 1e-9));
  }
  SUBCASE("total mass") { CHECK(close(bgg::marginal_cdf_y(params, 500.0), 1.0, 1e-10)); }
}

TEST_CASE("conditional pmf of m given y") {
  CHECK(close(bgg::conditional_pmf_m_given_y(BmixgnbParams{1, 2, 0.5, 1.5}, 1.0, 0),
              0.94001241952201075266, 1e-12));
  CHECK(close(bgg::conditional_pmf_m_given_y(BmixgnbParams{1, 0.8, 0.4, 2.5}, 1.3, 2),
              0.20653581695215749980, 1e-12));
  SUBCASE("normalizes over m") {
    for (const BmixgnbParams& params :
         {BmixgnbParams{1, 1, 0.5, 1}, BmixgnbParams{2, 0.6, 0.2, 3.5},
          BmixgnbParams{0.8, 2.5, 0.7, 0.4}}) {
      for (double y : {0.4, 1.9, 6.0}) {
        double acc = 0.0;
        for (long n = 0; n <= 400; ++n) {
          acc += bgg::conditional_pmf_m_given_y(params, y, n);
        }
        CHECK(close(acc, 1.0, 1e-9));
      }
    }
  }
  SUBCASE("r = 1 shift identity") {
    const BmixgnbParams params{1.2, 1.0, 0.4, 1.0};
    const BggParams base{1.2, 1.0, 0.4};
    for (double y : {0.5, 2.0}) {
      for (long n : {0L, 1L, 3L}) {
        CHECK(close(bgg::conditional_pmf_m_given_y(params, y, n),
                    bgg::conditional_pmf_n_given_x(base, y, n + 1), 1e-11));
      }
    }
  }
  SUBCASE("equals the joint to marginal ratio") {
    const BmixgnbParams params{1.6, 1.3, 0.45, 2.1};
    for (double y : {0.3, 1.2, 4.0}) {
      for (long n : {0L, 2L, 6L}) {
        const double ratio = bgg::joint_pdf_ym(params, y, n) / bgg::marginal_pdf_y(params, y);
        CHECK(close(bgg::conditional_pmf_m_given_y(params, y, n), ratio, 1e-11));
      }
    }
  }
}

TEST_CASE("conditional cdfs of (y, m)") {
  const BmixgnbParams params{1.3, 0.9, 0.4, 1.7};
  SUBCASE("given m below a cap") {
    CHECK(close(bgg::conditional_cdf_ym_given_m_le(params, 1e9, 4, 4), 1.0, 1e-9));
    CHECK_THROWS_AS(bgg::conditional_cdf_ym_given_m_le(params, 1.0, 3, 2), std::domain_error);
    const BmixgnbParams unit{1.3, 0.9, 0.4, 1.0};
    const BggParams base{1.3, 0.9, 0.4};
    for (double y : {0.5, 2.2}) {
      CHECK(close(bgg::conditional_cdf_ym_given_m_le(unit, y, 1, 2),
                  bgg::conditional_cdf_given_n_le(base, y, 2, 3), 1e-11));
    }
  }
  SUBCASE("given y below a cap") {
    CHECK(close(bgg::conditional_cdf_ym_given_y_le(params, 2.0, 4000, 2.0), 1.0, 1e-9));
    CHECK_THROWS_AS(bgg::conditional_cdf_ym_given_y_le(params, 2.5, 2, 2.0), std::domain_error);
    const double v = bgg::conditional_cdf_ym_given_y_le(params, 1.0, 2, 2.0);
    const double direct =
        bgg::joint_cdf_ym(params, 1.0, 2) / bgg::marginal_cdf_y(params, 2.0);
    CHECK(close(v, direct, 1e-12));
    const BmixgnbParams unit{1.3, 0.9, 0.4, 1.0};
    const BggParams base{1.3, 0.9, 0.4};
    CHECK(close(bgg::conditional_cdf_ym_given_y_le(unit, 1.0, 2, 2.0),
                bgg::conditional_cdf_given_x_le(base, 1.0, 3, 2.0), 1e-11));
  }
}

TEST_CASE("process characteristic function") {
  const BmixgnbParams params{1, 0.8, 0.4, 2.5};
  const std::complex<double> one = bgg::cf_process(params, 0.0, 0.0);
  CHECK(close(one.real(), 1.0, 1e-13));
  CHECK(close(one.imag(), 0.0, 1e-13));
  const std::complex<double> v = bgg::cf_process(params, 0.6, 0.9);
  CHECK(close(v.real(), -0.05341511673535475394, 1e-12));
  CHECK(close(v.imag(), 0.04773038227797321528, 1e-12));
  SUBCASE("r = 1 relates to the base cf through the count shift") {
    const BmixgnbParams unit{1.2, 1.7, 0.55, 1.0};
    const BggParams base{1.2, 1.7, 0.55};
    for (double t : {-1.0, 0.4, 2.0}) {
      for (double s : {-0.7, 0.0, 1.3}) {
        const std::complex<double> lhs = bgg::cf(base, t, s);
        const std::complex<double> rhs =
            std::exp(std::complex<double>(0.0, s)) * bgg::cf_process(unit, t, s);
        CHECK(close(lhs.real(), rhs.real(), 1e-12));
        CHECK(close(lhs.imag(), rhs.imag(), 1e-12));
      }
    }
  }
  SUBCASE("modulus bounded by one") {
    for (double t : {-2.0, 0.3, 5.0}) {
      for (double s : {-1.0, 0.2, 2.5}) {
        CHECK(std::abs(bgg::cf_process(params, t, s)) <= 1.0 + 1e-12);
      }
    }
  }
  SUBCASE("additivity in r at the cf level") {
    const BmixgnbParams a{1.1, 0.9, 0.35, 1.3};
    const BmixgnbParams b{1.1, 0.9, 0.35, 2.1};
    const BmixgnbParams ab{1.1, 0.9, 0.35, 3.4};
    const std::complex<double> prod =
        bgg::cf_process(a, 0.7, -0.2) * bgg::cf_process(b, 0.7, -0.2);
    const std::complex<double> direct = bgg::cf_process(ab, 0.7, -0.2);
    CHECK(close(prod.real(), direct.real(), 1e-12));
    CHECK(close(prod.imag(), direct.imag(), 1e-12));
  }
}

TEST_CASE("product moments of (y, m)") {
  const BmixgnbParams params{1, 0.8, 0.4, 2.5};
  CHECK(close(bgg::product_moment_ym(params, 1, 0),
              params.r * params.alpha / (params.p * params.beta), 1e-11));
  CHECK(close(bgg::product_moment_ym(BmixgnbParams{1, 2, 0.5, 1.5}, 2, 1), 195.0, 1e-10));
  CHECK(close(bgg::product_moment_ym(params, 3, 2), 29296.575, 1e-10));
  SUBCASE("covariance assembled from moments is r times the base matrix") {
    const BggParams base{params.beta, params.alpha, params.p};
    const bgg::CovarianceMatrix sigma = bgg::covariance(base);
    const double ey = bgg::product_moment_ym(params, 1, 0);
    const double ey2 = bgg::product_moment_ym(params, 2, 0);
    const double eym = bgg::product_moment_ym(params, 1, 1);
    const double em = params.r * (1.0 - params.p) / params.p;
    CHECK(close(ey2 - ey * ey, params.r * sigma.var_x, 1e-8));
    CHECK(close(eym - ey * em, params.r * sigma.cov_xn, 1e-8));
  }
}

TEST_CASE("time-change composition") {
  CHECK(close(bgg::compose_time_change(0.5, 0.5), 1.0 / 3.0, 1e-14));
  CHECK(close(bgg::compose_time_change(0.37, 1.0 - 1e-12), 0.37, 1e-9));
  CHECK_THROWS_AS(bgg::compose_time_change(0.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(bgg::compose_time_change(0.5, 1.0), std::domain_error);
}

TEST_CASE("path csv export") {
  bgg::ProcessPath path;
  path.times = {0.0, 0.5, 1.25};
  path.x_values = {0.0, 0.625, 1.875};
  path.n_values = {0, 1, 3};
  const std::string file = "test_path_out.csv";
  bgg::save_path_csv(path, file);
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x,n");
  std::getline(in, line);
  CHECK(line == "0,0,0");
  std::getline(in, line);
  CHECK(line == "0.5,0.625,1");
  std::getline(in, line);
  CHECK(line == "1.25,1.875,3");
  in.close();
  std::remove(file.c_str());
}

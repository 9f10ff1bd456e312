#include "bgg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bgg/errors.hpp"
#include "bgg/special_functions.hpp"

namespace bgg {

namespace {

[[noreturn]] void domain_fail(const char* who, const std::string& detail) {
  std::ostringstream msg;
  msg << who << ": " << detail;
  throw std::domain_error(msg.str());
}

void require_model(const char* who, const PairSample& data, ModelKind expected) {
  validate(data);
  if (data.model_kind != expected) {
    domain_fail(who, "sample is tagged for the other model");
  }
}

// Count histogram with per-group log-x sums; the likelihood loops run over
// distinct counts instead of observations.
struct GroupedSample {
  std::vector<long> counts;
  std::vector<double> multiplicities;
  std::vector<double> logx_sums;
  double n = 0.0;
  double mean_x = 0.0;
  double mean_count = 0.0;
  double sum_log_x = 0.0;
};

GroupedSample group_by_count(const PairSample& data) {
  std::map<long, std::pair<double, double>> groups;
  GroupedSample g;
  double sum_x = 0.0, sum_n = 0.0;
  for (size_t i = 0; i < data.xs.size(); ++i) {
    auto& slot = groups[data.ns[i]];
    slot.first += 1.0;
    slot.second += std::log(data.xs[i]);
    sum_x += data.xs[i];
    sum_n += static_cast<double>(data.ns[i]);
  }
  g.n = static_cast<double>(data.xs.size());
  g.mean_x = sum_x / g.n;
  g.mean_count = sum_n / g.n;
  for (const auto& [count, slot] : groups) {
    g.counts.push_back(count);
    g.multiplicities.push_back(slot.first);
    g.logx_sums.push_back(slot.second);
    g.sum_log_x += slot.second;
  }
  return g;
}

Matrix cholesky_inverse(const Matrix& m, const char* who) {
  const size_t d = m.size();
  Matrix low(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double sum = m[i][j];
      for (size_t k = 0; k < j; ++k) sum -= low[i][k] * low[j][k];
      if (i == j) {
        if (!(sum > 0.0)) {
          std::ostringstream msg;
          msg << who << ": information matrix is not positive definite (pivot " << i
              << " = " << sum << ")";
          throw DegenerateError(msg.str());
        }
        low[i][i] = std::sqrt(sum);
      } else {
        low[i][j] = sum / low[j][j];
      }
    }
  }
  // z = low^{-1} by forward substitution, then inverse = z^T z.
  Matrix z(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) {
    z[i][i] = 1.0 / low[i][i];
    for (size_t j = 0; j < i; ++j) {
      double sum = 0.0;
      for (size_t k = j; k < i; ++k) sum += low[i][k] * z[k][j];
      z[i][j] = -sum / low[i][i];
    }
  }
  Matrix inv(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (size_t k = i; k < d; ++k) sum += z[k][i] * z[k][j];
      inv[i][j] = sum;
      inv[j][i] = sum;
    }
  }
  return inv;
}

// Per-observation observed information: the symmetrized central-difference
// Jacobian of the total score, negated and divided by n.
Matrix fd_observed_information(
    const std::function<std::vector<double>(const std::vector<double>&)>& score,
    const std::vector<double>& theta, double n) {
  const size_t d = theta.size();
  Matrix hess(d, std::vector<double>(d, 0.0));
  for (size_t j = 0; j < d; ++j) {
    const double step = 1e-6 * std::max(1.0, std::fabs(theta[j]));
    std::vector<double> up = theta, down = theta;
    up[j] += step;
    down[j] -= step;
    const std::vector<double> su = score(up);
    const std::vector<double> sd = score(down);
    for (size_t i = 0; i < d; ++i) hess[i][j] = (su[i] - sd[i]) / (2.0 * step);
  }
  Matrix info(d, std::vector<double>(d, 0.0));
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) {
      info[i][j] = -0.5 * (hess[i][j] + hess[j][i]) / n;
    }
  }
  return info;
}

FitReport assemble_report(std::string model, std::string parametrization,
                          std::vector<std::string> names, std::vector<double> estimates,
                          Matrix information, double n, double loglik, int iterations,
                          double confidence_level) {
  FitReport report;
  report.model = std::move(model);
  report.parametrization = std::move(parametrization);
  report.param_names = std::move(names);
  report.estimates = std::move(estimates);
  const Matrix cov = cholesky_inverse(information, "fit");
  const double z = normal_quantile_two_sided(confidence_level);
  for (size_t k = 0; k < report.estimates.size(); ++k) {
    const double se = std::sqrt(cov[k][k] / n);
    report.std_errors.push_back(se);
    report.ci_lower.push_back(report.estimates[k] - z * se);
    report.ci_upper.push_back(report.estimates[k] + z * se);
  }
  report.loglik_at_mle = loglik;
  report.converged = true;
  report.iterations = iterations;
  report.information_matrix = std::move(information);
  return report;
}

struct RootResult {
  double root;
  int iterations;
};

// Newton iteration constrained to a sign-change bracket, with bisection
// whenever the Newton step leaves it.  The bracket is grown geometrically
// from [lo, hi] out to [lo_cap, hi_cap] before giving up.
template <typename F, typename DF>
RootResult safeguarded_newton(const F& g, const DF& dg, double lo, double hi,
                              double lo_cap, double hi_cap, double g_tol, int max_iter,
                              const char* who) {
  double glo = g(lo), ghi = g(hi);
  while (glo * ghi > 0.0 && (lo > lo_cap || hi < hi_cap)) {
    lo = std::max(lo_cap, lo / 10.0);
    hi = std::min(hi_cap, hi * 10.0);
    glo = g(lo);
    ghi = g(hi);
  }
  if (glo == 0.0) return {lo, 0};
  if (ghi == 0.0) return {hi, 0};
  if (glo * ghi > 0.0) {
    std::ostringstream msg;
    msg << who << ": no sign change over [" << lo << ", " << hi << "] (g(lo) = " << glo
        << ", g(hi) = " << ghi << ")";
    throw ConvergenceError(msg.str());
  }
  double x = std::sqrt(lo * hi);
  for (int iter = 1; iter <= max_iter; ++iter) {
    const double gx = g(x);
    if (std::fabs(gx) <= g_tol) return {x, iter};
    if ((gx < 0.0) == (glo < 0.0)) {
      lo = x;
      glo = gx;
    } else {
      hi = x;
      ghi = gx;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, x)) {
      return {x, iter};
    }
    const double d = dg(x);
    double next = (d != 0.0) ? x - gx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  std::ostringstream msg;
  msg << who << ": no convergence in " << max_iter << " iterations";
  throw ConvergenceError(msg.str());
}

// Profiled score in alpha for the three-parameter law: with
// beta = alpha Nbar / Xbar substituted, the alpha equation is
// g(a) = sum_i N_i digamma(a N_i) - n Nbar log(a Nbar / Xbar)
//        - sum_i N_i log x_i.
RootResult solve_bgg_alpha(const GroupedSample& g, const SolverOptions& opts) {
  const double log_ratio_base = std::log(g.mean_count / g.mean_x);
  const auto score = [&](double a) {
    double acc = -g.n * g.mean_count * (std::log(a) + log_ratio_base);
    for (size_t k = 0; k < g.counts.size(); ++k) {
      const double nd = static_cast<double>(g.counts[k]);
      acc += g.multiplicities[k] * nd * digamma(a * nd) - nd * g.logx_sums[k];
    }
    return acc;
  };
  const auto slope = [&](double a) {
    double acc = -g.n * g.mean_count / a;
    for (size_t k = 0; k < g.counts.size(); ++k) {
      const double nd = static_cast<double>(g.counts[k]);
      acc += g.multiplicities[k] * nd * nd * trigamma(a * nd);
    }
    return acc;
  };
  const double g_tol = std::min(opts.tol * g.n, 1e-9);
  return safeguarded_newton(score, slope, 1e-3, 1e3, 1e-6, 1e6, g_tol,
                            opts.max_iterations, "bgg_fit");
}

void require_interior_counts(const char* who, const GroupedSample& g) {
  if (g.n < 2.0) domain_fail(who, "at least two observations are required");
  if (g.mean_count <= 1.0 && g.counts.size() == 1 && g.counts[0] == 1) {
    throw DegenerateError(std::string(who) +
                          ": every count is 1, so the estimate of p sits on the "
                          "boundary of the parameter space");
  }
}

// Reduced score and Jacobian of the four-parameter fit after profiling out
// beta and p; unknowns are (alpha, r).
struct ReducedSystem {
  double e1, e2;
  double j11, j12, j21, j22;
};

ReducedSystem eval_reduced(const GroupedSample& g, double alpha, double r) {
  const double tbar = r + g.mean_count;
  const double log_ratio = std::log(alpha * tbar / g.mean_x);
  double s_psi = 0.0;       // sum psi(alpha T_i)
  double s_tpsi = 0.0;      // sum T_i psi(alpha T_i)
  double s_tpsi2 = 0.0;     // sum T_i psi'(alpha T_i)
  double s_t2psi2 = 0.0;    // sum T_i^2 psi'(alpha T_i)
  double s_psi2 = 0.0;      // sum psi'(alpha T_i)
  double s_psir = 0.0;      // sum psi(r + m_i)
  double s_psir2 = 0.0;     // sum psi'(r + m_i)
  double s_tlogx = 0.0;     // sum T_i log x_i
  for (size_t k = 0; k < g.counts.size(); ++k) {
    const double t = r + static_cast<double>(g.counts[k]);
    const double c = g.multiplicities[k];
    const double psi = digamma(alpha * t);
    const double psi_p = trigamma(alpha * t);
    s_psi += c * psi;
    s_tpsi += c * t * psi;
    s_tpsi2 += c * t * psi_p;
    s_t2psi2 += c * t * t * psi_p;
    s_psi2 += c * psi_p;
    s_psir += c * digamma(t);
    s_psir2 += c * trigamma(t);
    s_tlogx += t * g.logx_sums[k];
  }
  const double a_term = g.n * log_ratio + g.sum_log_x - s_psi;
  ReducedSystem sys;
  sys.e1 = g.n * tbar * log_ratio + s_tlogx - s_tpsi;
  sys.e2 = alpha * a_term + g.n * std::log(r / tbar) - g.n * digamma(r) + s_psir;
  sys.j11 = g.n * tbar / alpha - s_t2psi2;
  sys.j12 = a_term + g.n - alpha * s_tpsi2;
  const double da_dalpha = g.n / alpha - s_tpsi2;
  const double da_dr = g.n / tbar - alpha * s_psi2;
  sys.j21 = a_term + alpha * da_dalpha;
  sys.j22 = alpha * da_dr + g.n * (1.0 / r - 1.0 / tbar) - g.n * trigamma(r) + s_psir2;
  return sys;
}

struct Solve2Result {
  double alpha = 0.0;
  double r = 0.0;
  int iterations = 0;
  bool ok = false;
};

Solve2Result solve_reduced(const GroupedSample& g, double alpha0, double r0,
                           const SolverOptions& opts) {
  Solve2Result out;
  double alpha = alpha0, r = r0;
  ReducedSystem sys = eval_reduced(g, alpha, r);
  const double tol = opts.tol * g.n;
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    out.iterations = iter;
    double norm = std::max(std::fabs(sys.e1), std::fabs(sys.e2));
    if (norm <= tol) {
      out.alpha = alpha;
      out.r = r;
      out.ok = true;
      return out;
    }
    const double det = sys.j11 * sys.j22 - sys.j12 * sys.j21;
    if (!std::isfinite(det) || std::fabs(det) < 1e-300) return out;
    const double da = -(sys.j22 * sys.e1 - sys.j12 * sys.e2) / det;
    const double dr = -(sys.j11 * sys.e2 - sys.j21 * sys.e1) / det;
    double step = 1.0;
    while (step > 1e-20 && (alpha + step * da <= 0.0 || r + step * dr <= 0.0)) {
      step *= 0.5;
    }
    if (step <= 1e-20) return out;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      const ReducedSystem trial = eval_reduced(g, alpha + step * da, r + step * dr);
      const double trial_norm = std::max(std::fabs(trial.e1), std::fabs(trial.e2));
      if (std::isfinite(trial_norm) && trial_norm <= (1.0 - 1e-4 * step) * norm) {
        alpha += step * da;
        r += step * dr;
        sys = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return out;
  }
  return out;
}

std::vector<double> nb_expectations(double r, double p, double alpha,
                                    const SeriesControl& control) {
  // Returns E over M ~ NB(r, p) of, with T = r + M:
  //   { T^2 psi'(alpha T), T psi'(alpha T), alpha^2 psi'(alpha T) - psi'(T) }.
  const double q = 1.0 - p;
  const double mode = r * q / p;
  double w = std::exp(r * std::log(p));
  std::vector<double> acc(3, 0.0);
  double peak[3] = {0.0, 0.0, 0.0};
  int small_streak = 0;
  for (long m = 0; m <= control.max_terms; ++m) {
    if (m > 0) w *= q * (static_cast<double>(m) - 1.0 + r) / static_cast<double>(m);
    const double t = r + static_cast<double>(m);
    const double psi_p = trigamma(alpha * t);
    const double terms[3] = {w * t * t * psi_p, w * t * psi_p,
                             w * (alpha * alpha * psi_p - trigamma(t))};
    double rel = 0.0;
    for (int i = 0; i < 3; ++i) {
      acc[i] += terms[i];
      peak[i] = std::max(peak[i], std::fabs(terms[i]));
      // Scale against the peak term, not the sum, so cancelling components
      // still terminate.
      const double scale = std::max({std::fabs(acc[i]), peak[i], control.abs_tol});
      rel = std::max(rel, std::fabs(terms[i]) / scale);
    }
    if (rel <= control.rel_tol) {
      if (++small_streak >= 2 && static_cast<double>(m) > mode) return acc;
    } else {
      small_streak = 0;
    }
  }
  throw SeriesError("nb_expectations: term cap reached", acc[0], control.max_terms);
}

std::vector<double> to_vector(const std::array<double, 3>& a) {
  return {a[0], a[1], a[2]};
}
std::vector<double> to_vector(const std::array<double, 4>& a) {
  return {a[0], a[1], a[2], a[3]};
}

}  // namespace

void validate(const PairSample& data) {
  if (data.xs.size() != data.ns.size()) {
    domain_fail("PairSample", "xs and ns lengths differ");
  }
  if (data.xs.empty()) domain_fail("PairSample", "sample is empty");
  const long min_count = data.model_kind == ModelKind::kBgg ? 1 : 0;
  for (size_t i = 0; i < data.xs.size(); ++i) {
    if (!(data.xs[i] > 0.0) || !std::isfinite(data.xs[i])) {
      std::ostringstream msg;
      msg << "x[" << i << "] must be positive and finite (got " << data.xs[i] << ")";
      domain_fail("PairSample", msg.str());
    }
    if (data.ns[i] < min_count) {
      std::ostringstream msg;
      msg << "n[" << i << "] must be >= " << min_count << " (got " << data.ns[i] << ")";
      domain_fail("PairSample", msg.str());
    }
  }
}

double mean_x(const PairSample& data) {
  validate(data);
  double sum = 0.0;
  for (double x : data.xs) sum += x;
  return sum / static_cast<double>(data.xs.size());
}

double mean_n(const PairSample& data) {
  validate(data);
  double sum = 0.0;
  for (long n : data.ns) sum += static_cast<double>(n);
  return sum / static_cast<double>(data.ns.size());
}

PairSample load_pairs_csv(const std::string& file_path, ModelKind model_kind) {
  std::ifstream in(file_path);
  if (!in) throw std::runtime_error("load_pairs_csv: cannot open " + file_path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("load_pairs_csv: empty file " + file_path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,n") {
    throw ParseError("load_pairs_csv: expected header `x,n`, got `" + line + "`");
  }
  PairSample out;
  out.model_kind = model_kind;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::ostringstream ctx;
    ctx << "load_pairs_csv: row " << row << " `" << line << "`";
    const size_t comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError(ctx.str() + ": expected exactly two fields");
    }
    try {
      size_t used = 0;
      const double x = std::stod(line.substr(0, comma), &used);
      if (used != comma) throw ParseError(ctx.str() + ": trailing text after x");
      const std::string count_text = line.substr(comma + 1);
      const long n = std::stol(count_text, &used);
      if (used != count_text.size()) {
        throw ParseError(ctx.str() + ": trailing text after n");
      }
      out.xs.push_back(x);
      out.ns.push_back(n);
    } catch (const std::invalid_argument&) {
      throw ParseError(ctx.str() + ": not a number");
    } catch (const std::out_of_range&) {
      throw ParseError(ctx.str() + ": value out of range");
    }
  }
  validate(out);
  return out;
}

void save_pairs_csv(const PairSample& data, const std::string& file_path) {
  validate(data);
  std::ofstream out(file_path);
  if (!out) throw std::runtime_error("save_pairs_csv: cannot open " + file_path);
  out << "x,n\n";
  out.precision(17);
  for (size_t i = 0; i < data.xs.size(); ++i) {
    out << data.xs[i] << ',' << data.ns[i] << '\n';
  }
  if (!out) throw std::runtime_error("save_pairs_csv: write failed for " + file_path);
}

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    domain_fail("normal_quantile_two_sided", "level must lie in (0,1)");
  }
  double z = 1.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double f = bgg::erf(z / std::numbers::sqrt2) - level;
    const double d = std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * z * z);
    const double step = f / d;
    z -= step;
    if (!(z > 0.0)) z = 1e-8;
    if (std::fabs(step) <= 1e-14 * std::max(1.0, z)) break;
  }
  return z;
}

double bgg_loglik(const BggParams& theta, const PairSample& data) {
  validate(theta);
  require_model("bgg_loglik", data, ModelKind::kBgg);
  const double log_beta = std::log(theta.beta);
  const double log_p = std::log(theta.p);
  const double log_q = std::log1p(-theta.p);
  double acc = 0.0;
  for (size_t i = 0; i < data.xs.size(); ++i) {
    const double nd = static_cast<double>(data.ns[i]);
    const double shape = theta.alpha * nd;
    acc += shape * log_beta - log_gamma(shape) + (shape - 1.0) * std::log(data.xs[i]) -
           theta.beta * data.xs[i] + log_p + (nd - 1.0) * log_q;
  }
  return acc;
}

std::array<double, 3> bgg_score(const BggParams& theta, const PairSample& data) {
  validate(theta);
  require_model("bgg_score", data, ModelKind::kBgg);
  const double log_beta = std::log(theta.beta);
  double sum_x = 0.0, sum_n = 0.0, u_alpha = 0.0;
  for (size_t i = 0; i < data.xs.size(); ++i) {
    const double nd = static_cast<double>(data.ns[i]);
    sum_x += data.xs[i];
    sum_n += nd;
    u_alpha += nd * (log_beta + std::log(data.xs[i]) - digamma(theta.alpha * nd));
  }
  const double n = static_cast<double>(data.xs.size());
  const double u_beta = theta.alpha * sum_n / theta.beta - sum_x;
  const double u_p = n / theta.p - (sum_n - n) / (1.0 - theta.p);
  return {u_beta, u_alpha, u_p};
}

std::array<double, 3> bgg_score_ortho(const BggParamsOrtho& theta, const PairSample& data) {
  const std::array<double, 3> rate = bgg_score(to_rate(theta), data);
  const double alpha_over_mu2 = theta.alpha / (theta.mu * theta.mu);
  return {-rate[0] * alpha_over_mu2, rate[0] / theta.mu + rate[1], rate[2]};
}

namespace {

FitReport bgg_fit_impl(const PairSample& data, const SolverOptions& opts, bool ortho) {
  require_model("bgg_fit", data, ModelKind::kBgg);
  const GroupedSample g = group_by_count(data);
  require_interior_counts("bgg_fit", g);
  const RootResult root = solve_bgg_alpha(g, opts);
  const double alpha = root.root;
  const double p = 1.0 / g.mean_count;
  const double beta = alpha * g.mean_count / g.mean_x;
  const BggParams theta{beta, alpha, p};
  const double loglik = bgg_loglik(theta, data);
  if (!ortho) {
    Matrix info = opts.observed_information
                      ? fd_observed_information(
                            [&](const std::vector<double>& t) {
                              return to_vector(
                                  bgg_score(BggParams{t[0], t[1], t[2]}, data));
                            },
                            {beta, alpha, p}, g.n)
                      : bgg_fisher(theta, opts.series);
    return assemble_report("bgg", "rate", {"beta", "alpha", "p"}, {beta, alpha, p},
                           std::move(info), g.n, loglik, root.iterations,
                           opts.confidence_level);
  }
  const BggParamsOrtho star = to_ortho(theta);
  Matrix info = opts.observed_information
                    ? fd_observed_information(
                          [&](const std::vector<double>& t) {
                            return to_vector(
                                bgg_score_ortho(BggParamsOrtho{t[0], t[1], t[2]}, data));
                          },
                          {star.mu, star.alpha, star.p}, g.n)
                    : bgg_fisher_ortho(star, opts.series);
  return assemble_report("bgg", "orthogonal", {"mu", "alpha", "p"},
                         {star.mu, star.alpha, star.p}, std::move(info), g.n, loglik,
                         root.iterations, opts.confidence_level);
}

}  // namespace

FitReport bgg_fit(const PairSample& data, const SolverOptions& opts) {
  return bgg_fit_impl(data, opts, false);
}

FitReport bgg_fit_ortho(const PairSample& data, const SolverOptions& opts) {
  return bgg_fit_impl(data, opts, true);
}

double bgg_profile_loglik_alpha(const PairSample& data, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    domain_fail("bgg_profile_loglik_alpha", "alpha must be positive");
  }
  require_model("bgg_profile_loglik_alpha", data, ModelKind::kBgg);
  const GroupedSample g = group_by_count(data);
  require_interior_counts("bgg_profile_loglik_alpha", g);
  const BggParams theta{alpha * g.mean_count / g.mean_x, alpha, 1.0 / g.mean_count};
  return bgg_loglik(theta, data);
}

FitReport beg_fit(const PairSample& data, const SolverOptions& opts) {
  require_model("beg_fit", data, ModelKind::kBgg);
  const GroupedSample g = group_by_count(data);
  require_interior_counts("beg_fit", g);
  const double p = 1.0 / g.mean_count;
  const double beta = g.mean_count / g.mean_x;
  const BggParams theta{beta, 1.0, p};
  const double loglik = bgg_loglik(theta, data);
  Matrix info;
  if (opts.observed_information) {
    info = fd_observed_information(
        [&](const std::vector<double>& t) {
          const std::array<double, 3> s = bgg_score(BggParams{t[0], 1.0, t[1]}, data);
          return std::vector<double>{s[0], s[2]};
        },
        {beta, p}, g.n);
  } else {
    info = {{1.0 / (beta * beta * p), 0.0}, {0.0, 1.0 / (p * p * (1.0 - p))}};
  }
  return assemble_report("beg", "rate", {"beta", "p"}, {beta, p}, std::move(info), g.n,
                         loglik, 0, opts.confidence_level);
}

Matrix bgg_fisher(const BggParams& theta, const SeriesControl& control) {
  validate(theta);
  const double q = 1.0 - theta.p;
  double k_aa = 0.0;
  double w = theta.p;
  int small_streak = 0;
  long j = 1;
  for (; j <= control.max_terms; ++j) {
    const double jd = static_cast<double>(j);
    const double term = jd * jd * w * trigamma(jd * theta.alpha);
    k_aa += term;
    if (term <= control.rel_tol * k_aa) {
      if (++small_streak >= 2) break;
    } else {
      small_streak = 0;
    }
    w *= q;
  }
  if (j > control.max_terms) {
    throw SeriesError("bgg_fisher: term cap reached", k_aa, control.max_terms);
  }
  const double k_bb = theta.alpha / (theta.beta * theta.beta * theta.p);
  const double k_ba = -1.0 / (theta.beta * theta.p);
  const double k_pp = 1.0 / (theta.p * theta.p * q);
  return {{k_bb, k_ba, 0.0}, {k_ba, k_aa, 0.0}, {0.0, 0.0, k_pp}};
}

Matrix bgg_fisher_ortho(const BggParamsOrtho& theta, const SeriesControl& control) {
  validate(theta);
  const Matrix rate = bgg_fisher(to_rate(theta), control);
  const double k_mm = theta.alpha / (theta.mu * theta.mu * theta.p);
  const double k_aa = rate[1][1] - 1.0 / (theta.alpha * theta.p);
  const double k_pp = rate[2][2];
  if (!(k_aa > 0.0)) {
    std::ostringstream msg;
    msg << "bgg_fisher_ortho: alpha information " << k_aa << " is not positive at (mu="
        << theta.mu << ", alpha=" << theta.alpha << ", p=" << theta.p << ")";
    throw DegenerateError(msg.str());
  }
  return {{k_mm, 0.0, 0.0}, {0.0, k_aa, 0.0}, {0.0, 0.0, k_pp}};
}

double bmixgnb_loglik(const BmixgnbParams& theta, const PairSample& data) {
  validate(theta);
  require_model("bmixgnb_loglik", data, ModelKind::kBmixgnb);
  const double log_beta = std::log(theta.beta);
  const double log_p = std::log(theta.p);
  const double log_q = std::log1p(-theta.p);
  const double log_gamma_r = log_gamma(theta.r);
  double acc = 0.0;
  for (size_t i = 0; i < data.xs.size(); ++i) {
    const double md = static_cast<double>(data.ns[i]);
    const double t = theta.r + md;
    const double shape = theta.alpha * t;
    acc += log_gamma(md + theta.r) - log_gamma(md + 1.0) - log_gamma_r +
           theta.r * log_p + md * log_q + shape * log_beta - log_gamma(shape) +
           (shape - 1.0) * std::log(data.xs[i]) - theta.beta * data.xs[i];
  }
  return acc;
}

std::array<double, 4> bmixgnb_score(const BmixgnbParams& theta, const PairSample& data) {
  validate(theta);
  require_model("bmixgnb_score", data, ModelKind::kBmixgnb);
  const double log_beta = std::log(theta.beta);
  const double log_p = std::log(theta.p);
  const double n = static_cast<double>(data.xs.size());
  double sum_x = 0.0, sum_m = 0.0, sum_t = 0.0, u_alpha = 0.0, u_r = 0.0;
  for (size_t i = 0; i < data.xs.size(); ++i) {
    const double md = static_cast<double>(data.ns[i]);
    const double t = theta.r + md;
    const double log_x = std::log(data.xs[i]);
    const double psi = digamma(theta.alpha * t);
    sum_x += data.xs[i];
    sum_m += md;
    sum_t += t;
    u_alpha += t * (log_beta + log_x - psi);
    u_r += digamma(t) + theta.alpha * (log_beta + log_x - psi);
  }
  const double u_beta = theta.alpha * sum_t / theta.beta - sum_x;
  const double u_p = n * theta.r / theta.p - sum_m / (1.0 - theta.p);
  u_r += n * (log_p - digamma(theta.r));
  return {u_beta, u_alpha, u_p, u_r};
}

std::array<double, 4> bmixgnb_score_ortho(const BmixgnbParamsOrtho& theta,
                                          const PairSample& data) {
  const std::array<double, 4> rate = bmixgnb_score(to_rate(theta), data);
  const double alpha_over_mu2 = theta.alpha / (theta.mu * theta.mu);
  return {-rate[0] * alpha_over_mu2, rate[0] / theta.mu + rate[1], rate[2], rate[3]};
}

namespace {

FitReport bmixgnb_fit_impl(const PairSample& data, const SolverOptions& opts, bool ortho) {
  require_model("bmixgnb_fit", data, ModelKind::kBmixgnb);
  if (data.xs.size() < 2) domain_fail("bmixgnb_fit", "at least two observations");
  const GroupedSample g = group_by_count(data);
  if (g.mean_count == 0.0) {
    throw DegenerateError(
        "bmixgnb_fit: every count is zero, so the estimate of p sits on the boundary "
        "of the parameter space");
  }
  // Moment start for r from the count dispersion, when overdispersed.
  double var_m = 0.0;
  for (size_t k = 0; k < g.counts.size(); ++k) {
    const double d = static_cast<double>(g.counts[k]) - g.mean_count;
    var_m += g.multiplicities[k] * d * d;
  }
  var_m /= (g.n - 1.0);
  double r_start = 1.0;
  if (var_m > g.mean_count * 1.0001) {
    const double p0 = g.mean_count / var_m;
    r_start = std::max(p0 * g.mean_count / (1.0 - p0), 0.05);
  }
  std::vector<std::pair<double, double>> starts{{1.0, r_start}};
  for (double a0 : {0.5, 1.0, 2.0}) {
    for (double r0 : {0.5, 1.0, 2.0}) starts.emplace_back(a0, r0);
  }
  Solve2Result best;
  int total_iterations = 0;
  for (const auto& [a0, r0] : starts) {
    const Solve2Result attempt = solve_reduced(g, a0, r0, opts);
    total_iterations += attempt.iterations;
    if (attempt.ok) {
      best = attempt;
      break;
    }
  }
  if (!best.ok) {
    std::ostringstream msg;
    msg << "bmixgnb_fit: Newton iteration failed from " << starts.size()
        << " starting points (n = " << g.n << ", mean count = " << g.mean_count << ")";
    throw ConvergenceError(msg.str());
  }
  const double alpha = best.alpha;
  const double r = best.r;
  const double p = r / (r + g.mean_count);
  const double beta = alpha * (r + g.mean_count) / g.mean_x;
  const BmixgnbParams theta{beta, alpha, p, r};
  const double loglik = bmixgnb_loglik(theta, data);
  if (!ortho) {
    Matrix info =
        opts.observed_information
            ? fd_observed_information(
                  [&](const std::vector<double>& t) {
                    return to_vector(
                        bmixgnb_score(BmixgnbParams{t[0], t[1], t[2], t[3]}, data));
                  },
                  {beta, alpha, p, r}, g.n)
            : bmixgnb_fisher(theta, opts.series);
    return assemble_report("bmixgnb", "rate", {"beta", "alpha", "p", "r"},
                           {beta, alpha, p, r}, std::move(info), g.n, loglik,
                           total_iterations, opts.confidence_level);
  }
  const BmixgnbParamsOrtho star = to_ortho(theta);
  Matrix info =
      opts.observed_information
          ? fd_observed_information(
                [&](const std::vector<double>& t) {
                  return to_vector(bmixgnb_score_ortho(
                      BmixgnbParamsOrtho{t[0], t[1], t[2], t[3]}, data));
                },
                {star.mu, star.alpha, star.p, star.r}, g.n)
          : bmixgnb_fisher_ortho(star, opts.series);
  return assemble_report("bmixgnb", "orthogonal", {"mu", "alpha", "p", "r"},
                         {star.mu, star.alpha, star.p, star.r}, std::move(info), g.n,
                         loglik, total_iterations, opts.confidence_level);
}

}  // namespace

FitReport bmixgnb_fit(const PairSample& data, const SolverOptions& opts) {
  return bmixgnb_fit_impl(data, opts, false);
}

FitReport bmixgnb_fit_ortho(const PairSample& data, const SolverOptions& opts) {
  return bmixgnb_fit_impl(data, opts, true);
}

FitReport bmixgnb_fit_fixed_r(const PairSample& data, double r,
                              const SolverOptions& opts) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    domain_fail("bmixgnb_fit_fixed_r", "r must be positive");
  }
  require_model("bmixgnb_fit_fixed_r", data, ModelKind::kBmixgnb);
  if (data.xs.size() < 2) domain_fail("bmixgnb_fit_fixed_r", "at least two observations");
  const GroupedSample g = group_by_count(data);
  const auto score = [&](double a) { return eval_reduced(g, a, r).e1; };
  const auto slope = [&](double a) { return eval_reduced(g, a, r).j11; };
  const double g_tol = std::min(opts.tol * g.n, 1e-9);
  const RootResult root = safeguarded_newton(score, slope, 1e-3, 1e3, 1e-6, 1e6, g_tol,
                                             opts.max_iterations, "bmixgnb_fit_fixed_r");
  const double alpha = root.root;
  const double p = r / (r + g.mean_count);
  const double beta = alpha * (r + g.mean_count) / g.mean_x;
  const BmixgnbParams theta{beta, alpha, p, r};
  const double loglik = bmixgnb_loglik(theta, data);
  Matrix info;
  if (opts.observed_information) {
    info = fd_observed_information(
        [&](const std::vector<double>& t) {
          const std::array<double, 4> full =
              bmixgnb_score(BmixgnbParams{t[0], t[1], t[2], r}, data);
          return std::vector<double>{full[0], full[1], full[2]};
        },
        {beta, alpha, p}, g.n);
  } else {
    const Matrix full = bmixgnb_fisher(theta, opts.series);
    info = {{full[0][0], full[0][1], full[0][2]},
            {full[1][0], full[1][1], full[1][2]},
            {full[2][0], full[2][1], full[2][2]}};
  }
  return assemble_report("bmixgnb", "rate", {"beta", "alpha", "p"}, {beta, alpha, p},
                         std::move(info), g.n, loglik, root.iterations,
                         opts.confidence_level);
}

Matrix bmixgnb_fisher(const BmixgnbParams& theta, const SeriesControl& control) {
  validate(theta);
  const std::vector<double> expect =
      nb_expectations(theta.r, theta.p, theta.alpha, control);
  const double q = 1.0 - theta.p;
  const double k_bb = theta.alpha * theta.r / (theta.beta * theta.beta * theta.p);
  const double k_ba = -theta.r / (theta.p * theta.beta);
  const double k_br = -theta.alpha / theta.beta;
  const double k_aa = expect[0];
  const double k_ar = theta.alpha * expect[1];
  const double k_pp = theta.r / (theta.p * theta.p * q);
  const double k_pr = -1.0 / theta.p;
  const double k_rr = trigamma(theta.r) + expect[2];
  return {{k_bb, k_ba, 0.0, k_br},
          {k_ba, k_aa, 0.0, k_ar},
          {0.0, 0.0, k_pp, k_pr},
          {k_br, k_ar, k_pr, k_rr}};
}

Matrix bmixgnb_fisher_ortho(const BmixgnbParamsOrtho& theta,
                            const SeriesControl& control) {
  validate(theta);
  const Matrix rate = bmixgnb_fisher(to_rate(theta), control);
  const double k_mm = theta.alpha * theta.r / (theta.mu * theta.mu * theta.p);
  const double k_mr = theta.alpha / theta.mu;
  const double k_aa = rate[1][1] - theta.r / (theta.alpha * theta.p);
  const double k_ar = rate[1][3] - 1.0;
  if (!(k_aa > 0.0)) {
    std::ostringstream msg;
    msg << "bmixgnb_fisher_ortho: alpha information " << k_aa
        << " is not positive at (mu=" << theta.mu << ", alpha=" << theta.alpha
        << ", p=" << theta.p << ", r=" << theta.r << ")";
    throw DegenerateError(msg.str());
  }
  return {{k_mm, 0.0, 0.0, k_mr},
          {0.0, k_aa, 0.0, k_ar},
          {0.0, 0.0, rate[2][2], rate[2][3]},
          {k_mr, k_ar, rate[3][2], rate[3][3]}};
}

TestResult wald_test(const FitReport& report, const std::string& component,
                     double null_value) {
  if (!report.converged) domain_fail("wald_test", "fit report is not converged");
  const auto it =
      std::find(report.param_names.begin(), report.param_names.end(), component);
  if (it == report.param_names.end()) {
    throw std::invalid_argument("wald_test: unknown component `" + component + "`");
  }
  const size_t k = static_cast<size_t>(it - report.param_names.begin());
  const double zstat = (report.estimates[k] - null_value) / report.std_errors[k];
  const double stat = zstat * zstat;
  return {stat, chi_square_survival(stat, 1), 1.0};
}

TestResult lr_test(double loglik_full, double loglik_restricted, int df) {
  if (df < 1) domain_fail("lr_test", "df must be >= 1");
  double stat = 2.0 * (loglik_full - loglik_restricted);
  if (stat < 0.0 && stat > -1e-8) stat = 0.0;
  return {stat, chi_square_survival(stat, df), static_cast<double>(df)};
}

std::string fit_report_to_json(const FitReport& report) {
  nlohmann::ordered_json j;
  j["model"] = report.model;
  j["parametrization"] = report.parametrization;
  nlohmann::ordered_json estimates, std_errors, ci;
  for (size_t k = 0; k < report.param_names.size(); ++k) {
    estimates[report.param_names[k]] = report.estimates[k];
    std_errors[report.param_names[k]] = report.std_errors[k];
    ci[report.param_names[k]] = {report.ci_lower[k], report.ci_upper[k]};
  }
  j["estimates"] = estimates;
  j["std_errors"] = std_errors;
  j["ci"] = ci;
  j["loglik"] = report.loglik_at_mle;
  j["converged"] = report.converged;
  j["iterations"] = report.iterations;
  return j.dump(2);
}

}  // namespace bgg

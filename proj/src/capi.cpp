#include "bgg/bgg.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bgg/bgg_distribution.hpp"
#include "bgg/bmixgnb_distribution.hpp"
#include "bgg/errors.hpp"
#include "bgg/gof.hpp"
#include "bgg/inference.hpp"
#include "bgg/returns_pipeline.hpp"
#include "bgg/sampling.hpp"

struct bgg_model {
  size_t n_params;  // 3 or 4
  bgg::BggParams pair_law;
  bgg::BmixgnbParams process_law;
};

namespace {

thread_local std::string t_last_error;

template <typename F>
bgg_status guarded(F&& body) {
  try {
    body();
    t_last_error.clear();
    return BGG_OK;
  } catch (const bgg::ConvergenceError& e) {
    t_last_error = e.what();
    return BGG_ERR_NOCONV;
  } catch (const bgg::SeriesError& e) {
    t_last_error = e.what();
    return BGG_ERR_NOCONV;
  } catch (const bgg::DegenerateError& e) {
    t_last_error = e.what();
    return BGG_ERR_DEGENERATE;
  } catch (const bgg::ParseError& e) {
    t_last_error = e.what();
    return BGG_ERR_PARSE;
  } catch (const std::domain_error& e) {
    t_last_error = e.what();
    return BGG_ERR_DOMAIN;
  } catch (const std::invalid_argument& e) {
    t_last_error = e.what();
    return BGG_ERR_INVALID;
  } catch (const std::runtime_error& e) {
    t_last_error = e.what();
    return BGG_ERR_IO;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return BGG_ERR_INTERNAL;
  }
}

bgg_status invalid(const char* what) {
  t_last_error = what;
  return BGG_ERR_INVALID;
}

bool null_among() { return false; }

template <typename T, typename... Rest>
bool null_among(const T* p, Rest... rest) {
  return p == nullptr || null_among(rest...);
}

nlohmann::ordered_json result_json(const bgg::TestResult& result) {
  return nlohmann::ordered_json::parse(bgg::test_result_to_json(result));
}

void write_json_file(const char* who, const std::string& path,
                     const nlohmann::ordered_json& value) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(std::string(who) + ": cannot open " + path);
  out << value.dump(2) << '\n';
  if (!out) throw std::runtime_error(std::string(who) + ": write failed for " + path);
}

}  // namespace

extern "C" {

const char* bgg_last_error(void) { return t_last_error.c_str(); }

bgg_status bgg_model_create(const double* params, size_t n_params, bgg_model** out) {
  if (null_among(params, out)) return invalid("bgg_model_create: null pointer");
  if (n_params != 3 && n_params != 4) {
    return invalid("bgg_model_create: expected 3 or 4 parameters");
  }
  return guarded([&] {
    auto model = std::make_unique<bgg_model>();
    model->n_params = n_params;
    if (n_params == 3) {
      model->pair_law = {params[0], params[1], params[2]};
      bgg::validate(model->pair_law);
    } else {
      model->process_law = {params[0], params[1], params[2], params[3]};
      bgg::validate(model->process_law);
    }
    *out = model.release();
  });
}

void bgg_model_destroy(bgg_model* model) { delete model; }

bgg_status bgg_model_joint_pdf(const bgg_model* model, double x, long n, double* out) {
  if (null_among(model, out)) return invalid("bgg_model_joint_pdf: null pointer");
  return guarded([&] {
    *out = model->n_params == 3 ? bgg::joint_pdf(model->pair_law, x, n)
                                : bgg::joint_pdf_ym(model->process_law, x, n);
  });
}

bgg_status bgg_model_joint_cdf(const bgg_model* model, double x, long n, double* out) {
  if (null_among(model, out)) return invalid("bgg_model_joint_cdf: null pointer");
  return guarded([&] {
    *out = model->n_params == 3 ? bgg::joint_cdf(model->pair_law, x, n)
                                : bgg::joint_cdf_ym(model->process_law, x, n);
  });
}

bgg_status bgg_model_marginal_pdf(const bgg_model* model, double x, double* out) {
  if (null_among(model, out)) return invalid("bgg_model_marginal_pdf: null pointer");
  return guarded([&] {
    *out = model->n_params == 3 ? bgg::marginal_pdf_x(model->pair_law, x)
                                : bgg::marginal_pdf_y(model->process_law, x);
  });
}

bgg_status bgg_model_marginal_cdf(const bgg_model* model, double x, double* out) {
  if (null_among(model, out)) return invalid("bgg_model_marginal_cdf: null pointer");
  return guarded([&] {
    *out = model->n_params == 3 ? bgg::marginal_cdf_x(model->pair_law, x)
                                : bgg::marginal_cdf_y(model->process_law, x);
  });
}

bgg_status bgg_model_moments(const bgg_model* model, double* mean_x, double* mean_n,
                             double* var_x, double* var_n, double* correlation) {
  if (model == nullptr) return invalid("bgg_model_moments: null model");
  return guarded([&] {
    // The process law at level r scales the pair-law covariance by r and
    // leaves the correlation unchanged.
    const bgg::BggParams base = model->n_params == 3
                                    ? model->pair_law
                                    : bgg::BggParams{model->process_law.beta,
                                                     model->process_law.alpha,
                                                     model->process_law.p};
    const double scale = model->n_params == 3 ? 1.0 : model->process_law.r;
    const bgg::CovarianceMatrix cov = bgg::covariance(base);
    if (mean_x != nullptr) *mean_x = scale * base.alpha / (base.beta * base.p);
    if (mean_n != nullptr) {
      *mean_n = model->n_params == 3
                    ? 1.0 / base.p
                    : model->process_law.r * (1.0 - base.p) / base.p;
    }
    if (var_x != nullptr) *var_x = scale * cov.var_x;
    if (var_n != nullptr) *var_n = scale * cov.var_n;
    if (correlation != nullptr) *correlation = bgg::correlation(base);
  });
}

bgg_status bgg_model_sample_csv(const bgg_model* model, long n, uint64_t seed,
                                const char* out_csv) {
  if (null_among(model, out_csv)) return invalid("bgg_model_sample_csv: null pointer");
  return guarded([&] {
    if (n < 1) throw std::domain_error("bgg_model_sample_csv: need n >= 1");
    bgg::RandomStream rng(seed);
    bgg::PairSample sample;
    sample.xs.reserve(static_cast<size_t>(n));
    sample.ns.reserve(static_cast<size_t>(n));
    if (model->n_params == 3) {
      sample.model_kind = bgg::ModelKind::kBgg;
      for (long i = 0; i < n; ++i) {
        const bgg::BggDraw d = bgg::sample_bgg(model->pair_law, rng);
        sample.xs.push_back(d.x);
        sample.ns.push_back(d.n);
      }
    } else {
      sample.model_kind = bgg::ModelKind::kBmixgnb;
      for (long i = 0; i < n; ++i) {
        const bgg::BmixgnbDraw d = bgg::sample_bmixgnb(model->process_law, rng);
        sample.xs.push_back(d.y);
        sample.ns.push_back(d.m);
      }
    }
    bgg::save_pairs_csv(sample, out_csv);
  });
}

bgg_status bgg_fit_csv(const char* pairs_csv, const char* model,
                       const char* parametrization, int observed_information,
                       double confidence_level, const char* out_json) {
  if (null_among(pairs_csv, model, parametrization, out_json)) {
    return invalid("bgg_fit_csv: null pointer");
  }
  return guarded([&] {
    const std::string model_name = model;
    const std::string par = parametrization;
    if (par != "rate" && par != "ortho") {
      throw std::invalid_argument("bgg_fit_csv: parametrization must be `rate` or `ortho`");
    }
    bgg::SolverOptions opts;
    opts.observed_information = observed_information != 0;
    opts.confidence_level = confidence_level;
    bgg::FitReport report;
    if (model_name == "bgg" || model_name == "beg") {
      const bgg::PairSample data = bgg::load_pairs_csv(pairs_csv, bgg::ModelKind::kBgg);
      if (model_name == "beg") {
        if (par == "ortho") {
          throw std::invalid_argument("bgg_fit_csv: `beg` supports only `rate`");
        }
        report = bgg::beg_fit(data, opts);
      } else {
        report = par == "ortho" ? bgg::bgg_fit_ortho(data, opts) : bgg::bgg_fit(data, opts);
      }
    } else if (model_name == "bmixgnb") {
      const bgg::PairSample data =
          bgg::load_pairs_csv(pairs_csv, bgg::ModelKind::kBmixgnb);
      report =
          par == "ortho" ? bgg::bmixgnb_fit_ortho(data, opts) : bgg::bmixgnb_fit(data, opts);
    } else {
      throw std::invalid_argument("bgg_fit_csv: unknown model `" + model_name + "`");
    }
    write_json_file("bgg_fit_csv", out_json,
                    nlohmann::ordered_json::parse(bgg::fit_report_to_json(report)));
  });
}

bgg_status bgg_extract_csv(const char* rates_csv, const char* out_pairs_csv,
                           long* n_pairs, int* trailing_open_run) {
  if (null_among(rates_csv, out_pairs_csv)) {
    return invalid("bgg_extract_csv: null pointer");
  }
  return guarded([&] {
    const bgg::RateSeries series = bgg::load_rates_csv(rates_csv);
    const bgg::RunExtraction extraction =
        bgg::extract_positive_runs(bgg::log_returns(series));
    if (extraction.pairs.xs.empty()) {
      throw bgg::DegenerateError("bgg_extract_csv: no positive returns in " +
                                 std::string(rates_csv));
    }
    bgg::save_pairs_csv(extraction.pairs, out_pairs_csv);
    if (n_pairs != nullptr) {
      *n_pairs = static_cast<long>(extraction.pairs.xs.size());
    }
    if (trailing_open_run != nullptr) {
      *trailing_open_run = extraction.trailing_open_run ? 1 : 0;
    }
  });
}

bgg_status bgg_synthesize_rates_csv(const double* params3, long n_pairs,
                                    uint64_t seed, const char* out_csv) {
  if (null_among(params3, out_csv)) {
    return invalid("bgg_synthesize_rates_csv: null pointer");
  }
  return guarded([&] {
    if (n_pairs < 1 || n_pairs > (1L << 30)) {
      throw std::domain_error("bgg_synthesize_rates_csv: pair count out of range");
    }
    const bgg::SyntheticSeries synthetic = bgg::synthesize_rate_series(
        {params3[0], params3[1], params3[2]}, static_cast<int>(n_pairs), seed);
    bgg::save_rates_csv(synthetic.series, out_csv);
  });
}

bgg_status bgg_analyze(const char* rates_csv, const char* out_dir,
                       int histogram_bins, int duration_rows,
                       int conditional_max_duration) {
  if (null_among(rates_csv, out_dir)) return invalid("bgg_analyze: null pointer");
  return guarded([&] {
    bgg::AnalysisConfig config;
    if (histogram_bins > 0) config.histogram_bins = histogram_bins;
    if (duration_rows > 0) config.duration_rows = duration_rows;
    if (conditional_max_duration > 0) {
      config.conditional_max_duration = conditional_max_duration;
    }
    const bgg::RateSeries series = bgg::load_rates_csv(rates_csv);
    const bgg::RunExtraction extraction =
        bgg::extract_positive_runs(bgg::log_returns(series));
    bgg::run_full_analysis(extraction, config, out_dir);
  });
}

bgg_status bgg_simulate_path_csv(const double* params4, const double* grid,
                                 size_t grid_len, long n_paths, uint64_t seed,
                                 const char* out_csv) {
  if (null_among(params4, grid, out_csv)) {
    return invalid("bgg_simulate_path_csv: null pointer");
  }
  return guarded([&] {
    if (n_paths < 1) throw std::domain_error("bgg_simulate_path_csv: need paths >= 1");
    const bgg::BmixgnbParams params{params4[0], params4[1], params4[2], params4[3]};
    bgg::validate(params);
    const std::span<const double> times(grid, grid_len);
    std::ofstream out(out_csv);
    if (!out) {
      throw std::runtime_error(std::string("bgg_simulate_path_csv: cannot open ") +
                               out_csv);
    }
    out.precision(17);
    out << "path,t,x,n\n";
    for (long k = 0; k < n_paths; ++k) {
      bgg::RandomStream rng(seed, static_cast<uint64_t>(k));
      const bgg::ProcessPath path = bgg::simulate_path(params, times, rng);
      for (size_t i = 0; i < path.times.size(); ++i) {
        out << k << ',' << path.times[i] << ',' << path.x_values[i] << ','
            << path.n_values[i] << '\n';
      }
    }
    if (!out) {
      throw std::runtime_error(std::string("bgg_simulate_path_csv: write failed for ") +
                               out_csv);
    }
  });
}

bgg_status bgg_gof_csv(const char* pairs_csv, const double* params, size_t n_params,
                       const char* out_json) {
  if (null_among(pairs_csv, params, out_json)) {
    return invalid("bgg_gof_csv: null pointer");
  }
  if (n_params != 3 && n_params != 4) {
    return invalid("bgg_gof_csv: expected 3 or 4 parameters");
  }
  return guarded([&] {
    const bool pair_law = n_params == 3;
    const bgg::PairSample data = bgg::load_pairs_csv(
        pairs_csv, pair_law ? bgg::ModelKind::kBgg : bgg::ModelKind::kBmixgnb);
    bgg::TestResult ks;
    std::function<double(long)> count_pmf;
    long support_min = 0;
    if (pair_law) {
      const bgg::BggParams theta{params[0], params[1], params[2]};
      bgg::validate(theta);
      ks = bgg::ks_one_sample(data.xs,
                              [&](double x) { return bgg::marginal_cdf_x(theta, x); });
      support_min = 1;
      count_pmf = [theta](long n) {
        return theta.p * std::pow(1.0 - theta.p, static_cast<double>(n - 1));
      };
    } else {
      const bgg::BmixgnbParams theta{params[0], params[1], params[2], params[3]};
      bgg::validate(theta);
      ks = bgg::ks_one_sample(data.xs,
                              [&](double y) { return bgg::marginal_cdf_y(theta, y); });
      support_min = 0;
      count_pmf = [theta](long m) { return bgg::nb_pmf(theta.r, theta.p, m); };
    }

    long max_count = support_min;
    for (long n : data.ns) max_count = std::max(max_count, n);
    const size_t cells = static_cast<size_t>(max_count - support_min) + 1;
    if (cells < 2) {
      throw bgg::DegenerateError("bgg_gof_csv: all counts equal " +
                                 std::to_string(support_min) +
                                 "; the count test needs at least two cells");
    }
    std::vector<long> observed(cells, 0);
    for (long n : data.ns) ++observed[static_cast<size_t>(n - support_min)];
    std::vector<double> probs(cells, 0.0);
    double head = 0.0;
    for (size_t c = 0; c + 1 < cells; ++c) {
      probs[c] = count_pmf(support_min + static_cast<long>(c));
      head += probs[c];
    }
    probs.back() = 1.0 - head;  // tail mass of the last cell and beyond
    const bgg::TestResult chi2 = bgg::pearson_chi_square(observed, probs, 0);

    nlohmann::ordered_json report;
    report["ks_magnitude"] = result_json(ks);
    report["chi_square_count"] = result_json(chi2);
    write_json_file("bgg_gof_csv", out_json, report);
  });
}

bgg_status bgg_lr_test(double loglik_full, double loglik_restricted, long df,
                       double* statistic, double* p_value) {
  return guarded([&] {
    const bgg::TestResult result =
        bgg::lr_test(loglik_full, loglik_restricted, static_cast<int>(df));
    if (statistic != nullptr) *statistic = result.statistic;
    if (p_value != nullptr) *p_value = result.p_value;
  });
}

bgg_status bgg_wald_test_json(const char* fit_json, const char* component,
                              double null_value, double* statistic, double* p_value) {
  if (null_among(fit_json, component)) {
    return invalid("bgg_wald_test_json: null pointer");
  }
  return guarded([&] {
    std::ifstream in(fit_json);
    if (!in) {
      throw std::runtime_error(std::string("bgg_wald_test_json: cannot open ") +
                               fit_json);
    }
    nlohmann::ordered_json parsed;
    try {
      parsed = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw bgg::ParseError(std::string("bgg_wald_test_json: ") + e.what());
    }
    bgg::FitReport report;
    report.model = parsed.at("model").get<std::string>();
    report.parametrization = parsed.at("parametrization").get<std::string>();
    for (const auto& [name, value] : parsed.at("estimates").items()) {
      report.param_names.push_back(name);
      report.estimates.push_back(value.get<double>());
      report.std_errors.push_back(parsed.at("std_errors").at(name).get<double>());
    }
    report.loglik_at_mle = parsed.at("loglik").get<double>();
    report.converged = parsed.at("converged").get<bool>();
    const bgg::TestResult result = bgg::wald_test(report, component, null_value);
    if (statistic != nullptr) *statistic = result.statistic;
    if (p_value != nullptr) *p_value = result.p_value;
  });
}

}  // extern "C"

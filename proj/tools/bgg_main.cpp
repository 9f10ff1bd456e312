// Batch front end over the C API: fitting, sampling, run extraction, the
// full analysis bundle, hypothesis tests, path simulation, and goodness of
// fit.  Exit codes: 0 success, 2 validation/input error, 3 non-convergence.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bgg/bgg.h"

namespace {

int finish(bgg_status status) {
  if (status == BGG_OK) return 0;
  std::fprintf(stderr, "error: %s\n", bgg_last_error());
  return status == BGG_ERR_NOCONV ? 3 : 2;
}

int fail_usage(const std::string& message) {
  std::fprintf(stderr, "error: %s\n", message.c_str());
  return 2;
}

void print_file(const std::string& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint magnitude/duration modeling of positive log-return runs"};
  app.require_subcommand(1);
  int rc = 0;

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to x,n pairs");
  std::string fit_model = "bgg";
  std::string fit_par = "rate";
  std::string fit_input, fit_out;
  bool fit_observed = false;
  double fit_confidence = 0.95;
  fit->add_option("--model", fit_model, "bgg, beg, or bmixgnb")
      ->check(CLI::IsMember({"bgg", "beg", "bmixgnb"}));
  fit->add_option("--parametrization", fit_par, "rate or ortho")
      ->check(CLI::IsMember({"rate", "ortho"}));
  fit->add_option("--input", fit_input, "pairs CSV with header x,n")->required();
  fit->add_option("--out", fit_out, "fit report JSON")->required();
  fit->add_flag("--observed-information", fit_observed,
                "standard errors from the observed information");
  fit->add_option("--confidence", fit_confidence, "CI coverage level");
  fit->callback([&] {
    rc = finish(bgg_fit_csv(fit_input.c_str(), fit_model.c_str(), fit_par.c_str(),
                            fit_observed ? 1 : 0, fit_confidence, fit_out.c_str()));
    if (rc == 0) print_file(fit_out);
  });

  // sample
  auto* sample = app.add_subcommand("sample", "Draw pairs from a model");
  std::string sample_model = "bgg";
  std::vector<double> sample_params;
  long sample_n = 0;
  std::uint64_t sample_seed = 0;
  std::string sample_out;
  sample->add_option("--model", sample_model, "bgg or bmixgnb")
      ->check(CLI::IsMember({"bgg", "bmixgnb"}));
  sample->add_option("--params", sample_params,
                     "beta,alpha,p for bgg; beta,alpha,p,r for bmixgnb")
      ->required()
      ->delimiter(',');
  sample->add_option("--n", sample_n, "number of draws")->required();
  sample->add_option("--seed", sample_seed, "random seed");
  sample->add_option("--out", sample_out, "output pairs CSV")->required();
  sample->callback([&] {
    const size_t want = sample_model == "bgg" ? 3 : 4;
    if (sample_params.size() != want) {
      rc = fail_usage("sample: " + sample_model + " takes " + std::to_string(want) +
                      " parameters");
      return;
    }
    bgg_model* model = nullptr;
    bgg_status status = bgg_model_create(sample_params.data(), want, &model);
    if (status == BGG_OK) {
      status = bgg_model_sample_csv(model, sample_n, sample_seed, sample_out.c_str());
      bgg_model_destroy(model);
    }
    rc = finish(status);
    if (rc == 0) std::cout << "wrote " << sample_n << " draws to " << sample_out << "\n";
  });

  // extract
  auto* extract = app.add_subcommand("extract", "Extract positive-run pairs");
  std::string extract_input, extract_out;
  extract->add_option("--input", extract_input, "rates CSV with header date,rate")
      ->required();
  extract->add_option("--out", extract_out, "output pairs CSV")->required();
  extract->callback([&] {
    long n_pairs = 0;
    int trailing = 0;
    rc = finish(bgg_extract_csv(extract_input.c_str(), extract_out.c_str(), &n_pairs,
                                &trailing));
    if (rc == 0) {
      std::cout << "extracted " << n_pairs << " pairs to " << extract_out << "\n";
      if (trailing != 0) {
        std::cout << "note: the series ended inside a positive run; its final pair "
                     "may understate the true duration\n";
      }
    }
  });

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Run the full analysis bundle");
  std::string analyze_input, analyze_outdir;
  std::uint64_t analyze_seed = 0;
  std::vector<double> analyze_params{107.378, 0.8805, 0.5093};
  long analyze_pairs = 549;
  int analyze_bins = 0, analyze_rows = 0, analyze_maxdur = 0;
  auto* analyze_input_opt =
      analyze->add_option("--input", analyze_input, "rates CSV with header date,rate");
  analyze->add_option("--outdir", analyze_outdir, "output directory")->required();
  auto* analyze_syn = analyze
                          ->add_option("--synthetic", analyze_seed,
                                       "skip --input; analyze a synthetic series "
                                       "generated with this seed")
                          ->excludes(analyze_input_opt);
  analyze->add_option("--params", analyze_params, "synthetic beta,alpha,p")
      ->delimiter(',')
      ->expected(3)
      ->needs(analyze_syn);
  analyze->add_option("--pairs", analyze_pairs, "synthetic pair count")
      ->needs(analyze_syn);
  analyze->add_option("--bins", analyze_bins, "histogram bins");
  analyze->add_option("--duration-rows", analyze_rows, "duration table rows");
  analyze->add_option("--max-duration", analyze_maxdur,
                      "largest duration tested conditionally");
  analyze->callback([&] {
    std::string rates = analyze_input;
    if (analyze_syn->count() > 0) {
      std::error_code ec;
      std::filesystem::create_directories(analyze_outdir, ec);
      if (ec) {
        rc = fail_usage("analyze: cannot create " + analyze_outdir);
        return;
      }
      rates = (std::filesystem::path(analyze_outdir) / "synthetic_rates.csv").string();
      const bgg_status status = bgg_synthesize_rates_csv(
          analyze_params.data(), analyze_pairs, analyze_seed, rates.c_str());
      if (status != BGG_OK) {
        rc = finish(status);
        return;
      }
    } else if (rates.empty()) {
      rc = fail_usage("analyze: give --input or --synthetic");
      return;
    }
    rc = finish(bgg_analyze(rates.c_str(), analyze_outdir.c_str(), analyze_bins,
                            analyze_rows, analyze_maxdur));
    if (rc == 0) std::cout << "analysis written to " << analyze_outdir << "\n";
  });

  // test
  auto* test = app.add_subcommand("test", "Likelihood-ratio or Wald test");
  bool test_lr = false, test_wald = false;
  double test_full = 0.0, test_restricted = 0.0, test_null = 1.0;
  long test_df = 1;
  std::string test_fit, test_component = "alpha";
  auto* lr_flag = test->add_flag("--lr", test_lr, "likelihood-ratio test");
  auto* wald_flag = test->add_flag("--wald", test_wald, "Wald test");
  lr_flag->excludes(wald_flag);
  test->add_option("--full", test_full, "maximized log-likelihood, full model")
      ->needs(lr_flag);
  test->add_option("--restricted", test_restricted,
                   "maximized log-likelihood, restricted model")
      ->needs(lr_flag);
  test->add_option("--df", test_df, "degrees of freedom")->needs(lr_flag);
  test->add_option("--fit", test_fit, "fit report JSON")->needs(wald_flag);
  test->add_option("--component", test_component, "parameter name")->needs(wald_flag);
  test->add_option("--null", test_null, "null value")->needs(wald_flag);
  test->callback([&] {
    double stat = 0.0, p = 0.0;
    bgg_status status;
    if (test_lr) {
      status = bgg_lr_test(test_full, test_restricted, test_df, &stat, &p);
    } else if (test_wald) {
      if (test_fit.empty()) {
        rc = fail_usage("test: --wald needs --fit");
        return;
      }
      status = bgg_wald_test_json(test_fit.c_str(), test_component.c_str(), test_null,
                                  &stat, &p);
    } else {
      rc = fail_usage("test: give --lr or --wald");
      return;
    }
    rc = finish(status);
    if (rc == 0) {
      std::printf("{\n  \"statistic\": %.17g,\n  \"p_value\": %.17g\n}\n", stat, p);
    }
  });

  // simulate-path
  auto* paths = app.add_subcommand("simulate-path", "Simulate the process on a grid");
  std::vector<double> paths_params, paths_grid;
  long paths_count = 1;
  std::uint64_t paths_seed = 0;
  std::string paths_out;
  paths->add_option("--params", paths_params, "beta,alpha,p,r")
      ->required()
      ->delimiter(',')
      ->expected(4);
  paths->add_option("--grid", paths_grid, "increasing positive times t0,t1,...")
      ->required()
      ->delimiter(',');
  paths->add_option("--paths", paths_count, "number of independent paths");
  paths->add_option("--seed", paths_seed, "random seed");
  paths->add_option("--out", paths_out, "output CSV (path,t,x,n)")->required();
  paths->callback([&] {
    rc = finish(bgg_simulate_path_csv(paths_params.data(), paths_grid.data(),
                                      paths_grid.size(), paths_count, paths_seed,
                                      paths_out.c_str()));
    if (rc == 0) {
      std::cout << "wrote " << paths_count << " paths to " << paths_out << "\n";
    }
  });

  // gof
  auto* gof = app.add_subcommand("gof", "Goodness of fit against fixed parameters");
  std::string gof_input, gof_out;
  std::vector<double> gof_params;
  bool gof_ks = false, gof_chi2 = false;
  gof->add_option("--input", gof_input, "pairs CSV with header x,n")->required();
  gof->add_option("--params", gof_params, "beta,alpha,p or beta,alpha,p,r")
      ->required()
      ->delimiter(',');
  gof->add_option("--out", gof_out, "output JSON")->required();
  gof->add_flag("--ks", gof_ks, "print only the magnitude KS result");
  gof->add_flag("--chi2", gof_chi2, "print only the count chi-square result");
  gof->callback([&] {
    if (gof_params.size() != 3 && gof_params.size() != 4) {
      rc = fail_usage("gof: --params takes 3 or 4 values");
      return;
    }
    rc = finish(bgg_gof_csv(gof_input.c_str(), gof_params.data(), gof_params.size(),
                            gof_out.c_str()));
    if (rc != 0) return;
    std::ifstream in(gof_out);
    const auto report = nlohmann::ordered_json::parse(in);
    if (gof_ks == gof_chi2) {
      std::cout << report.dump(2) << "\n";
    } else if (gof_ks) {
      std::cout << report["ks_magnitude"].dump(2) << "\n";
    } else {
      std::cout << report["chi_square_count"].dump(2) << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }
  return rc;
}

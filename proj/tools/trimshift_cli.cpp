// trimshift command line: robust sparse regression with sparse LTS and the
// mean-shift (SO) estimator, plus the oracle-backed equivalence checks.
//
// Exit codes: 0 success, 1 usage or data error, 2 fit did not converge
// (report still written), 3 target outlier count unattainable.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trimshift/report.hpp"
#include "trimshift/trimshift.hpp"

namespace ts = trimshift;
using ts::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitUnattainable = 3;

struct CommonOpts {
  std::string data_path;
  bool no_header = false;
  std::uint64_t seed = 42;
  unsigned threads = ts::default_threads();
  bool center = false;
  std::string out_dir = ".";
};

void add_common(CLI::App* sub, CommonOpts& opts, bool needs_data) {
  sub->set_help_flag("--help", "print help");  // frees -h / --h for the subset size
  if (needs_data) {
    sub->add_option("--data", opts.data_path, "input CSV (response first column)")
        ->required();
    sub->add_flag("--no-header", opts.no_header, "input has no header row");
    sub->add_flag("--center", opts.center,
                  "subtract column medians of X and the median of y before fitting");
  }
  sub->add_option("--seed", opts.seed, "RNG seed; fixes all randomness end to end");
  sub->add_option("--threads", opts.threads, "worker threads (default: all cores)");
  sub->add_option("--out", opts.out_dir, "output directory for generated files");
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ts::Dataset center_dataset(const ts::Dataset& data) {
  std::vector<double> y = data.y;
  const double my = median_of(y);
  for (double& v : y) v -= my;
  ts::Matrix X = data.X;
  for (std::size_t j = 0; j < data.p(); ++j) {
    const double mj = median_of(data.X.col(j));
    for (std::size_t i = 0; i < data.n(); ++i) X(i, j) -= mj;
  }
  return ts::Dataset(std::move(y), std::move(X));
}

ts::Dataset load_data(const CommonOpts& opts) {
  ts::Dataset data = ts::load_csv(opts.data_path, !opts.no_header);
  if (opts.center) data = center_dataset(data);
  return data;
}

std::filesystem::path out_path(const CommonOpts& opts, const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  return std::filesystem::path(opts.out_dir) / name;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

// --- fit-lts -----------------------------------------------------------

struct LtsOpts {
  CommonOpts common;
  double alpha = 0.25;
  std::optional<std::size_t> h;
  std::optional<double> lambda1;
  std::optional<double> lambda_per_obs;
  std::size_t starts = 50;
  std::size_t max_csteps = 100;
};

void add_lts_flags(CLI::App* sub, LtsOpts& o) {
  auto* alpha = sub->add_option("--alpha", o.alpha, "trimming fraction in [0, 0.5]");
  auto* h = sub->add_option("--h", o.h, "retained subset size (overrides --alpha)");
  h->excludes(alpha);
  auto* l1 = sub->add_option("--lambda1", o.lambda1, "total l1 penalty on beta");
  auto* lpo = sub->add_option("--lambda-per-obs", o.lambda_per_obs,
                              "per-observation l1 penalty; total is h times this");
  l1->excludes(lpo);
  lpo->excludes(l1);
  sub->add_option("--starts", o.starts, "number of random starts");
  sub->add_option("--max-csteps", o.max_csteps, "concentration step cap per start");
}

std::size_t resolve_h(const LtsOpts& o, std::size_t n) {
  return o.h ? *o.h : ts::h_from_alpha(n, o.alpha);
}

double resolve_lambda1(const LtsOpts& o, std::size_t h) {
  if (o.lambda_per_obs) return ts::per_obs_to_total(h, *o.lambda_per_obs);
  return o.lambda1.value_or(0.0);
}

std::pair<ts::LtsFit, json> run_lts(const ts::Dataset& data, const LtsOpts& o) {
  const std::size_t h = resolve_h(o, data.n());
  const double lambda1 = resolve_lambda1(o, h);
  ts::LtsConfig cfg;
  cfg.h = h;
  cfg.lambda1 = lambda1;
  cfg.n_starts = o.starts;
  cfg.max_csteps = o.max_csteps;
  cfg.seed = o.common.seed;
  ts::LtsFit fit = ts::sparse_lts_fit(data, cfg, ts::SolverConfig{}, o.common.threads);
  json params{{"data", o.common.data_path},
              {"h", h},
              {"alpha", o.h ? json() : json(o.alpha)},
              {"lambda1", lambda1},
              {"lambda_per_obs", o.lambda_per_obs ? json(*o.lambda_per_obs) : json()},
              {"starts", o.starts},
              {"max_csteps", o.max_csteps},
              {"seed", o.common.seed},
              {"center", o.common.center}};
  return {std::move(fit), std::move(params)};
}

int cmd_fit_lts(const LtsOpts& o) {
  const ts::Dataset data = load_data(o.common);
  auto [fit, params] = run_lts(data, o);
  const ts::FitReport report = ts::make_lts_report(data, fit, std::move(params));
  std::cout << json(report).dump(2) << "\n";
  return fit.converged ? kExitOk : kExitNotConverged;
}

// --- fit-so ------------------------------------------------------------

struct SoOpts {
  CommonOpts common;
  double lambda1 = 0.0;
  std::optional<double> lambda2;
  std::optional<std::size_t> match_outliers;
  std::size_t max_outer = 500;
};

void add_so_flags(CLI::App* sub, SoOpts& o, bool include_lambda1 = true) {
  if (include_lambda1) {
    sub->add_option("--lambda1", o.lambda1, "total l1 penalty on beta");
  }
  auto* l2 = sub->add_option("--lambda2", o.lambda2, "l0 penalty on the mean shifts");
  auto* match = sub->add_option("--match-outliers", o.match_outliers,
                                "search lambda2 for this outlier count");
  l2->excludes(match);
  match->excludes(l2);
  sub->add_option("--max-outer", o.max_outer, "alternation cap");
}

struct SoOutcome {
  std::optional<ts::SoFit> fit;
  double lambda2 = 0.0;
  std::vector<std::size_t> achieved;  // filled when the target was unattainable
  bool attained = true;
};

SoOutcome run_so(const ts::Dataset& data, const SoOpts& o) {
  SoOutcome out;
  if (o.lambda2) {
    ts::SoConfig cfg;
    cfg.lambda1 = o.lambda1;
    cfg.lambda2 = *o.lambda2;
    cfg.max_outer = o.max_outer;
    cfg.seed = o.common.seed;
    out.fit = ts::so_fit(data, cfg);
    out.lambda2 = *o.lambda2;
    return out;
  }
  const std::size_t target = *o.match_outliers;
  ts::Lambda2SearchResult search = ts::lambda2_search(
      data, o.lambda1, target, ts::SolverConfig{}, {}, o.common.threads, o.max_outer);
  out.attained = search.attained;
  out.achieved = search.achieved_counts;
  if (search.attained) {
    out.fit = std::move(search.fit);
    out.lambda2 = search.lambda2;
  }
  return out;
}

json so_params(const SoOpts& o, const SoOutcome& outcome) {
  return json{{"data", o.common.data_path},
              {"lambda1", o.lambda1},
              {"lambda2", outcome.attained ? json(outcome.lambda2) : json()},
              {"match_outliers", o.match_outliers ? json(*o.match_outliers) : json()},
              {"max_outer", o.max_outer},
              {"seed", o.common.seed},
              {"center", o.common.center}};
}

int cmd_fit_so(const SoOpts& o) {
  if (!o.lambda2 && !o.match_outliers) {
    std::cerr << "fit-so: one of --lambda2 or --match-outliers is required\n";
    return kExitUsage;
  }
  const ts::Dataset data = load_data(o.common);
  const SoOutcome outcome = run_so(data, o);
  if (!outcome.attained) {
    json j{{"error", "unattainable_target"},
           {"target", *o.match_outliers},
           {"achieved_counts", outcome.achieved}};
    std::cout << j.dump(2) << "\n";
    std::cerr << "fit-so: no lambda2 on the grid yields " << *o.match_outliers
              << " outliers\n";
    return kExitUnattainable;
  }
  const ts::FitReport report = ts::make_so_report(data, *outcome.fit, so_params(o, outcome));
  std::cout << json(report).dump(2) << "\n";
  return outcome.fit->converged ? kExitOk : kExitNotConverged;
}

// --- compare -----------------------------------------------------------

struct CompareOpts {
  LtsOpts lts;
  SoOpts so;
};

std::string panel_csv(const std::vector<std::vector<double>>& cols,
                      const std::string& header) {
  std::string body = header + "\n";
  for (std::size_t i = 0; i < cols[0].size(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) body += ',';
      body += ts::format_double(cols[c][i]);
    }
    body += '\n';
  }
  return body;
}

int cmd_compare(const CompareOpts& o) {
  const ts::Dataset data = load_data(o.lts.common);
  const std::size_t h = resolve_h(o.lts, data.n());
  const double lambda1 = resolve_lambda1(o.lts, h);

  auto [lts_fit, lts_params] = run_lts(data, o.lts);

  SoOpts so = o.so;
  so.common = o.lts.common;
  so.lambda1 = lambda1;
  if (!so.lambda2 && !so.match_outliers) {
    so.match_outliers = data.n() - h;  // mirror the LTS trimming count
  }
  const SoOutcome outcome = run_so(data, so);

  if (!outcome.attained) {
    json j{{"error", "unattainable_target"},
           {"target", *so.match_outliers},
           {"achieved_counts", outcome.achieved},
           {"h", h},
           {"lambda1", lambda1}};
    write_json(out_path(o.lts.common, "report.json"), j);
    std::cout << j.dump(2) << "\n";
    std::cerr << "compare: no lambda2 on the grid yields " << *so.match_outliers
              << " outliers; achieved counts are listed in the report\n";
    return kExitUnattainable;
  }

  const ts::SoFit& so_fit_result = *outcome.fit;
  const ts::PenaltyConfig pen{lambda1, outcome.lambda2};
  const ts::ComparisonReport comparison = ts::compare_fits(data, lts_fit, so_fit_result, pen);

  const ts::FitReport lts_report = ts::make_lts_report(data, lts_fit, std::move(lts_params));
  const ts::FitReport so_report = ts::make_so_report(data, so_fit_result, so_params(so, outcome));

  json j{{"h", h},
         {"lambda1", lambda1},
         {"lambda2", outcome.lambda2},
         {"lts", lts_report},
         {"so", so_report},
         {"comparison", ts::comparison_to_json(comparison)}};
  write_json(out_path(o.lts.common, "report.json"), j);

  write_text(out_path(o.lts.common, "panel_a.csv"),
             panel_csv({data.y, lts_report.fitted, so_report.fitted},
                       "observed,fitted_lts,fitted_so"));
  write_text(out_path(o.lts.common, "panel_b.csv"),
             panel_csv({lts_report.fitted, so_report.fitted}, "fitted_lts,fitted_so"));

  std::cout << json{{"h", h},
                    {"lambda1", lambda1},
                    {"lambda2", outcome.lambda2},
                    {"comparison", ts::comparison_to_json(comparison)}}
                   .dump(2)
            << "\n";
  return (lts_fit.converged && so_fit_result.converged) ? kExitOk : kExitNotConverged;
}

// --- verify ------------------------------------------------------------

struct VerifyOpts {
  CommonOpts common;
  ts::SweepConfig sweep;
};

int cmd_verify(const VerifyOpts& o) {
  ts::SweepConfig cfg = o.sweep;
  cfg.seed = o.common.seed;
  const ts::SweepReport report = ts::run_proposition_sweep(cfg, {}, o.common.threads);
  for (const auto& inst : report.instances) {
    std::cout << "instance " << inst.index << ": n=" << inst.n << " p=" << inst.p
              << " lambda1=" << inst.lambda1 << " lambda2=" << inst.lambda2
              << " h=" << inst.h << " objective_gap=" << inst.objective_gap
              << " profiling_gap=" << inst.profiling_gap << " "
              << (inst.boundary ? "BOUNDARY" : (inst.pass ? "PASS" : "FAIL")) << "\n";
  }
  const std::size_t considered = report.instances.size() - report.n_boundary;
  std::cout << "proposition sweep: " << report.n_pass << "/" << considered
            << " non-boundary instances passed";
  if (report.n_boundary > 0) std::cout << " (" << report.n_boundary << " boundary excluded)";
  std::cout << "\n";
  return report.all_pass ? kExitOk : kExitUsage;
}

// --- screen ------------------------------------------------------------

struct ScreenOpts {
  CommonOpts common;
  std::size_t top = 10;
  bool use_signed = false;
};

int cmd_screen(const ScreenOpts& o) {
  const ts::Dataset data = load_data(o.common);
  const ts::ScreeningResult result = ts::screen_top_p(data, o.top, !o.use_signed);
  const ts::Dataset reduced = ts::reduce_columns(data, result.selected);

  std::vector<std::string> names;
  std::string source_cols, rho_list;
  for (std::size_t k = 0; k < result.selected.size(); ++k) {
    names.push_back("x" + std::to_string(result.selected[k]));
    if (k) {
      source_cols += ',';
      rho_list += ',';
    }
    source_cols += std::to_string(result.selected[k]);
    rho_list += ts::format_double(result.rho[k]);
  }
  std::vector<std::string> comments = {"source_columns: " + source_cols,
                                       "spearman_rho: " + rho_list};
  const auto path = out_path(o.common, "screened.csv");
  ts::save_csv(path.string(), reduced, names, comments);

  json j{{"input", o.common.data_path},
         {"output", path.string()},
         {"selected", result.selected},
         {"rho", result.rho},
         {"constant_columns", result.constant_columns}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

// --- synth -------------------------------------------------------------

struct SynthOpts {
  CommonOpts common;
  ts::SyntheticSpec spec;
};

int cmd_synth(const SynthOpts& o) {
  ts::SyntheticSpec spec = o.spec;
  spec.seed = o.common.seed;
  const ts::SyntheticData synth = ts::gen_synthetic(spec);

  const auto data_path = out_path(o.common, "synth.csv");
  ts::save_csv(data_path.string(), synth.data);

  json truth{{"beta_true", synth.truth.beta_true},
             {"outlier_indices", synth.truth.outlier_indices},
             {"spec",
              json{{"n", spec.n},
                   {"p", spec.p},
                   {"s", spec.s},
                   {"beta_magnitude", spec.beta_magnitude},
                   {"n_outliers", spec.n_outliers},
                   {"shift_magnitude", spec.shift_magnitude},
                   {"noise_sd", spec.noise_sd},
                   {"seed", spec.seed}}}};
  const auto truth_path = out_path(o.common, "synth_truth.json");
  write_json(truth_path, truth);

  json j{{"data", data_path.string()}, {"truth", truth_path.string()}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust sparse regression: sparse least trimmed squares and the "
               "mean-shift outlier estimator"};
  app.require_subcommand(1);

  LtsOpts lts_opts;
  auto* fit_lts = app.add_subcommand("fit-lts", "sparse least trimmed squares fit");
  add_common(fit_lts, lts_opts.common, true);
  add_lts_flags(fit_lts, lts_opts);

  SoOpts so_opts;
  auto* fit_so = app.add_subcommand("fit-so", "mean-shift outlier (SO) fit");
  add_common(fit_so, so_opts.common, true);
  add_so_flags(fit_so, so_opts);

  CompareOpts cmp_opts;
  auto* compare = app.add_subcommand(
      "compare", "run both estimators at a matched outlier count and emit figure data");
  add_common(compare, cmp_opts.lts.common, true);
  add_lts_flags(compare, cmp_opts.lts);
  add_so_flags(compare, cmp_opts.so, /*include_lambda1=*/false);

  VerifyOpts verify_opts;
  auto* verify = app.add_subcommand(
      "verify", "randomized oracle sweep checking that SO solutions solve the LTS problem");
  add_common(verify, verify_opts.common, false);
  verify->add_option("--count", verify_opts.sweep.count, "number of random instances");
  verify->add_option("--n-min", verify_opts.sweep.n_min, "smallest instance size");
  verify->add_option("--n-max", verify_opts.sweep.n_max, "largest instance size");
  verify->add_option("--p-max", verify_opts.sweep.p_max, "largest predictor count");
  verify->add_option("--cap", verify_opts.sweep.cap, "subset enumeration cap");

  ScreenOpts screen_opts;
  auto* screen = app.add_subcommand("screen",
                                    "keep the predictors with the largest Spearman "
                                    "correlation with the response");
  add_common(screen, screen_opts.common, true);
  screen->add_option("--top", screen_opts.top, "number of predictors to keep")->required();
  screen->add_flag("--signed", screen_opts.use_signed,
                   "rank by signed correlation instead of |rho|");

  SynthOpts synth_opts;
  auto* synth = app.add_subcommand("synth", "generate contaminated regression data");
  add_common(synth, synth_opts.common, false);
  synth->add_option("--n", synth_opts.spec.n, "observations");
  synth->add_option("--p", synth_opts.spec.p, "predictors");
  synth->add_option("--s", synth_opts.spec.s, "true support size");
  synth->add_option("--outliers", synth_opts.spec.n_outliers, "contaminated count");
  synth->add_option("--shift", synth_opts.spec.shift_magnitude,
                    "outlier shift in noise SD units");
  synth->add_option("--noise-sd", synth_opts.spec.noise_sd, "noise standard deviation");
  synth->add_option("--beta-mag", synth_opts.spec.beta_magnitude, "signal coefficient size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit_lts->parsed()) return cmd_fit_lts(lts_opts);
    if (fit_so->parsed()) return cmd_fit_so(so_opts);
    if (compare->parsed()) return cmd_compare(cmp_opts);
    if (verify->parsed()) return cmd_verify(verify_opts);
    if (screen->parsed()) return cmd_screen(screen_opts);
    if (synth->parsed()) return cmd_synth(synth_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

#include "atekit/cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atekit/dataio.hpp"
#include "atekit/diagnostics.hpp"
#include "atekit/estimators.hpp"
#include "atekit/nuisance.hpp"
#include "atekit/report.hpp"
#include "atekit/rng.hpp"

namespace atekit::cli {

namespace {

using report::Json;

struct DataFlags {
  std::string data;
  std::string manifest;
  std::string outcome;
  std::string treatment;
  std::vector<std::string> drop;
};

struct RunFlags {
  std::string methods = "all";
  std::string estimand = "ate";
  std::uint64_t seed = 0;
  int bootstrap = 0;
  int half_sample_reps = 200;
  double trim_alpha = 0.1;
  double clip_eta = 0.01;
  int dml_folds = 5;
  int bins = 20;
  std::string nuisance = "linear";
  int trees = 500;
  double zeta = 0.5;
  bool hajek = false;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.data, "CSV file with a header row")->required();
  cmd->add_option("--manifest", f.manifest, "column manifest (JSON); selects the study-file recipe");
  cmd->add_option("--outcome", f.outcome, "outcome column");
  cmd->add_option("--treatment", f.treatment, "treatment column (0/1)");
  cmd->add_option("--drop", f.drop, "columns to ignore")->delimiter(',');
}

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_bootstrap_default) {
  cmd->add_option("--methods", f.methods, "comma list of naive,ols,dse,arbe,dre,dmle or 'all'");
  cmd->add_option("--estimand", f.estimand, "ate or att");
  cmd->add_option("--seed", f.seed, "64-bit seed");
  cmd->add_option("--bootstrap", f.bootstrap,
                  with_bootstrap_default ? "bootstrap replicates (default 1000)" : "bootstrap replicates (0 = none)");
  cmd->add_option("--dml-folds", f.dml_folds, "cross-fitting folds");
  cmd->add_option("--clip-eta", f.clip_eta, "propensity clipping margin");
  cmd->add_option("--nuisance", f.nuisance, "nuisance family: linear or forest");
  cmd->add_option("--trees", f.trees, "forest size");
  cmd->add_option("--zeta", f.zeta, "balancing trade-off in [0, 1]");
  cmd->add_flag("--hajek", f.hajek, "weight-normalized inverse propensity weighting");
}

RunConfig make_config(const RunFlags& f, bool report_defaults) {
  RunConfig cfg;
  cfg.seed = f.seed;
  cfg.bootstrap_reps = f.bootstrap > 0 ? f.bootstrap : (report_defaults ? 1000 : cfg.bootstrap_reps);
  cfg.half_sample_reps = f.half_sample_reps;
  cfg.trim_alpha = f.trim_alpha;
  cfg.clip_eta = f.clip_eta;
  cfg.dml_folds = f.dml_folds;
  cfg.histogram_bins = f.bins;
  cfg.hajek = f.hajek;
  cfg.forest.n_trees = f.trees;
  cfg.balance.zeta = f.zeta;
  if (f.nuisance == "linear") cfg.nuisance_family = NuisanceFamily::linear;
  else if (f.nuisance == "forest") cfg.nuisance_family = NuisanceFamily::forest;
  else throw Error(ErrorCode::InvalidArgument, "unknown nuisance family '" + f.nuisance + "'");
  cfg.validate();
  return cfg;
}

Dataset load_data(const DataFlags& f) {
  if (!f.manifest.empty()) return dataio::rhc_prepare(f.data, f.manifest);
  if (f.outcome.empty() || f.treatment.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--outcome and --treatment are required without --manifest");
  }
  return dataio::load_csv(f.data, f.outcome, f.treatment, f.drop);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::FileNotFound, "cannot write '" + path + "'");
  f << text;
  if (!f) throw Error(ErrorCode::FileNotFound, "failed writing '" + path + "'");
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int cmd_estimate(const DataFlags& df, const RunFlags& rf, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = make_config(rf, false);
  const Estimand estimand = parse_estimand(rf.estimand, cfg.trim_alpha);
  const auto methods = parse_methods(rf.methods);
  err << "config " << report::config_to_json(cfg).dump() << "\n";
  const Dataset ds = load_data(df);
  Json arr = Json::array();
  for (Method m : methods) {
    const std::uint64_t seed = derive_seed(cfg.seed, stream::report, static_cast<std::uint64_t>(m));
    PointEstimate pe = estimators::estimate(m, ds, cfg, seed, estimand);
    if (rf.bootstrap > 0) {
      const auto fn = estimators::make_estimator(m, cfg, estimand);
      pe.se = diagnostics::bootstrap_se(fn, ds, rf.bootstrap, derive_seed(seed, stream::bootstrap));
      pe.notes.push_back("bootstrap s.e. over " + std::to_string(rf.bootstrap) + " replicates");
    }
    arr.push_back(report::point_estimate_to_json(pe));
  }
  out << arr.dump(2) << "\n";
  return kExitOk;
}

int cmd_report(const DataFlags& df, const RunFlags& rf, const std::string& out_path, const std::string& hist_path,
               std::ostream& out, std::ostream& err) {
  const RunConfig cfg = make_config(rf, true);
  const Estimand estimand = parse_estimand(rf.estimand, cfg.trim_alpha);
  const auto methods = parse_methods(rf.methods);
  err << "config " << report::config_to_json(cfg).dump() << "\n";
  const Dataset ds = load_data(df);
  const auto rep = diagnostics::build_report(ds, methods, cfg, estimand);
  const Json j = report::report_to_json(rep, ds.column_names());
  write_file(out_path, j.dump(2) + "\n");
  if (!hist_path.empty()) {
    if (!rep.bias_summary) throw Error(ErrorCode::NoConvergence, "bias function failed: " + rep.bias_summary_error);
    write_file(hist_path, ends_with(hist_path, ".svg") ? report::histogram_svg(rep.bias_summary->histogram)
                                                       : report::histogram_csv(rep.bias_summary->histogram));
  }
  std::size_t ok = 0;
  for (const auto& r : rep.rows) ok += r.estimate.value ? 1 : 0;
  Json summary;
  summary["report"] = out_path;
  summary["rows"] = rep.rows.size();
  summary["rows_with_estimate"] = ok;
  summary["config_hash"] = report::config_hash(cfg);
  out << summary.dump(2) << "\n";
  for (const auto& f : j["meta"]["cell_failures"]) {
    err << "cell failure: " << f.dump() << "\n";
  }
  return ok > 0 ? kExitOk : kExitEstimation;
}

struct SimFlags {
  std::string dgp;
  std::size_t n = 1000;
  int reps = 100;
};

int cmd_simulate(const SimFlags& sf, const RunFlags& rf, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = make_config(rf, false);
  const Estimand estimand = parse_estimand(rf.estimand, cfg.trim_alpha);
  const auto methods = parse_methods(rf.methods);
  const dataio::SynthSpec spec = dataio::named_dgp(sf.dgp, sf.n);
  if (sf.reps < 1) throw Error(ErrorCode::InvalidArgument, "--reps must be >= 1");
  err << "config " << report::config_to_json(cfg).dump() << "\n";

  struct Acc {
    std::vector<double> err_to_truth, est;
    std::size_t covered = 0, failed = 0;
    double se_sum = 0.0;
  };
  std::vector<Acc> acc(methods.size());
  std::vector<double> ratios, truths;
  std::size_t ratio_failures = 0;
  for (int r = 0; r < sf.reps; ++r) {
    const auto rr = static_cast<std::uint64_t>(r);
    const auto sample = dataio::generate_synthetic(spec, derive_seed(cfg.seed, stream::simulate, rr));
    const double truth = estimand.kind == Estimand::Kind::ATT ? sample.tau_t_true : sample.tau_true;
    truths.push_back(truth);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      try {
        const std::uint64_t seed = derive_seed(cfg.seed, stream::estimator, rr * 16 + static_cast<std::uint64_t>(methods[k]));
        PointEstimate pe = estimators::estimate(methods[k], sample.dataset, cfg, seed, estimand);
        if (rf.bootstrap > 0) {
          pe.se = diagnostics::bootstrap_se(estimators::make_estimator(methods[k], cfg, estimand), sample.dataset,
                                            rf.bootstrap, derive_seed(seed, stream::bootstrap));
        }
        acc[k].est.push_back(pe.value);
        acc[k].err_to_truth.push_back(pe.value - truth);
        acc[k].se_sum += pe.se;
        if (std::abs(pe.value - truth) <= 1.96 * pe.se) ++acc[k].covered;
      } catch (const Error&) {
        ++acc[k].failed;
      }
    }
    try {
      const auto nuis = nuisance::fit_in_sample(sample.dataset, cfg, derive_seed(cfg.seed, stream::nuisance, rr), true);
      const double ate = estimators::variance_bound(sample.dataset, nuis, Estimand::ate(),
                                                    estimators::solve_score_ate(sample.dataset, nuis))
                             .value;
      const double wb = estimators::variance_bound(sample.dataset, nuis, Estimand::overlap(),
                                                   estimators::weighted_effect(nuis, Estimand::overlap()))
                            .value;
      ratios.push_back(wb / ate);
    } catch (const Error&) {
      ++ratio_failures;
    }
  }

  Json j;
  j["dgp"] = sf.dgp;
  j["n"] = sf.n;
  j["reps"] = sf.reps;
  j["estimand"] = std::string(to_string(estimand.kind));
  j["truth_mean"] = mean(Eigen::Map<const Eigen::VectorXd>(truths.data(), static_cast<Eigen::Index>(truths.size())));
  j["config"] = report::config_to_json(cfg);
  Json rows = Json::array();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto& a = acc[k];
    Json row;
    row["method"] = std::string(to_string(methods[k]));
    row["n_ok"] = a.est.size();
    row["n_failed"] = a.failed;
    if (!a.est.empty()) {
      const auto m = static_cast<double>(a.est.size());
      double bias = 0.0, mse = 0.0;
      for (double e : a.err_to_truth) {
        bias += e;
        mse += e * e;
      }
      row["bias"] = bias / m;
      row["sd"] = sample_sd(a.est);
      row["mc_se_of_bias"] = sample_sd(a.err_to_truth) / std::sqrt(m);
      row["rmse"] = std::sqrt(mse / m);
      row["mean_se"] = a.se_sum / m;
      row["coverage"] = static_cast<double>(a.covered) / m;
    }
    rows.push_back(row);
  }
  j["methods"] = rows;
  Json bound;
  if (!ratios.empty()) {
    bound["mean_ratio"] = mean(Eigen::Map<const Eigen::VectorXd>(ratios.data(), static_cast<Eigen::Index>(ratios.size())));
  } else {
    bound["mean_ratio"] = nullptr;
  }
  bound["failures"] = ratio_failures;
  j["bound_ratio_overlap_to_ate"] = bound;
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_bias_hist(const DataFlags& df, const RunFlags& rf, const std::string& csv_path,
                  const std::string& svg_path, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = make_config(rf, false);
  err << "config " << report::config_to_json(cfg).dump() << "\n";
  const Dataset ds = load_data(df);
  const auto s = diagnostics::bias_function_summary(ds, cfg, derive_seed(cfg.seed, stream::report, 2000));
  if (!csv_path.empty()) write_file(csv_path, report::histogram_csv(s.histogram));
  if (!svg_path.empty()) write_file(svg_path, report::histogram_svg(s.histogram));
  Json j;
  j["mean"] = s.mean;
  j["q025"] = s.q025;
  j["q25"] = s.q25;
  j["median"] = s.median;
  j["q75"] = s.q75;
  j["q975"] = s.q975;
  j["aggregate_bias"] = s.phat > 0.0 && s.phat < 1.0 ? Json(diagnostics::aggregate_bias(s, s.phat).B) : Json(nullptr);
  j["degenerate_outcome"] = s.degenerate_outcome;
  Json hist = Json::array();
  for (const auto& b : s.histogram) hist.push_back({{"bin_left", b.left}, {"bin_right", b.right}, {"count", b.count}});
  j["histogram"] = hist;
  out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Average treatment effect estimation and diagnostics"};
  app.require_subcommand(1);
  DataFlags df;
  RunFlags rf;
  SimFlags sf;
  std::string out_path, hist_path, csv_path, svg_path;

  auto* est = app.add_subcommand("estimate", "point estimates as a JSON array");
  add_data_flags(est, df);
  add_run_flags(est, rf, false);

  auto* rep = app.add_subcommand("report", "full diagnostics report");
  add_data_flags(rep, df);
  add_run_flags(rep, rf, true);
  rep->add_option("--out", out_path, "report JSON path")->required();
  rep->add_option("--hist", hist_path, "histogram path (.svg for a chart, otherwise CSV)");
  rep->add_option("--trim-alpha", rf.trim_alpha, "trimming threshold");
  rep->add_option("--half-sample-reps", rf.half_sample_reps, "half-sample repetitions");
  rep->add_option("--bins", rf.bins, "histogram bins");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study on a named design");
  sim->add_option("--dgp", sf.dgp, "randomized, confounded_linear, poor_overlap, well_overlap, product_sparse")
      ->required();
  sim->add_option("--n", sf.n, "units per replication");
  sim->add_option("--reps", sf.reps, "replications");
  add_run_flags(sim, rf, false);

  auto* hist = app.add_subcommand("bias-hist", "bias-function summary and histogram");
  add_data_flags(hist, df);
  add_run_flags(hist, rf, false);
  hist->add_option("--bins", rf.bins, "histogram bins");
  hist->add_option("--csv", csv_path, "write bins as CSV");
  hist->add_option("--svg", svg_path, "write bins as an SVG chart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    err << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitValidation;
  }

  try {
    if (est->parsed()) return cmd_estimate(df, rf, out, err);
    if (rep->parsed()) return cmd_report(df, rf, out_path, hist_path, out, err);
    if (sim->parsed()) return cmd_simulate(sf, rf, out, err);
    if (hist->parsed()) return cmd_bias_hist(df, rf, csv_path, svg_path, out, err);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what();
    if (e.row()) err << " (row " << *e.row() << ")";
    if (e.column()) err << " (column " << *e.column() << ")";
    err << "\n";
    return is_validation_error(e.code()) ? kExitValidation : kExitEstimation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitEstimation;
  }
  return kExitValidation;
}

}  // namespace atekit::cli

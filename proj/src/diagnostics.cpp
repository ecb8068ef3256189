#include "atekit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "atekit/nuisance.hpp"
#include "atekit/parallel.hpp"
#include "atekit/rng.hpp"

namespace atekit::diagnostics {

namespace {

constexpr double kMaxFailedShare = 0.10;
constexpr double kMinoritySide = 0.05;

void check_failures(std::size_t failed, std::size_t total, const std::string& what) {
  if (static_cast<double>(failed) > kMaxFailedShare * static_cast<double>(total)) {
    throw Error(ErrorCode::TooManyFailedReplicates,
                std::to_string(failed) + " of " + std::to_string(total) + " " + what + " failed");
  }
}

template <typename Fn>
Cell make_cell(Fn&& fn) {
  Cell c;
  try {
    const double v = fn();
    if (std::isfinite(v)) c.value = v;
    else c.error = "non-finite value";
  } catch (const std::exception& e) {
    c.error = e.what();
  }
  return c;
}

bool has_both_arms(const Dataset& ds, const std::vector<std::size_t>& rows) {
  bool t = false, c = false;
  for (auto i : rows) (ds.treated(i) ? t : c) = true;
  return t && c;
}

}  // namespace

ReplicateSummary bootstrap(const EstimatorFn& estimator, const Dataset& ds, int B, std::uint64_t seed) {
  if (B < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least 2 replicates");
  const std::size_t n = ds.n();
  const auto reps = static_cast<std::size_t>(B);
  std::vector<std::optional<double>> slot(reps);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = make_rng(seed, stream::bootstrap, r);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::size_t> rows(n);
    for (auto& i : rows) i = draw(rng);
    try {
      slot[r] = estimator(ds.subset(rows), derive_seed(seed, stream::bootstrap, r)).value;
    } catch (const Error&) {
    }
  });
  ReplicateSummary out;
  for (const auto& s : slot) {
    if (s) out.estimates.push_back(*s);
    else ++out.n_failed;
  }
  check_failures(out.n_failed, reps, "bootstrap replicates");
  out.se = sample_sd(out.estimates);
  return out;
}

double bootstrap_se(const EstimatorFn& estimator, const Dataset& ds, int B, std::uint64_t seed) {
  return bootstrap(estimator, ds, B, seed).se;
}

HalfSampleResult half_sample_bias(const EstimatorFn& estimator, const Dataset& ds, int reps,
                                  std::uint64_t seed, double full_estimate, double se) {
  if (reps < 1) throw Error(ErrorCode::InvalidArgument, "half-sample bias needs at least 1 rep");
  const std::size_t n = ds.n();
  if (n < 4) throw Error(ErrorCode::TooFewRows, "half-sample bias needs at least 4 units");
  const auto R = static_cast<std::size_t>(reps);
  std::vector<std::optional<double>> slot(2 * R);
  parallel_for(R, [&](std::size_t r) {
    Rng rng = make_rng(seed, stream::half_sample, r);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t half = n / 2;
    const std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    const std::vector<std::size_t>* parts[2] = {&a, &b};
    for (std::size_t h = 0; h < 2; ++h) {
      try {
        slot[2 * r + h] = estimator(ds.subset(*parts[h]), derive_seed(seed, stream::half_sample, 2 * r + h)).value;
      } catch (const Error&) {
      }
    }
  });
  HalfSampleResult out;
  double diff = 0.0;
  for (const auto& s : slot) {
    if (!s) {
      ++out.n_failed;
      continue;
    }
    out.half_estimates.push_back(*s);
    diff += *s - full_estimate;
  }
  check_failures(out.n_failed, 2 * R, "half-sample estimates");
  out.mean_difference = diff / static_cast<double>(out.half_estimates.size());
  if (out.mean_difference == 0.0) {
    out.sbb = 0.0;
  } else {
    if (!(se > 0.0)) throw Error(ErrorCode::InvalidArgument, "half-sample bias needs a positive s.e.");
    out.sbb = out.mean_difference / se;
  }
  return out;
}

CovSplitResult covariate_split_sensitivity(const EstimatorFn& estimator, const Dataset& ds,
                                           std::uint64_t seed) {
  const std::size_t n = ds.n();
  const std::size_t d = ds.d();
  std::vector<std::optional<double>> value(d);
  std::vector<std::string> reason(d);
  parallel_for(d, [&](std::size_t j) {
    const Eigen::VectorXd col = ds.X().col(static_cast<Eigen::Index>(j));
    if (col.minCoeff() == col.maxCoeff()) {
      reason[j] = "constant column";
      return;
    }
    const double median = quantile_type7(std::vector<double>(col.data(), col.data() + col.size()), 0.5);
    std::vector<std::size_t> low, high;
    for (std::size_t i = 0; i < n; ++i) (col[static_cast<Eigen::Index>(i)] <= median ? low : high).push_back(i);
    const double minority = static_cast<double>(std::min(low.size(), high.size()));
    if (minority <= kMinoritySide * static_cast<double>(n)) {
      reason[j] = "minority side at most 5% of units";
      return;
    }
    if (!has_both_arms(ds, low) || !has_both_arms(ds, high)) {
      reason[j] = "a side lacks one treatment arm";
      return;
    }
    try {
      const double lo = estimator(ds.subset(low), derive_seed(seed, stream::cov_split, 0)).value;
      const double hi = estimator(ds.subset(high), derive_seed(seed, stream::cov_split, 1)).value;
      value[j] = 0.5 * (lo + hi);
    } catch (const Error& e) {
      reason[j] = std::string("estimator failed: ") + e.what();
    }
  });
  CovSplitResult out;
  for (std::size_t j = 0; j < d; ++j) {
    if (value[j]) {
      out.columns.push_back(j);
      out.per_covariate.push_back(*value[j]);
    } else {
      out.skipped.push_back({j, reason[j]});
    }
  }
  if (out.per_covariate.empty()) throw Error(ErrorCode::AllSplitsFailed, "no covariate split produced an estimate");
  const double first = out.per_covariate.front();
  const bool all_equal = std::all_of(out.per_covariate.begin(), out.per_covariate.end(),
                                     [first](double v) { return v == first; });
  out.mean = all_equal ? first
                       : std::accumulate(out.per_covariate.begin(), out.per_covariate.end(), 0.0) /
                             static_cast<double>(out.per_covariate.size());
  out.std = sample_sd(out.per_covariate);
  return out;
}

std::vector<HistogramBin> histogram(const Eigen::VectorXd& values, int bins) {
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "histogram needs at least 1 bin");
  if (values.size() == 0) throw Error(ErrorCode::InvalidArgument, "histogram of no values");
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  const auto k = static_cast<std::size_t>(bins);
  std::vector<HistogramBin> out(k);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < k; ++b) {
    out[b].left = lo + width * static_cast<double>(b);
    out[b].right = b + 1 == k ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::size_t b = 0;
    if (hi > lo) {
      b = static_cast<std::size_t>(std::floor((values[i] - lo) / (hi - lo) * static_cast<double>(bins)));
      b = std::min(b, k - 1);
    }
    ++out[b].count;
  }
  return out;
}

BiasFunctionSummary bias_function_from_nuisances(const Dataset& ds, const NuisanceEstimates& nuis, int bins) {
  BiasFunctionSummary s;
  s.phat = nuis.phat;
  s.sd_y = sample_sd(ds.Y());
  const auto n = static_cast<Eigen::Index>(ds.n());
  if (s.sd_y == 0.0) {
    s.degenerate_outcome = true;
    s.b_values = Eigen::VectorXd::Zero(n);
  } else {
    const double p = nuis.phat;
    const Eigen::ArrayXd m0 = nuis.mu0hat.array() - nuis.mu0hat.mean();
    const Eigen::ArrayXd m1 = nuis.mu1hat.array() - nuis.mu1hat.mean();
    s.b_values = ((nuis.ehat.array() - p) * (p * m0 + (1.0 - p) * m1) / s.sd_y).matrix();
  }
  std::vector<double> v(s.b_values.data(), s.b_values.data() + n);
  s.mean = s.b_values.mean();
  s.q025 = quantile_type7(v, 0.025);
  s.q25 = quantile_type7(v, 0.25);
  s.median = quantile_type7(v, 0.5);
  s.q75 = quantile_type7(v, 0.75);
  s.q975 = quantile_type7(v, 0.975);
  s.histogram = histogram(s.b_values, bins);
  return s;
}

BiasFunctionSummary bias_function_summary(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed) {
  RunConfig forest_cfg = cfg;
  forest_cfg.nuisance_family = NuisanceFamily::forest;
  const NuisanceEstimates nuis = nuisance::fit_in_sample(ds, forest_cfg, seed);
  return bias_function_from_nuisances(ds, nuis, cfg.histogram_bins);
}

AggregateBias aggregate_bias(const BiasFunctionSummary& summary, double phat, std::optional<double> naive,
                             std::optional<double> reference) {
  if (!(phat > 0.0 && phat < 1.0)) throw Error(ErrorCode::InvalidArgument, "phat must lie in (0, 1)");
  AggregateBias out;
  out.B = summary.mean * summary.sd_y / (phat * (1.0 - phat));
  if (naive && reference) out.naive_minus_reference = *naive - *reference;
  return out;
}

DiagnosticsReport build_report(const Dataset& ds, const std::vector<Method>& methods, const RunConfig& cfg,
                               Estimand estimand) {
  if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods requested");
  cfg.validate();
  DiagnosticsReport rep;
  rep.config = cfg;
  rep.estimand = estimand;
  const std::uint64_t seed = cfg.seed;

  // Nuisances shared by the trimming rule and the bound comparison.
  std::optional<NuisanceEstimates> nuis;
  std::string nuis_error;
  try {
    nuis = nuisance::fit_in_sample(ds, cfg, derive_seed(seed, stream::report, 1000), true);
  } catch (const std::exception& e) {
    nuis_error = e.what();
  }

  for (Method m : methods) {
    ReportRow row;
    row.method = m;
    const std::uint64_t base = derive_seed(seed, stream::report, static_cast<std::uint64_t>(m));
    const EstimatorFn fn = estimators::make_estimator(m, cfg, estimand);
    std::optional<double> full;
    row.estimate = make_cell([&] {
      PointEstimate pe = fn(ds, base);
      row.notes = pe.notes;
      return pe.value;
    });
    full = row.estimate.value;
    row.se = make_cell([&] { return bootstrap_se(fn, ds, cfg.bootstrap_reps, derive_seed(base, stream::bootstrap)); });
    row.trimmed = make_cell([&] {
      if (!nuis) throw Error(ErrorCode::NoConvergence, "propensity fit failed: " + nuis_error);
      return estimators::trimmed_estimate(ds, *nuis, cfg.trim_alpha, fn, base).value;
    });
    row.sbb = make_cell([&] {
      if (!full) throw Error(ErrorCode::InvalidArgument, "no full-sample estimate");
      if (!row.se.value) throw Error(ErrorCode::InvalidArgument, "no bootstrap s.e.");
      return half_sample_bias(fn, ds, cfg.half_sample_reps, derive_seed(base, stream::half_sample), *full,
                              *row.se.value)
          .sbb;
    });
    std::optional<CovSplitResult> split;
    row.covsplit_mean = make_cell([&] {
      split = covariate_split_sensitivity(fn, ds, derive_seed(base, stream::cov_split));
      return split->mean;
    });
    if (split) {
      const double sd = split->std;
      row.covsplit_std = make_cell([sd] { return sd; });
      row.skipped_covariates = split->skipped;
    } else {
      row.covsplit_std.error = row.covsplit_mean.error;
    }
    rep.rows.push_back(std::move(row));
  }

  try {
    rep.bias_summary = bias_function_summary(ds, cfg, derive_seed(seed, stream::report, 2000));
    std::optional<double> naive_value, reference;
    for (const auto& r : rep.rows) {
      if (r.method == Method::naive) naive_value = r.estimate.value;
      if (r.method == Method::dre) reference = r.estimate.value;
    }
    rep.aggregate = aggregate_bias(*rep.bias_summary, rep.bias_summary->phat, naive_value, reference);
    if (rep.bias_summary->degenerate_outcome) rep.notes.push_back("outcome is constant: bias function set to 0");
  } catch (const std::exception& e) {
    rep.bias_summary_error = e.what();
  }

  if (nuis) {
    const Estimand overlap = Estimand::overlap();
    double tau_ate = 0.0;
    rep.bounds.ate_bound = make_cell([&] {
      tau_ate = estimators::solve_score_ate(ds, *nuis);
      return estimators::variance_bound(ds, *nuis, Estimand::ate(), tau_ate).value;
    });
    rep.bounds.ate_bound_decomposition = make_cell([&] {
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(ds.n()));
      return estimators::weighted_variance_bound(*nuis, ones, estimators::weighted_effect(*nuis, Estimand::ate()),
                                                 Estimand::ate())
          .value;
    });
    std::optional<estimators::VarianceBound> wb;
    rep.bounds.weighted_bound = make_cell([&] {
      wb = estimators::variance_bound(ds, *nuis, overlap, estimators::weighted_effect(*nuis, overlap));
      return wb->value;
    });
    if (wb) {
      const double alt = wb->value_mean_weight_normalized;
      rep.bounds.weighted_bound_mean_weight_normalized = make_cell([alt] { return alt; });
    } else {
      rep.bounds.weighted_bound_mean_weight_normalized.error = rep.bounds.weighted_bound.error;
    }
    rep.bounds.ratio = make_cell([&] {
      if (!rep.bounds.ate_bound.value || !rep.bounds.weighted_bound.value) {
        throw Error(ErrorCode::InvalidArgument, "a bound is missing");
      }
      return *rep.bounds.weighted_bound.value / *rep.bounds.ate_bound.value;
    });
  } else {
    for (Cell* c : {&rep.bounds.ate_bound, &rep.bounds.weighted_bound, &rep.bounds.ratio,
                    &rep.bounds.weighted_bound_mean_weight_normalized, &rep.bounds.ate_bound_decomposition}) {
      c->error = "nuisance fit failed: " + nuis_error;
    }
  }

  if (estimand.kind == Estimand::Kind::ATT) {
    rep.notes.push_back("naive, ols and dse assume a constant effect; their att cells equal their ate values");
  }
  rep.notes.push_back("weighted_bound uses the 1/mean(w^2) normalization; the 1/mean(w)^2 variant is also reported");
  return rep;
}

}  // namespace atekit::diagnostics

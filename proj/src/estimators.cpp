#include "atekit/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "atekit/nuisance.hpp"
#include "atekit/parallel.hpp"
#include "atekit/rng.hpp"

namespace atekit::estimators {

namespace {

void require_ate_or_att(const Estimand& estimand, std::string_view who) {
  if (estimand.kind != Estimand::Kind::ATE && estimand.kind != Estimand::Kind::ATT) {
    throw Error(ErrorCode::InvalidArgument, std::string(who) + " supports the ate and att estimands only");
  }
}

void note_constant_effect(PointEstimate& pe, const Estimand& estimand) {
  pe.estimand = estimand;
  if (estimand.kind != Estimand::Kind::ATE) {
    pe.notes.push_back("constant-effect estimator: same value for every estimand");
  }
}

linmod::CvOptions cv_for(const RunConfig& cfg, std::size_t n) {
  linmod::CvOptions opts = linmod::cv_options(cfg.linmod);
  opts.folds = std::min<int>(opts.folds, static_cast<int>(n));
  if (opts.folds < 2) throw Error(ErrorCode::TooFewRows, "cross-validation needs at least 2 rows");
  return opts;
}

// Fits the arm-a outcome model on arm a and solves its balancing weights.
struct ArmAdjustment {
  linmod::LinearFit outcome;
  balance::BalanceSolution weights;
};

ArmAdjustment adjust_arm(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed, int arm,
                         balance::Target target) {
  const auto rows = ds.arm_indices(arm == 1);
  const Eigen::MatrixXd Xa = ds.X()(rows, Eigen::all);
  const Eigen::VectorXd ya = ds.Y()(rows);
  ArmAdjustment out{linmod::fit_cv(Xa, ya, linmod::Family::gaussian, cfg.linmod.enet_mix,
                                   cfg.linmod.prediction_rule,
                                   derive_seed(seed, stream::nuisance, static_cast<std::uint64_t>(arm)),
                                   cv_for(cfg, rows.size())),
                    balance::solve_balancing_weights(ds.X(), ds.W(), target, arm,
                                                     balance::BalanceOptions::from(cfg.balance))};
  return out;
}

void note_balance(PointEstimate& pe, const balance::BalanceSolution& sol) {
  if (!sol.converged) pe.notes.push_back("balancing solver hit max_iter before the gap tolerance");
  if (!sol.dropped_columns.empty()) {
    pe.notes.push_back(std::to_string(sol.dropped_columns.size()) +
                       " constant covariate(s) dropped from the balance objective");
  }
}

}  // namespace

ScoreVector efficient_score_ate(const Dataset& ds, const NuisanceEstimates& nuis, double tau) {
  const auto& W = ds.W();
  const auto& Y = ds.Y();
  ScoreVector s;
  s.estimand = Estimand::ate();
  s.tau_used = tau;
  s.phi = (W.array() * (Y - nuis.mu1hat).array() / nuis.ehat.array() -
           (1.0 - W.array()) * (Y - nuis.mu0hat).array() / (1.0 - nuis.ehat.array()) +
           nuis.mu1hat.array() - nuis.mu0hat.array() - tau)
              .matrix();
  return s;
}

ScoreVector efficient_score_att(const Dataset& ds, const NuisanceEstimates& nuis, double tau_t) {
  const auto& W = ds.W();
  const Eigen::ArrayXd r = (ds.Y() - nuis.mu0hat).array();
  const Eigen::ArrayXd e = nuis.ehat.array();
  const double p = nuis.phat;
  ScoreVector s;
  s.estimand = Estimand::att();
  s.tau_used = tau_t;
  s.phi = (W.array() / p * (r - tau_t) - (1.0 - W.array()) * e / (p * (1.0 - e)) * r).matrix();
  return s;
}

double solve_score_ate(const Dataset& ds, const NuisanceEstimates& nuis) {
  return efficient_score_ate(ds, nuis, 0.0).phi.mean();
}

double solve_score_att(const Dataset& ds, const NuisanceEstimates& nuis) {
  ds.require_both_arms();
  const auto& W = ds.W();
  const Eigen::ArrayXd r = (ds.Y() - nuis.mu0hat).array();
  const Eigen::ArrayXd e = nuis.ehat.array();
  const double treated = (W.array() * r).sum();
  const double control = ((1.0 - W.array()) * e / (1.0 - e) * r).sum();
  return (treated - control) / static_cast<double>(ds.n_treated());
}

PointEstimate estimate_naive(const Dataset& ds, Estimand estimand) {
  ds.require_both_arms();
  double st = 0.0, sc = 0.0;
  std::vector<double> yt, yc;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double y = ds.Y()[static_cast<Eigen::Index>(i)];
    (ds.treated(i) ? yt : yc).push_back(y);
    (ds.treated(i) ? st : sc) += y;
  }
  PointEstimate pe;
  pe.method = Method::naive;
  pe.value = st / static_cast<double>(yt.size()) - sc / static_cast<double>(yc.size());
  const double vt = sample_sd(yt), vc = sample_sd(yc);
  pe.se = std::sqrt(vt * vt / static_cast<double>(yt.size()) + vc * vc / static_cast<double>(yc.size()));
  pe.n_used = ds.n();
  note_constant_effect(pe, estimand);
  return pe;
}

PointEstimate ols_on_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& W,
                            const Eigen::VectorXd& Y, bool ridge_fallback) {
  const auto n = Y.size();
  Eigen::MatrixXd Z(n, X.cols() + 1);
  Z.col(0) = W;
  Z.rightCols(X.cols()) = X;
  const linmod::LinearFit fit = linmod::fit_ols(Z, Y, true, ridge_fallback);

  PointEstimate pe;
  pe.method = Method::ols;
  pe.value = fit.coefficients[0];
  pe.n_used = static_cast<std::size_t>(n);
  if (fit.ridge_fallback) pe.notes.push_back("singular design: ridge fallback 1e-6 engaged");

  Eigen::MatrixXd D(n, Z.cols() + 1);
  D.col(0).setOnes();
  D.rightCols(Z.cols()) = Z;
  const Eigen::VectorXd resid = Y - fit.predict(Z);
  const auto p = D.cols();
  if (n > p) {
    Eigen::MatrixXd gram = D.transpose() * D;
    if (fit.ridge_fallback) {
      const double ridge = 1e-6 * gram.diagonal().maxCoeff();
      gram.diagonal().tail(p - 1).array() += ridge;
    }
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(p);
    unit[1] = 1.0;
    const Eigen::VectorXd col = gram.ldlt().solve(unit);
    const double sigma2 = resid.squaredNorm() / static_cast<double>(n - p);
    pe.se = std::sqrt(std::max(0.0, sigma2 * col[1]));
  }
  return pe;
}

PointEstimate estimate_ols(const Dataset& ds, Estimand estimand) {
  ds.require_both_arms();
  PointEstimate pe = ols_on_design(ds.X(), ds.W(), ds.Y(), true);
  note_constant_effect(pe, estimand);
  return pe;
}

DseResult estimate_dse_detail(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed) {
  ds.require_both_arms();
  const linmod::CvOptions opts = cv_for(cfg, ds.n());
  linmod::CvOptions w_opts = opts;
  w_opts.folds = std::max(2, std::min<int>(opts.folds, static_cast<int>(std::min(ds.n_treated(), ds.n_control()))));
  const auto fy = linmod::fit_cv(ds.X(), ds.Y(), linmod::Family::gaussian, 1.0, cfg.linmod.selection_rule,
                                 derive_seed(seed, stream::nuisance, 0), opts);
  const auto fw = linmod::fit_cv(ds.X(), ds.W(), linmod::Family::binomial, 1.0, cfg.linmod.selection_rule,
                                 derive_seed(seed, stream::nuisance, 1), w_opts);
  DseResult r;
  r.selected_outcome = fy.active_set();
  r.selected_treatment = fw.active_set();
  std::vector<std::size_t> u = r.selected_outcome;
  u.insert(u.end(), r.selected_treatment.begin(), r.selected_treatment.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  r.selected_union = u;
  const Eigen::MatrixXd Xs = ds.X()(Eigen::all, u);
  r.estimate = ols_on_design(Xs, ds.W(), ds.Y(), true);
  r.estimate.method = Method::dse;
  r.ridge_fallback = !r.estimate.notes.empty();
  r.estimate.notes.push_back("selected " + std::to_string(u.size()) + " covariate(s)");
  return r;
}

PointEstimate estimate_dse(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed, Estimand estimand) {
  PointEstimate pe = estimate_dse_detail(ds, cfg, seed).estimate;
  note_constant_effect(pe, estimand);
  return pe;
}

double arbe_from_components(const Dataset& ds, const linmod::LinearFit& outcome,
                            const Eigen::VectorXd& lambda) {
  ds.require_both_arms();
  if (static_cast<std::size_t>(lambda.size()) != ds.n()) {
    throw Error(ErrorCode::ShapeMismatch, "lambda length differs from n");
  }
  const Eigen::VectorXd pred = outcome.predict(ds.X());
  double treated_y = 0.0, treated_pred = 0.0, correction = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (ds.treated(i)) {
      treated_y += ds.Y()[ii];
      treated_pred += pred[ii];
    } else {
      correction += lambda[ii] * (ds.Y()[ii] - pred[ii]);
    }
  }
  const double nt = static_cast<double>(ds.n_treated());
  return treated_y / nt - (treated_pred / nt + correction);
}

ArbeResult estimate_arbe_detail(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                                Estimand estimand) {
  ds.require_both_arms();
  require_ate_or_att(estimand, "arbe");
  ArbeResult r;
  PointEstimate& pe = r.estimate;
  pe.method = Method::arbe;
  pe.estimand = estimand;
  pe.n_used = ds.n();
  if (estimand.kind == Estimand::Kind::ATT) {
    ArmAdjustment c = adjust_arm(ds, cfg, seed, 0, balance::Target::treated_means);
    pe.value = arbe_from_components(ds, c.outcome, c.weights.lambda);
    const Eigen::VectorXd resid = ds.Y() - c.outcome.predict(ds.X());
    std::vector<double> rt;
    double control_var = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (ds.treated(i)) rt.push_back(resid[ii]);
      else control_var += c.weights.lambda[ii] * c.weights.lambda[ii] * resid[ii] * resid[ii];
    }
    const double sd_t = sample_sd(rt);
    pe.se = std::sqrt(sd_t * sd_t / static_cast<double>(rt.size()) + control_var);
    note_balance(pe, c.weights);
    r.balance.push_back(std::move(c.weights));
    return r;
  }
  double adjusted[2] = {0.0, 0.0};
  double var = 0.0;
  const Eigen::VectorXd xbar = ds.X().colwise().mean().transpose();
  for (int arm = 0; arm < 2; ++arm) {
    ArmAdjustment a = adjust_arm(ds, cfg, seed, arm, balance::Target::pooled_means);
    const Eigen::VectorXd resid = ds.Y() - a.outcome.predict(ds.X());
    double corr = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (ds.treated(i) != (arm == 1)) continue;
      const double l = a.weights.lambda[static_cast<Eigen::Index>(i)];
      const double e = resid[static_cast<Eigen::Index>(i)];
      corr += l * e;
      var += l * l * e * e;
    }
    adjusted[arm] = a.outcome.intercept + xbar.dot(a.outcome.coefficients) + corr;
    note_balance(pe, a.weights);
    r.balance.push_back(std::move(a.weights));
  }
  pe.value = adjusted[1] - adjusted[0];
  pe.se = std::sqrt(var);
  return r;
}

PointEstimate estimate_arbe(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed, Estimand estimand) {
  return estimate_arbe_detail(ds, cfg, seed, estimand).estimate;
}

PointEstimate dre_from_nuisances(const Dataset& ds, const NuisanceEstimates& nuis, Estimand estimand) {
  ds.require_both_arms();
  require_ate_or_att(estimand, "dre");
  PointEstimate pe;
  pe.method = Method::dre;
  pe.estimand = estimand;
  pe.n_used = ds.n();
  const double n = static_cast<double>(ds.n());
  if (estimand.kind == Estimand::Kind::ATE) {
    pe.value = solve_score_ate(ds, nuis);
    pe.se = sample_sd(efficient_score_ate(ds, nuis, pe.value).phi) / std::sqrt(n);
  } else {
    pe.value = solve_score_att(ds, nuis);
    pe.se = sample_sd(efficient_score_att(ds, nuis, pe.value).phi) / std::sqrt(n);
  }
  return pe;
}

PointEstimate estimate_dre(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed, Estimand estimand) {
  ds.require_both_arms();
  require_ate_or_att(estimand, "dre");
  const NuisanceEstimates nuis = nuisance::fit_in_sample(ds, cfg, seed);
  return dre_from_nuisances(ds, nuis, estimand);
}

std::vector<int> dml_folds(const Dataset& ds, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "dml_folds must be at least 2");
  if (ds.n() < static_cast<std::size_t>(folds)) {
    throw Error(ErrorCode::FoldArmEmpty, "fewer units than folds");
  }
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    auto labels = linmod::fold_assignment(ds.n(), folds, derive_seed(seed, stream::dml_folds, attempt), &ds.W());
    std::vector<int> t(static_cast<std::size_t>(folds), 0), c(static_cast<std::size_t>(folds), 0);
    for (std::size_t i = 0; i < ds.n(); ++i) ++(ds.treated(i) ? t : c)[static_cast<std::size_t>(labels[i])];
    bool ok = true;
    for (int k = 0; k < folds; ++k) ok = ok && t[static_cast<std::size_t>(k)] > 0 && c[static_cast<std::size_t>(k)] > 0;
    if (ok) return labels;
  }
  throw Error(ErrorCode::FoldArmEmpty, "no fold assignment gives every fold both arms");
}

DmleResult estimate_dmle_detail(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed, Estimand estimand) {
  ds.require_both_arms();
  require_ate_or_att(estimand, "dmle");
  const int K = cfg.dml_folds;
  DmleResult r;
  r.fold_of_unit = dml_folds(ds, K, seed);
  r.fold_estimates.assign(static_cast<std::size_t>(K), 0.0);
  std::vector<Eigen::VectorXd> scores(static_cast<std::size_t>(K));
  std::vector<std::vector<std::size_t>> held(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < ds.n(); ++i) held[static_cast<std::size_t>(r.fold_of_unit[i])].push_back(i);

  parallel_for(static_cast<std::size_t>(K), [&](std::size_t k) {
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      if (static_cast<std::size_t>(r.fold_of_unit[i]) != k) train.push_back(i);
    }
    const Dataset tr = ds.subset(train);
    const Dataset te = ds.subset(held[k]);
    const auto model = nuisance::fit_models(tr, cfg, derive_seed(seed, stream::nuisance, 100 + k));
    const NuisanceEstimates nuis = nuisance::predict(model, te, cfg.clip_eta);
    if (estimand.kind == Estimand::Kind::ATE) {
      r.fold_estimates[k] = solve_score_ate(te, nuis);
      scores[k] = efficient_score_ate(te, nuis, r.fold_estimates[k]).phi;
    } else {
      r.fold_estimates[k] = solve_score_att(te, nuis);
      scores[k] = efficient_score_att(te, nuis, r.fold_estimates[k]).phi;
    }
  });

  PointEstimate& pe = r.estimate;
  pe.method = Method::dmle;
  pe.estimand = estimand;
  pe.n_used = ds.n();
  double sum = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
    sum += r.fold_estimates[k];
    sq += scores[k].squaredNorm();
  }
  const double n = static_cast<double>(ds.n());
  pe.value = sum / static_cast<double>(K);
  pe.se = std::sqrt(sq / n) / std::sqrt(n);
  return r;
}

PointEstimate estimate_dmle(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed, Estimand estimand) {
  return estimate_dmle_detail(ds, cfg, seed, estimand).estimate;
}

PointEstimate ipw_estimate(const Dataset& ds, const NuisanceEstimates& nuis, bool hajek) {
  ds.require_both_arms();
  const Eigen::ArrayXd W = ds.W().array();
  const Eigen::ArrayXd Y = ds.Y().array();
  const Eigen::ArrayXd e = nuis.ehat.array();
  const Eigen::ArrayXd a = W / e;
  const Eigen::ArrayXd b = (1.0 - W) / (1.0 - e);
  PointEstimate pe;
  pe.method = Method::naive;
  pe.estimand = Estimand::ate();
  pe.n_used = ds.n();
  pe.notes.push_back(hajek ? "inverse propensity weighting (hajek)" : "inverse propensity weighting");
  const Eigen::ArrayXd terms = a * Y - b * Y;
  if (hajek) {
    pe.value = (a * Y).sum() / a.sum() - (b * Y).sum() / b.sum();
  } else {
    pe.value = terms.mean();
  }
  pe.se = sample_sd(Eigen::VectorXd(terms.matrix())) / std::sqrt(static_cast<double>(ds.n()));
  return pe;
}

double weighted_effect(const NuisanceEstimates& nuis, const Estimand& estimand) {
  const Eigen::VectorXd w = weight_function(estimand, nuis.ehat);
  const double total = w.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyAfterTrim, "estimand weights sum to zero");
  return w.dot(nuis.mu1hat - nuis.mu0hat) / total;
}

VarianceBound weighted_variance_bound(const NuisanceEstimates& nuis, const Eigen::VectorXd& omega,
                                      double tau_w, const Estimand& estimand) {
  if (!nuis.sigma2_0hat || !nuis.sigma2_1hat) {
    throw Error(ErrorCode::MissingVarianceEstimates, "weighted bound needs sigma2 estimates");
  }
  if (omega.size() != nuis.ehat.size()) throw Error(ErrorCode::ShapeMismatch, "weights misaligned");
  const Eigen::ArrayXd w2 = omega.array().square();
  const Eigen::ArrayXd e = nuis.ehat.array();
  const Eigen::ArrayXd cate = (nuis.mu1hat - nuis.mu0hat).array() - tau_w;
  const Eigen::ArrayXd raw =
      w2 * (nuis.sigma2_1hat->array() / e + nuis.sigma2_0hat->array() / (1.0 - e) + cate.square());
  const double mean_w2 = w2.mean();
  const double mean_w = omega.mean();
  if (!(mean_w2 > 0.0)) throw Error(ErrorCode::EmptyAfterTrim, "estimand weights are all zero");
  VarianceBound vb;
  vb.estimand = estimand;
  vb.per_unit_terms = (raw / mean_w2).matrix();
  vb.value = vb.per_unit_terms.mean();
  vb.value_mean_weight_normalized = raw.mean() / (mean_w * mean_w);
  return vb;
}

VarianceBound variance_bound(const Dataset& ds, const NuisanceEstimates& nuis, const Estimand& estimand,
                             double tau_hat) {
  switch (estimand.kind) {
    case Estimand::Kind::ATE:
    case Estimand::Kind::ATT: {
      const ScoreVector s = estimand.kind == Estimand::Kind::ATE ? efficient_score_ate(ds, nuis, tau_hat)
                                                                 : efficient_score_att(ds, nuis, tau_hat);
      VarianceBound vb;
      vb.estimand = estimand;
      vb.per_unit_terms = s.phi.array().square().matrix();
      vb.value = vb.per_unit_terms.mean();
      vb.value_mean_weight_normalized = vb.value;
      return vb;
    }
    case Estimand::Kind::OverlapWeighted:
    case Estimand::Kind::Trimmed:
      return weighted_variance_bound(nuis, weight_function(estimand, nuis.ehat), tau_hat, estimand);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimand");
}

PointEstimate estimate(Method method, const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                       Estimand estimand) {
  const std::uint64_t s = derive_seed(seed, stream::estimator, static_cast<std::uint64_t>(method));
  switch (method) {
    case Method::naive: return estimate_naive(ds, estimand);
    case Method::ols: return estimate_ols(ds, estimand);
    case Method::dse: return estimate_dse(ds, cfg, s, estimand);
    case Method::arbe: return estimate_arbe(ds, cfg, s, estimand);
    case Method::dre: return estimate_dre(ds, cfg, s, estimand);
    case Method::dmle: return estimate_dmle(ds, cfg, s, estimand);
  }
  throw Error(ErrorCode::UnknownMethod, "unknown method");
}

EstimatorFn make_estimator(Method method, const RunConfig& cfg, Estimand estimand) {
  return [method, cfg, estimand](const Dataset& ds, std::uint64_t seed) {
    return estimate(method, ds, cfg, seed, estimand);
  };
}

PointEstimate trimmed_estimate(const Dataset& ds, const NuisanceEstimates& nuis, double alpha,
                               const EstimatorFn& inner, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 0.5)");
  if (static_cast<std::size_t>(nuis.ehat.size()) != ds.n()) {
    throw Error(ErrorCode::ShapeMismatch, "nuisances misaligned with the dataset");
  }
  std::vector<std::size_t> keep;
  std::size_t treated = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double e = nuis.ehat[static_cast<Eigen::Index>(i)];
    if (e > alpha && e < 1.0 - alpha) {
      keep.push_back(i);
      treated += ds.treated(i) ? 1 : 0;
    }
  }
  if (keep.size() < 2 || treated == 0 || treated == keep.size()) {
    throw Error(ErrorCode::EmptyAfterTrim, "trimming leaves an arm empty");
  }
  PointEstimate pe = inner(keep.size() == ds.n() ? ds : ds.subset(keep), seed);
  pe.n_used = keep.size();
  pe.notes.push_back("trimmed to propensities in (" + std::to_string(alpha) + ", " +
                     std::to_string(1.0 - alpha) + ")");
  return pe;
}

}  // namespace atekit::estimators

#include "atekit/nuisance.hpp"

#include <algorithm>

#include "atekit/rng.hpp"

namespace atekit::nuisance {

namespace {

enum Component : std::uint64_t { kE = 0, kMu0 = 1, kMu1 = 2, kS0 = 3, kS1 = 4 };

Eigen::VectorXd arm_training_prediction(const Predictor& p, const Dataset& ds,
                                        const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out = p.predict(ds.X());
  if (!p.forest) return out;
  const Eigen::MatrixXd Xa = ds.X()(rows, Eigen::all);
  const Eigen::VectorXd oob = p.predict_training(Xa);
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Eigen::Index>(rows[r])] = oob[static_cast<Eigen::Index>(r)];
  return out;
}

}  // namespace

Eigen::VectorXd Predictor::predict(const Eigen::MatrixXd& X) const {
  if (linear) return linear->predict(X);
  if (forest) return forest->predict(X);
  return Eigen::VectorXd::Constant(X.rows(), constant);
}

Eigen::VectorXd Predictor::predict_training(const Eigen::MatrixXd& X_train) const {
  if (forest) return forest::predict_oob(*forest, X_train).values;
  return predict(X_train);
}

Predictor fit_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool binary,
                        const RunConfig& cfg, std::uint64_t seed) {
  Predictor p;
  const auto n = y.size();
  if (n == 0) throw Error(ErrorCode::EmptyArm, "cannot fit a nuisance model on no rows");
  if (n == 1) {
    p.constant = y[0];
    return p;
  }
  if (cfg.nuisance_family == NuisanceFamily::forest) {
    p.forest = forest::fit_forest(X, y, forest::ForestParams::from(cfg.forest), seed);
    return p;
  }
  linmod::CvOptions opts = linmod::cv_options(cfg.linmod);
  opts.folds = std::min<int>(opts.folds, static_cast<int>(n));
  if (binary) {
    const double treated = (y.array() > 0.5).cast<double>().sum();
    if (treated == 0.0 || treated == static_cast<double>(n)) {
      throw Error(ErrorCode::SingleClass, "propensity model needs both arms");
    }
    opts.folds = std::min<int>(opts.folds, static_cast<int>(std::min<double>(treated, static_cast<double>(n) - treated)));
    opts.folds = std::max(opts.folds, 2);
    p.linear = linmod::fit_cv(X, y, linmod::Family::binomial, 1.0, cfg.linmod.prediction_rule, seed, opts);
  } else {
    p.linear = linmod::fit_cv(X, y, linmod::Family::gaussian, cfg.linmod.enet_mix,
                              cfg.linmod.prediction_rule, seed, opts);
  }
  return p;
}

NuisanceModel fit_models(const Dataset& train, const RunConfig& cfg, std::uint64_t seed,
                         bool with_variance) {
  train.require_both_arms();
  NuisanceModel m;
  m.e = fit_predictor(train.X(), train.W(), true, cfg, derive_seed(seed, stream::nuisance, kE));
  for (int arm = 0; arm < 2; ++arm) {
    const auto rows = train.arm_indices(arm == 1);
    const Eigen::MatrixXd Xa = train.X()(rows, Eigen::all);
    const Eigen::VectorXd ya = train.Y()(rows);
    Predictor mu = fit_predictor(Xa, ya, false, cfg, derive_seed(seed, stream::nuisance, arm == 1 ? kMu1 : kMu0));
    if (with_variance) {
      const Eigen::VectorXd r2 = (ya - mu.predict_training(Xa)).array().square().matrix();
      Predictor s = fit_predictor(Xa, r2, false, cfg, derive_seed(seed, stream::nuisance, arm == 1 ? kS1 : kS0));
      (arm == 1 ? m.sigma2_1 : m.sigma2_0) = std::move(s);
    }
    (arm == 1 ? m.mu1 : m.mu0) = std::move(mu);
  }
  return m;
}

NuisanceEstimates predict(const NuisanceModel& model, const Dataset& target, double clip_eta) {
  std::optional<Eigen::VectorXd> s0, s1;
  if (model.sigma2_0) s0 = model.sigma2_0->predict(target.X()).cwiseMax(0.0);
  if (model.sigma2_1) s1 = model.sigma2_1->predict(target.X()).cwiseMax(0.0);
  return NuisanceEstimates::make(target, model.e.predict(target.X()), model.mu0.predict(target.X()),
                                 model.mu1.predict(target.X()), clip_eta, std::move(s0), std::move(s1));
}

NuisanceEstimates fit_in_sample(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                                bool with_variance) {
  const NuisanceModel m = fit_models(ds, cfg, seed, with_variance);
  const Eigen::VectorXd e = m.e.predict_training(ds.X());
  Eigen::VectorXd mu[2];
  std::optional<Eigen::VectorXd> s[2];
  for (int arm = 0; arm < 2; ++arm) {
    const auto rows = ds.arm_indices(arm == 1);
    mu[arm] = arm_training_prediction(arm == 1 ? m.mu1 : m.mu0, ds, rows);
    const auto& sp = arm == 1 ? m.sigma2_1 : m.sigma2_0;
    if (sp) s[arm] = arm_training_prediction(*sp, ds, rows).cwiseMax(0.0);
  }
  return NuisanceEstimates::make(ds, e, std::move(mu[0]), std::move(mu[1]), cfg.clip_eta,
                                 std::move(s[0]), std::move(s[1]));
}

}  // namespace atekit::nuisance

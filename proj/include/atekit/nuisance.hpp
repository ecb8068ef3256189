#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

#include "atekit/core.hpp"
#include "atekit/forest.hpp"
#include "atekit/linmod.hpp"

namespace atekit::nuisance {

/// One fitted regression: a linear model, a forest, or a constant.
struct Predictor {
  std::optional<linmod::LinearFit> linear;
  std::optional<forest::Forest> forest;
  double constant = 0.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
  /// Predictions for the rows the model was trained on; forests use
  /// out-of-bag averages.
  Eigen::VectorXd predict_training(const Eigen::MatrixXd& X_train) const;
};

/// Fits y on X with the configured family. Gaussian linear fits are
/// cross-validated elastic nets, binomial linear fits are cross-validated
/// L1 logistic regressions, both at the prediction penalty rule.
Predictor fit_predictor(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool binary,
                        const RunConfig& cfg, std::uint64_t seed);

struct NuisanceModel {
  Predictor e;
  Predictor mu0;
  Predictor mu1;
  std::optional<Predictor> sigma2_0;
  std::optional<Predictor> sigma2_1;
};

/// Fits e on the full sample and mu_w within arm w. With variances, the
/// squared in-sample residuals of arm w are regressed on X within that arm.
NuisanceModel fit_models(const Dataset& train, const RunConfig& cfg, std::uint64_t seed,
                         bool with_variance = false);

/// Out-of-sample nuisances for the rows of target.
NuisanceEstimates predict(const NuisanceModel& model, const Dataset& target, double clip_eta);

/// Fits and predicts on the same sample. Forest predictions of training rows
/// are out-of-bag (units in the other arm get the full-forest prediction).
NuisanceEstimates fit_in_sample(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                                bool with_variance = false);

}  // namespace atekit::nuisance

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "atekit/balance.hpp"
#include "atekit/core.hpp"
#include "atekit/linmod.hpp"

namespace atekit::estimators {

struct ScoreVector {
  Eigen::VectorXd phi;
  Estimand estimand;
  double tau_used = 0.0;
};

struct VarianceBound {
  Estimand estimand;
  double value = 0.0;
  Eigen::VectorXd per_unit_terms;
  /// Weighted bounds only: the same terms normalized by 1/mean(w)^2
  /// instead of 1/mean(w^2). Equals value for the unweighted forms.
  double value_mean_weight_normalized = 0.0;
};

/// phi_i = W(Y - mu1)/e - (1 - W)(Y - mu0)/(1 - e) + mu1 - mu0 - tau.
ScoreVector efficient_score_ate(const Dataset& ds, const NuisanceEstimates& nuis, double tau);

/// phi'_i = (W/p)(Y - mu0 - tau_t) - ((1 - W) e / (p (1 - e)))(Y - mu0).
ScoreVector efficient_score_att(const Dataset& ds, const NuisanceEstimates& nuis, double tau_t);

/// Roots of mean(phi) = 0 and mean(phi') = 0.
double solve_score_ate(const Dataset& ds, const NuisanceEstimates& nuis);
double solve_score_att(const Dataset& ds, const NuisanceEstimates& nuis);

PointEstimate estimate_naive(const Dataset& ds, Estimand estimand = Estimand::ate());

/// Coefficient on W from least squares of Y on (1, W, X). X may have zero
/// columns. With ridge_fallback a singular design gets a 1e-6 ridge and a note.
PointEstimate ols_on_design(const Eigen::MatrixXd& X, const Eigen::VectorXd& W,
                            const Eigen::VectorXd& Y, bool ridge_fallback);
PointEstimate estimate_ols(const Dataset& ds, Estimand estimand = Estimand::ate());

struct DseResult {
  PointEstimate estimate;
  std::vector<std::size_t> selected_outcome;
  std::vector<std::size_t> selected_treatment;
  std::vector<std::size_t> selected_union;
  bool ridge_fallback = false;
};

/// Double selection: L1 outcome and L1 logistic treatment models at the
/// selection penalty rule, then OLS of Y on W and the union of the supports.
DseResult estimate_dse_detail(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed);
PointEstimate estimate_dse(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                           Estimand estimand = Estimand::ate());

/// Residual-balancing combination for the effect on the treated:
///   mean_t(Y) - [mean_t(X)'b + b0 + sum_controls lambda_i (Y_i - b0 - X_i'b)].
/// outcome is a model of the control outcome; lambda is full length and
/// zero on treated units.
double arbe_from_components(const Dataset& ds, const linmod::LinearFit& outcome,
                            const Eigen::VectorXd& lambda);

struct ArbeResult {
  PointEstimate estimate;
  std::vector<balance::BalanceSolution> balance;  // one per balanced arm
};

/// ATT: controls are balanced toward treated means. ATE: each arm is balanced
/// toward pooled means and the two adjusted arm means are differenced.
ArbeResult estimate_arbe_detail(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                                Estimand estimand = Estimand::att());
PointEstimate estimate_arbe(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                            Estimand estimand = Estimand::att());

/// Score-equation estimate from given nuisances (ATE or ATT).
PointEstimate dre_from_nuisances(const Dataset& ds, const NuisanceEstimates& nuis,
                                 Estimand estimand = Estimand::ate());
PointEstimate estimate_dre(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                           Estimand estimand = Estimand::ate());

struct DmleResult {
  PointEstimate estimate;
  std::vector<double> fold_estimates;
  std::vector<int> fold_of_unit;
};

/// Stratified K-fold fold labels; every fold holds both arms. Retries up to
/// 100 assignments before throwing FoldArmEmpty.
std::vector<int> dml_folds(const Dataset& ds, int folds, std::uint64_t seed);

DmleResult estimate_dmle_detail(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                                Estimand estimand = Estimand::ate());
PointEstimate estimate_dmle(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                            Estimand estimand = Estimand::ate());

/// Horvitz-Thompson mean(WY/e - (1 - W)Y/(1 - e)), or the weight-normalized
/// (Hajek) version.
PointEstimate ipw_estimate(const Dataset& ds, const NuisanceEstimates& nuis, bool hajek = false);

/// Plug-in sum(w (mu1 - mu0)) / sum(w) for the weights of estimand.
double weighted_effect(const NuisanceEstimates& nuis, const Estimand& estimand);

/// ATE: mean(phi^2). ATT: mean(phi'^2). Overlap-weighted and trimmed use
/// weighted_variance_bound with the estimand's weights.
VarianceBound variance_bound(const Dataset& ds, const NuisanceEstimates& nuis,
                             const Estimand& estimand, double tau_hat);

/// Terms w^2 s1/e + w^2 s0/(1 - e) + w^2 (mu1 - mu0 - tau)^2 scaled by
/// 1/mean(w^2). Throws MissingVarianceEstimates without sigma2 estimates.
VarianceBound weighted_variance_bound(const NuisanceEstimates& nuis, const Eigen::VectorXd& omega,
                                      double tau_w, const Estimand& estimand);

/// Runs one method with a fixed seed.
PointEstimate estimate(Method method, const Dataset& ds, const RunConfig& cfg, std::uint64_t seed,
                       Estimand estimand);

using EstimatorFn = std::function<PointEstimate(const Dataset&, std::uint64_t)>;
EstimatorFn make_estimator(Method method, const RunConfig& cfg, Estimand estimand);

/// Drops units with ehat outside (alpha, 1 - alpha) and reruns the estimator
/// on the rest (nuisances refit there). Throws EmptyAfterTrim when an arm
/// empties or fewer than two units remain.
PointEstimate trimmed_estimate(const Dataset& ds, const NuisanceEstimates& nuis, double alpha,
                               const EstimatorFn& inner, std::uint64_t seed);

}  // namespace atekit::estimators

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "atekit/core.hpp"

namespace atekit::linmod {

enum class Family { gaussian, binomial };

/// Column centering/scaling used inside the penalized solvers (1/n variance).
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  std::vector<bool> constant;

  static Standardization of(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

/// Intercept plus slopes on the ORIGINAL covariate scale.
///
/// Logistic fits use e(x) = 1 / (1 + exp(-(intercept + x'b))).
struct LinearFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  Family family = Family::gaussian;
  double lambda = 0.0;
  double mix = 1.0;
  Standardization standardization;

  bool converged = true;
  bool ridge_fallback = false;
  int sweeps = 0;
  /// Penalized objective (standardized scale) after each sweep / outer step.
  std::vector<double> objective_trace;

  Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X) const;
  /// Fitted means; probabilities for the binomial family.
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
  /// Indices of non-zero slopes.
  std::vector<std::size_t> active_set() const;
  /// Slopes on the standardized scale (what the penalty acts on).
  Eigen::VectorXd standardized_coefficients() const;
};

struct SolverOptions {
  int max_sweeps = 10000;
  double tol = 1e-7;
};

/// Least squares of y on [1, X] (or X alone). Throws RankDeficient when a
/// QR pivot falls below 1e-10 relative to the largest, unless ridge_fallback
/// is set, in which case a 1e-6 ridge is added and the fit is flagged.
LinearFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool intercept = true,
                  bool ridge_fallback = false);

/// Gaussian elastic net by cyclic coordinate descent on standardized columns:
///   (1/2n) RSS + lambda * (mix |b|_1 + (1 - mix)/2 |b|_2^2).
/// Stops once the largest coefficient change AND the stationarity residual
/// are below opts.tol; otherwise returns the last iterate with converged=false.
LinearFit fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          double mix, const SolverOptions& opts = {});

/// Penalized logistic regression (mean negative log-likelihood + the same
/// penalty) by proximal Newton: a weighted coordinate-descent inner solve
/// with a monotone backtracking line search. Throws SingleClass if w has one
/// class and SeparationDetected when lambda = 0 and a standardized slope
/// passes magnitude 30.
LinearFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, double lambda,
                       double mix, const SolverOptions& opts = {});

/// Fits along a lambda grid with warm starts; failed points are nullopt.
std::vector<std::optional<LinearFit>> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                               Family family, const std::vector<double>& lambdas,
                                               double mix, const SolverOptions& opts = {});

/// Smallest lambda at which every slope is zero (mix floored at 1e-3).
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, double mix);

/// Descending log-spaced grid from lambda_max to min_ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, int size, double min_ratio);

/// Seeded fold labels in [0, folds). With strata, each stratum is dealt
/// round-robin after shuffling so every fold gets a share of each class.
std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed,
                                 const Eigen::VectorXd* strata = nullptr);

struct CvResult {
  std::vector<double> lambda_grid;
  std::vector<double> cv_error;  // NaN where the point failed
  std::vector<double> cv_se;
  std::vector<bool> failed;
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
  std::size_t index_min = 0;
  std::size_t index_1se = 0;

  double select(LambdaRule rule) const { return rule == LambdaRule::min ? lambda_min : lambda_1se; }
};

struct CvOptions {
  int folds = 5;
  int grid_size = 100;
  double min_ratio = 1e-4;
  SolverOptions solver;
};

/// K-fold cross-validation over a lambda grid. Loss is MSE (gaussian) or
/// mean negative log-likelihood (binomial). Deterministic given seed.
/// Gaussian paths are fit to y divided by its standard deviation, so the
/// grid is on that scale and selection is equivariant to rescaling y.
CvResult cv_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, double mix,
                   std::uint64_t seed, const CvOptions& opts = {});

/// cv_select followed by a full-data fit at the chosen lambda. When
/// lambda_max is zero the unpenalized fit is returned.
LinearFit fit_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, double mix,
                 LambdaRule rule, std::uint64_t seed, const CvOptions& opts = {});

CvOptions cv_options(const LinmodConfig& cfg);

/// Mean negative log-likelihood of probabilities p for labels w.
double binomial_deviance(const Eigen::VectorXd& w, const Eigen::VectorXd& p);

}  // namespace atekit::linmod

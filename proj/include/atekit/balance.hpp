#pragma once

#include <Eigen/Dense>

#include <vector>

#include "atekit/core.hpp"

namespace atekit::balance {

enum class Target { treated_means, pooled_means };

struct BalanceOptions {
  double zeta = 0.5;
  int max_iter = 50000;
  double tol = 1e-6;

  static BalanceOptions from(const BalanceConfig& cfg) { return {cfg.zeta, cfg.max_iter, cfg.tol}; }
};

/// Approximate balancing weights over one reference arm.
///
/// lambda has one entry per unit and is zero outside the reference arm.
/// imbalance_j = (sum_i lambda_i x_ij - target_j) / scale_j with scale_j the
/// reference-arm standard deviation; columns that are constant on the
/// reference arm are dropped from the objective and their imbalance is
/// reported unscaled.
struct BalanceSolution {
  Eigen::VectorXd lambda;
  Eigen::VectorXd imbalance;
  Eigen::VectorXd scale;
  double objective = 0.0;
  double duality_gap = 0.0;
  bool converged = false;
  int iterations = 0;
  int reference_arm = 0;
  std::vector<double> objective_trace;
  std::vector<std::size_t> dropped_columns;
};

/// Minimizes zeta |lambda|_2^2 + (1 - zeta) |imbalance|_inf^2 over the simplex
/// on the reference arm.
///
/// The solver runs accelerated proximal gradient ascent on the dual, whose
/// variables live in covariate space; each dual point maps to primal weights
/// by a simplex projection. The primal iterate moves to the best point on the
/// segment toward that candidate, so the reported objective never increases,
/// and iteration stops once the duality gap falls below tol.
///
/// Columns are processed in a canonical (content-sorted) order, so permuting
/// the columns of X leaves lambda bitwise unchanged.
BalanceSolution solve_balancing_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& W,
                                        Target target, int reference_arm = 0,
                                        const BalanceOptions& opts = {});

/// The objective above, evaluated for a full-length weight vector.
double balance_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& W, Target target,
                         int reference_arm, double zeta, const Eigen::VectorXd& lambda);

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Weighted difference in means
///   sum(l W Y) / sum(l W) - sum(l (1 - W) Y) / sum(l (1 - W)).
/// Throws ZeroArmWeight if either arm carries no weight.
PointEstimate balancing_estimate(const Dataset& ds, const Eigen::VectorXd& lambda);

/// Full-length weights for the effect on the treated: 1/N_t on treated units,
/// the solution's control weights elsewhere.
Eigen::VectorXd att_weights(const BalanceSolution& sol, const Eigen::VectorXd& W);

}  // namespace atekit::balance

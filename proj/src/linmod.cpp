#include "atekit/linmod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "atekit/parallel.hpp"
#include "atekit/rng.hpp"

namespace atekit::linmod {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double penalty(const Eigen::VectorXd& beta, double lambda, double mix) {
  return lambda * (mix * beta.lpNorm<1>() + 0.5 * (1.0 - mix) * beta.squaredNorm());
}

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double z = std::exp(eta);
  return z / (1.0 + z);
}

// log(1 + exp(eta)) without overflow.
double log1pexp(double eta) {
  return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

// Largest violation of the elastic-net stationarity conditions given the
// smooth-part gradient of each standardized coefficient.
double kkt_violation(const Eigen::VectorXd& smooth_grad, const Eigen::VectorXd& beta,
                     const std::vector<bool>& constant, double lambda, double mix) {
  double worst = 0.0;
  const double l1 = lambda * mix;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (constant[static_cast<std::size_t>(j)]) continue;
    const double g = smooth_grad[j] + lambda * (1.0 - mix) * beta[j];
    const double v = beta[j] != 0.0 ? std::abs(g + l1 * (beta[j] > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(g) - l1);
    worst = std::max(worst, v);
  }
  return worst;
}

/// Standardized design shared by every lambda along a path.
struct Problem {
  Eigen::MatrixXd xs;
  Eigen::VectorXd y;
  Standardization std;
  Eigen::VectorXd col_sq;  // |xs_j|^2 / n
  double y_mean = 0.0;
  double y_scale = 1.0;    // 1/n standard deviation of y (gaussian tolerance scale)

  static Problem make(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw Error(ErrorCode::ShapeMismatch, "X and y row counts differ");
    if (y.size() < 2) throw Error(ErrorCode::TooFewRows, "need at least 2 rows to fit");
    Problem p;
    p.std = Standardization::of(X);
    p.xs = p.std.apply(X);
    p.y = y;
    const double n = static_cast<double>(y.size());
    p.col_sq = p.xs.colwise().squaredNorm().transpose() / n;
    p.y_mean = y.mean();
    p.y_scale = std::sqrt((y.array() - p.y_mean).square().sum() / n);
    return p;
  }
};

LinearFit finish(const Problem& p, Family family, double lambda, double mix, double intercept_std,
                 const Eigen::VectorXd& beta_std) {
  LinearFit fit;
  fit.family = family;
  fit.lambda = lambda;
  fit.mix = mix;
  fit.standardization = p.std;
  fit.coefficients = beta_std.array() / p.std.scale.array();
  fit.intercept = intercept_std - fit.coefficients.dot(p.std.mean);
  return fit;
}

// Cyclic coordinate descent for the gaussian problem. beta is the warm
// start and receives the solution. Returns a fit on the original scale.
LinearFit solve_gaussian(const Problem& p, double lambda, double mix, const SolverOptions& opts,
                         Eigen::VectorXd& beta) {
  const double n = static_cast<double>(p.y.size());
  const double tol = opts.tol * (p.y_scale > 0 ? p.y_scale : 1.0);
  const Eigen::Index d = p.xs.cols();
  Eigen::VectorXd resid = (p.y.array() - p.y_mean).matrix() - p.xs * beta;
  const double l1 = lambda * mix;
  const double l2 = lambda * (1.0 - mix);

  std::vector<double> trace;
  auto objective = [&] { return 0.5 * resid.squaredNorm() / n + penalty(beta, lambda, mix); };

  auto update = [&](Eigen::Index j) {
    if (p.std.constant[static_cast<std::size_t>(j)]) return 0.0;
    const double old = beta[j];
    const double z = p.col_sq[j] * old + p.xs.col(j).dot(resid) / n;
    const double fresh = soft_threshold(z, l1) / (p.col_sq[j] + l2);
    if (fresh == old) return 0.0;
    resid.noalias() -= (fresh - old) * p.xs.col(j);
    beta[j] = fresh;
    return std::abs(fresh - old);
  };

  bool converged = false;
  int sweeps = 0;
  while (sweeps < opts.max_sweeps) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) max_delta = std::max(max_delta, update(j));
    ++sweeps;
    trace.push_back(objective());
    if (max_delta < tol) {
      const Eigen::VectorXd grad = -(p.xs.transpose() * resid) / n;
      if (kkt_violation(grad, beta, p.std.constant, lambda, mix) < tol) {
        converged = true;
        break;
      }
    }
    // Iterate on the active set until it settles, then re-check everything.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (beta[j] != 0.0) active.push_back(j);
    }
    while (!active.empty() && sweeps < opts.max_sweeps) {
      double delta = 0.0;
      for (Eigen::Index j : active) delta = std::max(delta, update(j));
      ++sweeps;
      trace.push_back(objective());
      if (delta < tol) break;
    }
  }

  const double intercept_std = p.y_mean;
  LinearFit fit = finish(p, Family::gaussian, lambda, mix, intercept_std, beta);
  fit.converged = converged;
  fit.sweeps = sweeps;
  fit.objective_trace = std::move(trace);
  return fit;
}

double logistic_objective(const Problem& p, double b0, const Eigen::VectorXd& beta, double lambda,
                          double mix) {
  const Eigen::VectorXd eta = (p.xs * beta).array() + b0;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) nll += log1pexp(eta[i]) - p.y[i] * eta[i];
  return nll / static_cast<double>(eta.size()) + penalty(beta, lambda, mix);
}

LinearFit solve_logistic(const Problem& p, double lambda, double mix, const SolverOptions& opts,
                         double& b0, Eigen::VectorXd& beta) {
  const auto n_i = p.y.size();
  const double n = static_cast<double>(n_i);
  const Eigen::Index d = p.xs.cols();
  const double l1 = lambda * mix;
  const double l2 = lambda * (1.0 - mix);
  const double tol = opts.tol;
  const double inner_tol = tol * 1e-3;
  constexpr int max_outer = 100;
  constexpr double separation_limit = 30.0;

  std::vector<double> trace;
  double current = logistic_objective(p, b0, beta, lambda, mix);
  bool converged = false;
  int outer = 0;
  int total_sweeps = 0;

  Eigen::VectorXd eta(n_i), prob(n_i), v(n_i), resid(n_i);
  for (; outer < max_outer; ++outer) {
    eta = (p.xs * beta).array() + b0;
    for (Eigen::Index i = 0; i < n_i; ++i) {
      prob[i] = sigmoid(eta[i]);
      v[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-5);
    }
    // Stationarity of the current point.
    const Eigen::VectorXd gap = prob - p.y;
    const double g0 = std::abs(gap.sum() / n);
    const Eigen::VectorXd grad = p.xs.transpose() * gap / n;
    if (outer > 0 && std::max(g0, kkt_violation(grad, beta, p.std.constant, lambda, mix)) < tol) {
      converged = true;
      break;
    }

    // Weighted least-squares model around the current point.
    const Eigen::VectorXd z = eta.array() + gap.array() * -1.0 / v.array();
    double nb0 = b0;
    Eigen::VectorXd nbeta = beta;
    resid = z - eta;
    const double vsum = v.sum();
    Eigen::VectorXd wcol_sq(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      wcol_sq[j] = (p.xs.col(j).array().square() * v.array()).sum() / n;
    }
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep, ++total_sweeps) {
      double max_delta = 0.0;
      const double shift = (v.array() * resid.array()).sum() / vsum;
      if (shift != 0.0) {
        nb0 += shift;
        resid.array() -= shift;
        max_delta = std::abs(shift);
      }
      for (Eigen::Index j = 0; j < d; ++j) {
        if (p.std.constant[static_cast<std::size_t>(j)] || wcol_sq[j] <= 0.0) continue;
        const double old = nbeta[j];
        const double zj =
            wcol_sq[j] * old + (p.xs.col(j).array() * v.array() * resid.array()).sum() / n;
        const double fresh = soft_threshold(zj, l1) / (wcol_sq[j] + l2);
        if (fresh == old) continue;
        resid.noalias() -= (fresh - old) * p.xs.col(j);
        nbeta[j] = fresh;
        max_delta = std::max(max_delta, std::abs(fresh - old) * std::sqrt(wcol_sq[j]));
      }
      if (max_delta < inner_tol) break;
    }

    // Backtracking along the Newton direction; only accept non-increasing steps.
    const double db0 = nb0 - b0;
    const Eigen::VectorXd dbeta = nbeta - beta;
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 50; ++k, step *= 0.5) {
      const double cb0 = b0 + step * db0;
      const Eigen::VectorXd cbeta = beta + step * dbeta;
      const double f = logistic_objective(p, cb0, cbeta, lambda, mix);
      if (f <= current) {
        b0 = cb0;
        beta = cbeta;
        current = f;
        accepted = true;
        break;
      }
    }
    trace.push_back(current);
    if (lambda == 0.0 && beta.cwiseAbs().maxCoeff() > separation_limit) {
      throw Error(ErrorCode::SeparationDetected,
                  "logistic coefficients diverge without a penalty (perfect separation)");
    }
    if (!accepted) {
      // No descent possible from here: at the floating-point optimum.
      converged = true;
      ++outer;
      break;
    }
  }

  if (lambda == 0.0 && !converged) {
    eta = (p.xs * beta).array() + b0;
    double lo_treated = INFINITY, hi_control = -INFINITY;
    for (Eigen::Index i = 0; i < n_i; ++i) {
      if (p.y[i] > 0.5) lo_treated = std::min(lo_treated, eta[i]);
      else hi_control = std::max(hi_control, eta[i]);
    }
    if (lo_treated >= hi_control) {
      throw Error(ErrorCode::SeparationDetected,
                  "logistic coefficients diverge without a penalty (perfect separation)");
    }
  }

  LinearFit fit = finish(p, Family::binomial, lambda, mix, b0, beta);
  fit.converged = converged;
  fit.sweeps = outer;
  fit.objective_trace = std::move(trace);
  return fit;
}

void check_penalty(double lambda, double mix) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
  }
  if (!(mix >= 0.0 && mix <= 1.0)) throw Error(ErrorCode::InvalidArgument, "mix must lie in [0, 1]");
}

void check_binary(const Eigen::VectorXd& w) {
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) {
      has0 = true;
    } else if (w[i] == 1.0) {
      has1 = true;
    } else {
      throw Error(ErrorCode::InvalidArgument, "binomial response must be 0/1");
    }
  }
  if (!has0 || !has1) throw Error(ErrorCode::SingleClass, "binomial response has a single class");
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

// ---------------------------------------------------------------- Standardization

Standardization Standardization::of(const Eigen::MatrixXd& X) {
  Standardization s;
  const auto d = X.cols();
  const double n = static_cast<double>(X.rows());
  s.mean.resize(d);
  s.scale.resize(d);
  s.constant.assign(static_cast<std::size_t>(d), false);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double m = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - m).square().sum() / n);
    s.mean[j] = m;
    const bool flat = !(sd > 1e-10 * (1.0 + std::abs(m)));
    s.constant[static_cast<std::size_t>(j)] = flat;
    s.scale[j] = flat ? 1.0 : sd;
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (constant[static_cast<std::size_t>(j)]) {
      out.col(j).setZero();
    } else {
      out.col(j) = (X.col(j).array() - mean[j]) / scale[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------- LinearFit

Eigen::VectorXd LinearFit::linear_predictor(const Eigen::MatrixXd& X) const {
  return (X * coefficients).array() + intercept;
}

Eigen::VectorXd LinearFit::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd eta = linear_predictor(X);
  if (family == Family::binomial) eta = eta.unaryExpr([](double v) { return sigmoid(v); });
  return eta;
}

std::vector<std::size_t> LinearFit::active_set() const {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
    if (coefficients[j] != 0.0) out.push_back(static_cast<std::size_t>(j));
  }
  return out;
}

Eigen::VectorXd LinearFit::standardized_coefficients() const {
  if (standardization.scale.size() != coefficients.size()) return coefficients;
  return coefficients.array() * standardization.scale.array();
}

// ---------------------------------------------------------------- OLS

LinearFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool intercept,
                  bool ridge_fallback) {
  if (X.rows() != y.size()) throw Error(ErrorCode::ShapeMismatch, "X and y row counts differ");
  const Eigen::Index n = X.rows();
  const Eigen::Index offset = intercept ? 1 : 0;
  const Eigen::Index p = X.cols() + offset;
  if (p == 0) throw Error(ErrorCode::InvalidArgument, "no regressors");
  Eigen::MatrixXd A(n, p);
  if (intercept) A.col(0).setOnes();
  A.rightCols(X.cols()) = X;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  Eigen::VectorXd b;
  bool ridge = false;
  if (n < p || qr.rank() < p) {
    if (!ridge_fallback) {
      throw Error(ErrorCode::RankDeficient, "design matrix is singular (rank " +
                                                std::to_string(qr.rank()) + " < " +
                                                std::to_string(p) + ")");
    }
    Eigen::MatrixXd gram = A.transpose() * A;
    const double scale = std::max(gram.diagonal().maxCoeff(), 1.0);
    for (Eigen::Index j = offset; j < p; ++j) gram(j, j) += 1e-6 * scale;
    b = gram.ldlt().solve(A.transpose() * y);
    ridge = true;
  } else {
    b = qr.solve(y);
  }

  LinearFit fit;
  fit.family = Family::gaussian;
  fit.lambda = 0.0;
  fit.standardization = Standardization::of(X);
  fit.intercept = intercept ? b[0] : 0.0;
  fit.coefficients = b.tail(X.cols());
  fit.ridge_fallback = ridge;
  return fit;
}

// ---------------------------------------------------------------- penalized fits

LinearFit fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                          double mix, const SolverOptions& opts) {
  check_penalty(lambda, mix);
  const Problem p = Problem::make(X, y);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  return solve_gaussian(p, lambda, mix, opts, beta);
}

LinearFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& w, double lambda,
                       double mix, const SolverOptions& opts) {
  check_penalty(lambda, mix);
  check_binary(w);
  const Problem p = Problem::make(X, w);
  double b0 = logit(p.y_mean);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  return solve_logistic(p, lambda, mix, opts, b0, beta);
}

std::vector<std::optional<LinearFit>> fit_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                               Family family, const std::vector<double>& lambdas,
                                               double mix, const SolverOptions& opts) {
  if (family == Family::binomial) check_binary(y);
  const Problem p = Problem::make(X, y);
  std::vector<std::optional<LinearFit>> out(lambdas.size());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  double b0 = family == Family::binomial ? logit(p.y_mean) : 0.0;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    check_penalty(lambdas[k], mix);
    const Eigen::VectorXd beta_start = beta;
    const double b0_start = b0;
    try {
      out[k] = family == Family::gaussian ? solve_gaussian(p, lambdas[k], mix, opts, beta)
                                          : solve_logistic(p, lambdas[k], mix, opts, b0, beta);
    } catch (const Error&) {
      beta = beta_start;
      b0 = b0_start;
    }
  }
  return out;
}

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, double mix) {
  const Problem p = Problem::make(X, y);
  const double n = static_cast<double>(y.size());
  const Eigen::VectorXd centered = (p.y.array() - p.y_mean).matrix();
  const double g = (p.xs.transpose() * centered).cwiseAbs().maxCoeff() / n;
  (void)family;  // both families have the same null gradient: X's (y - ybar) / n
  // Slight inflation so coordinate descent rounds every slope to exactly zero.
  return g / std::max(mix, 1e-3) * (1.0 + 1e-10);
}

std::vector<double> lambda_grid(double lmax, int size, double min_ratio) {
  std::vector<double> grid(static_cast<std::size_t>(size));
  if (size == 1) {
    grid[0] = lmax;
    return grid;
  }
  const double log_hi = std::log(lmax);
  const double log_lo = std::log(lmax * min_ratio);
  for (int k = 0; k < size; ++k) {
    grid[static_cast<std::size_t>(k)] =
        std::exp(log_hi + (log_lo - log_hi) * static_cast<double>(k) / (size - 1));
  }
  grid.front() = lmax;
  return grid;
}

std::vector<int> fold_assignment(std::size_t n, int folds, std::uint64_t seed,
                                 const Eigen::VectorXd* strata) {
  if (folds < 2 || static_cast<std::size_t>(folds) > n) {
    throw Error(ErrorCode::InvalidArgument, "folds must lie between 2 and n");
  }
  Rng rng = make_rng(seed, stream::cv_folds);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  if (strata) {
    std::stable_partition(order.begin(), order.end(),
                          [&](std::size_t i) { return (*strata)[static_cast<Eigen::Index>(i)] < 0.5; });
  }
  std::vector<int> label(n);
  for (std::size_t k = 0; k < n; ++k) label[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return label;
}

double binomial_deviance(const Eigen::VectorXd& w, const Eigen::VectorXd& prob) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double q = std::clamp(prob[i], 1e-15, 1.0 - 1e-15);
    s -= w[i] * std::log(q) + (1.0 - w[i]) * std::log1p(-q);
  }
  return s / static_cast<double>(w.size());
}

namespace {

// 1/n standard deviation of y, or 1 when y is constant.
double response_scale(const Eigen::VectorXd& y) {
  const double s = std::sqrt((y.array() - y.mean()).square().mean());
  return s > 0.0 ? s : 1.0;
}

}  // namespace

CvResult cv_select(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_in, Family family, double mix,
                   std::uint64_t seed, const CvOptions& opts) {
  if (family == Family::binomial) check_binary(y_in);
  const double y_scale = family == Family::gaussian ? response_scale(y_in) : 1.0;
  const Eigen::VectorXd y = y_in / y_scale;
  const std::size_t n = static_cast<std::size_t>(y.size());
  const double lmax = lambda_max(X, y, family, mix);
  const auto grid = lambda_grid(lmax > 0.0 ? lmax : 1.0, opts.grid_size, opts.min_ratio);
  const auto labels =
      fold_assignment(n, opts.folds, seed, family == Family::binomial ? &y : nullptr);
  const std::size_t k_folds = static_cast<std::size_t>(opts.folds);
  const std::size_t g_size = grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> loss(k_folds, std::vector<double>(g_size, nan));

  parallel_for(k_folds, [&](std::size_t k) {
    std::vector<Eigen::Index> train, valid;
    for (std::size_t i = 0; i < n; ++i) {
      (static_cast<std::size_t>(labels[i]) == k ? valid : train).push_back(static_cast<Eigen::Index>(i));
    }
    const Eigen::MatrixXd Xt = X(train, Eigen::all);
    const Eigen::VectorXd yt = y(train);
    const Eigen::MatrixXd Xv = X(valid, Eigen::all);
    const Eigen::VectorXd yv = y(valid);
    std::vector<std::optional<LinearFit>> path;
    try {
      path = fit_path(Xt, yt, family, grid, mix, opts.solver);
    } catch (const Error&) {
      return;  // whole fold failed (e.g. a single class in training)
    }
    for (std::size_t g = 0; g < g_size; ++g) {
      if (!path[g]) continue;
      const Eigen::VectorXd pred = path[g]->predict(Xv);
      loss[k][g] = family == Family::gaussian ? (pred - yv).squaredNorm() / static_cast<double>(yv.size())
                                              : binomial_deviance(yv, pred);
    }
  });

  CvResult r;
  r.lambda_grid = grid;
  r.cv_error.assign(g_size, nan);
  r.cv_se.assign(g_size, nan);
  r.failed.assign(g_size, false);
  std::optional<std::size_t> best;
  for (std::size_t g = 0; g < g_size; ++g) {
    std::vector<double> vals;
    for (std::size_t k = 0; k < k_folds; ++k) {
      if (std::isnan(loss[k][g])) break;
      vals.push_back(loss[k][g]);
    }
    if (vals.size() != k_folds) {
      r.failed[g] = true;
      continue;
    }
    for (double& v : vals) v *= y_scale * y_scale;
    r.cv_error[g] = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(k_folds);
    r.cv_se[g] = sample_sd(vals) / std::sqrt(static_cast<double>(k_folds));
    if (!best || r.cv_error[g] < r.cv_error[*best]) best = g;
  }
  if (!best) throw Error(ErrorCode::NoConvergence, "every cross-validation grid point failed");
  r.index_min = *best;
  r.lambda_min = grid[*best];
  const double threshold = r.cv_error[*best] + r.cv_se[*best];
  r.index_1se = *best;
  for (std::size_t g = 0; g <= *best; ++g) {
    if (!r.failed[g] && r.cv_error[g] <= threshold) {
      r.index_1se = g;
      break;
    }
  }
  r.lambda_1se = grid[r.index_1se];
  return r;
}

LinearFit fit_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family, double mix,
                 LambdaRule rule, std::uint64_t seed, const CvOptions& opts) {
  if (family == Family::binomial) check_binary(y);
  const double y_scale = family == Family::gaussian ? response_scale(y) : 1.0;
  const Eigen::VectorXd ys = y / y_scale;
  double lambda = 0.0;
  if (lambda_max(X, ys, family, mix) > 0.0) lambda = cv_select(X, y, family, mix, seed, opts).select(rule);
  if (family == Family::binomial) return fit_logistic(X, y, lambda, mix, opts.solver);
  LinearFit fit = fit_elastic_net(X, ys, lambda, mix, opts.solver);
  fit.intercept *= y_scale;
  fit.coefficients *= y_scale;
  for (double& v : fit.objective_trace) v *= y_scale * y_scale;
  return fit;
}

CvOptions cv_options(const LinmodConfig& cfg) {
  CvOptions o;
  o.folds = cfg.cv_folds;
  o.grid_size = cfg.grid_size;
  o.min_ratio = cfg.min_ratio;
  o.solver.max_sweeps = cfg.max_sweeps;
  o.solver.tol = cfg.tol;
  return o;
}

}  // namespace atekit::linmod

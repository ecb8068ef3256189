#include "atekit/balance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace atekit::balance {

namespace {

struct Problem {
  std::vector<std::size_t> rows;     // reference-arm rows
  Eigen::VectorXd target;            // original units, all columns
  Eigen::VectorXd scale;             // 1 for dropped columns
  std::vector<bool> dropped;
  std::vector<std::size_t> order;    // kept columns in canonical order
  Eigen::MatrixXd A;                 // m x k, standardized and centered on the reference arm
  Eigen::VectorXd t;                 // k, target in the same coordinates
};

bool is_reference(double w, int reference_arm) { return (w > 0.5) == (reference_arm == 1); }

Problem setup(const Eigen::MatrixXd& X, const Eigen::VectorXd& W, Target target, int reference_arm) {
  if (X.rows() != W.size()) throw Error(ErrorCode::ShapeMismatch, "X and W row counts differ");
  if (reference_arm != 0 && reference_arm != 1) {
    throw Error(ErrorCode::InvalidArgument, "reference_arm must be 0 or 1");
  }
  Problem p;
  for (Eigen::Index i = 0; i < W.size(); ++i) {
    if (is_reference(W[i], reference_arm)) p.rows.push_back(static_cast<std::size_t>(i));
  }
  if (p.rows.empty()) throw Error(ErrorCode::EmptyReferenceArm, "reference arm has no units");

  const Eigen::Index d = X.cols();
  p.target = Eigen::VectorXd::Zero(d);
  if (target == Target::pooled_means) {
    p.target = X.colwise().mean().transpose();
  } else {
    std::size_t nt = 0;
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      if (W[i] > 0.5) {
        p.target += X.row(i).transpose();
        ++nt;
      }
    }
    if (nt == 0) throw Error(ErrorCode::EmptyArm, "no treated units to define target means");
    p.target /= static_cast<double>(nt);
  }

  const auto m = static_cast<Eigen::Index>(p.rows.size());
  const Eigen::MatrixXd R = X(p.rows, Eigen::all);
  const Eigen::VectorXd ref_mean = R.colwise().mean().transpose();
  p.scale = Eigen::VectorXd::Ones(d);
  p.dropped.assign(static_cast<std::size_t>(d), false);
  std::vector<std::size_t> kept;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt((R.col(j).array() - ref_mean[j]).square().sum() / static_cast<double>(m));
    if (!(sd > 1e-10 * (1.0 + std::abs(ref_mean[j])))) {
      p.dropped[static_cast<std::size_t>(j)] = true;
    } else {
      p.scale[j] = sd;
      kept.push_back(static_cast<std::size_t>(j));
    }
  }

  const auto k = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd A(m, k);
  Eigen::VectorXd t(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto j = static_cast<Eigen::Index>(kept[static_cast<std::size_t>(c)]);
    A.col(c) = (R.col(j).array() - ref_mean[j]) / p.scale[j];
    t[c] = (p.target[j] - ref_mean[j]) / p.scale[j];
  }

  // Canonical order: by target, then lexicographically by column contents.
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (t[a] != t[b]) return t[a] < t[b];
    for (Eigen::Index i = 0; i < m; ++i) {
      if (A(i, a) != A(i, b)) return A(i, a) < A(i, b);
    }
    return false;
  });
  p.A.resize(m, k);
  p.t.resize(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    p.A.col(c) = A.col(perm[static_cast<std::size_t>(c)]);
    p.t[c] = t[perm[static_cast<std::size_t>(c)]];
    p.order.push_back(kept[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])]);
  }
  return p;
}

double sup_sq(const Eigen::VectorXd& g) { return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff(); }

double primal(double zeta, const Eigen::VectorXd& lam, const Eigen::VectorXd& g) {
  return zeta * lam.squaredNorm() + (1.0 - zeta) * sup_sq(g);
}

// Prox of s c |u|_1^2 at v: soft threshold with a data-dependent level.
Eigen::VectorXd prox_l1_squared(const Eigen::VectorXd& v, double sc) {
  if (sc <= 0.0) return v;
  const double kappa = 2.0 * sc;
  std::vector<double> a(static_cast<std::size_t>(v.size()));
  for (Eigen::Index j = 0; j < v.size(); ++j) a[static_cast<std::size_t>(j)] = std::abs(v[j]);
  std::sort(a.begin(), a.end(), std::greater<>());
  double level = 0.0, run = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    run += a[r];
    const double cand = kappa * run / (1.0 + kappa * static_cast<double>(r + 1));
    if (a[r] > cand) level = cand;
    else break;
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double mag = std::max(std::abs(v[j]) - level, 0.0);
    out[j] = v[j] < 0 ? -mag : mag;
  }
  return out;
}

// Minimizer over s in [0, 1] of the primal objective on lam0 + s (lam1 - lam0).
double segment_search(double zeta, const Eigen::VectorXd& lam0, const Eigen::VectorXd& lam1,
                      const Eigen::VectorXd& g0, const Eigen::VectorXd& g1) {
  const Eigen::VectorXd dl = lam1 - lam0;
  const Eigen::VectorXd dg = g1 - g0;
  const double a = lam0.squaredNorm(), b = lam0.dot(dl), c = dl.squaredNorm();
  auto f = [&](double s) {
    double sup = 0.0;
    for (Eigen::Index j = 0; j < g0.size(); ++j) sup = std::max(sup, std::abs(g0[j] + s * dg[j]));
    return zeta * (a + 2.0 * s * b + s * s * c) + (1.0 - zeta) * sup * sup;
  };
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.0, hi = 1.0;
  double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = f(x2);
    }
  }
  double best_s = 0.5 * (lo + hi), best_f = f(best_s);
  if (f(1.0) < best_f) best_s = 1.0, best_f = f(1.0);
  if (f(0.0) <= best_f) best_s = 0.0;
  return best_s;
}

Eigen::VectorXd full_imbalance(const Eigen::MatrixXd& X, const Problem& p, const Eigen::VectorXd& lambda) {
  Eigen::VectorXd wmean = Eigen::VectorXd::Zero(X.cols());
  for (auto i : p.rows) wmean += lambda[static_cast<Eigen::Index>(i)] * X.row(static_cast<Eigen::Index>(i)).transpose();
  return (wmean - p.target).cwiseQuotient(p.scale);
}

}  // namespace

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const auto m = v.size();
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "cannot project an empty vector");
  std::vector<double> s(v.data(), v.data() + m);
  std::sort(s.begin(), s.end(), std::greater<>());
  double run = 0.0, theta = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    run += s[static_cast<std::size_t>(r)];
    const double cand = (run - 1.0) / static_cast<double>(r + 1);
    if (s[static_cast<std::size_t>(r)] - cand > 0.0) theta = cand;
  }
  return (v.array() - theta).max(0.0).matrix();
}

BalanceSolution solve_balancing_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& W,
                                        Target target, int reference_arm,
                                        const BalanceOptions& opts) {
  if (!(opts.zeta >= 0.0 && opts.zeta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "zeta must lie in [0, 1]");
  if (opts.max_iter < 1 || !(opts.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "invalid solver options");
  const Problem p = setup(X, W, target, reference_arm);
  const auto m = static_cast<Eigen::Index>(p.rows.size());
  const Eigen::Index k = p.A.cols();
  const double zeta = opts.zeta;

  BalanceSolution sol;
  sol.reference_arm = reference_arm;
  for (std::size_t j = 0; j < p.dropped.size(); ++j) {
    if (p.dropped[j]) sol.dropped_columns.push_back(j);
  }

  Eigen::VectorXd lam = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  Eigen::VectorXd g = p.A.transpose() * lam - p.t;
  double P = primal(zeta, lam, g);
  sol.objective_trace.push_back(P);

  if (zeta >= 1.0 || k == 0) {
    // Uniform weights minimize |lambda|^2 on the simplex.
    sol.converged = true;
    sol.duality_gap = zeta >= 1.0 ? 0.0 : P - zeta / static_cast<double>(m);
  } else {
    const double c = zeta / (1.0 - zeta);
    const Eigen::MatrixXd gram = p.A.transpose() * p.A;
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double L = top > 0.0 ? 2.0 * top : 1.0;
    const double step = 1.0 / L;

    auto dual = [&](const Eigen::VectorXd& u, Eigen::VectorXd& lam_u, Eigen::VectorXd& g_u) {
      const Eigen::VectorXd Au = p.A * u;
      lam_u = project_to_simplex(-Au);
      g_u = p.A.transpose() * lam_u - p.t;
      return lam_u.squaredNorm() + 2.0 * Au.dot(lam_u) - 2.0 * u.dot(p.t) - c * u.lpNorm<1>() * u.lpNorm<1>();
    };

    Eigen::VectorXd u = Eigen::VectorXd::Zero(k), y = u, lam_y, g_y, lam_u, g_u;
    double G_u = dual(u, lam_u, g_u);
    double best_dual = zeta * G_u;
    double theta = 1.0;
    for (int it = 1; it <= opts.max_iter; ++it) {
      dual(y, lam_y, g_y);
      const Eigen::VectorXd u_new = prox_l1_squared(y + step * 2.0 * g_y, step * c);
      Eigen::VectorXd lam_new, g_new;
      const double G_new = dual(u_new, lam_new, g_new);
      best_dual = std::max(best_dual, zeta * G_new);

      if (G_new < G_u) {
        // Restart momentum whenever the dual value drops.
        theta = 1.0;
        y = u;
      } else {
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        y = u_new + ((theta - 1.0) / theta_next) * (u_new - u);
        theta = theta_next;
        u = u_new;
        G_u = G_new;
      }

      const double s = segment_search(zeta, lam, lam_new, g, g_new);
      if (s > 0.0) {
        Eigen::VectorXd lam_next = lam + s * (lam_new - lam);
        Eigen::VectorXd g_next = p.A.transpose() * lam_next - p.t;
        const double P_next = primal(zeta, lam_next, g_next);
        if (P_next <= P) {
          lam = std::move(lam_next);
          g = std::move(g_next);
          P = P_next;
        }
      }
      sol.objective_trace.push_back(P);
      sol.iterations = it;
      sol.duality_gap = P - best_dual;
      if (sol.duality_gap <= opts.tol) {
        sol.converged = true;
        break;
      }
    }
  }

  // Clean the simplex: exact zeros stay zero, the sum is renormalized.
  lam = lam.cwiseMax(0.0);
  lam /= lam.sum();
  sol.lambda = Eigen::VectorXd::Zero(W.size());
  for (Eigen::Index r = 0; r < m; ++r) sol.lambda[static_cast<Eigen::Index>(p.rows[static_cast<std::size_t>(r)])] = lam[r];
  sol.scale = p.scale;
  sol.imbalance = full_imbalance(X, p, sol.lambda);
  g = p.A.transpose() * lam - p.t;
  sol.objective = primal(zeta, lam, g);
  return sol;
}

double balance_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& W, Target target,
                         int reference_arm, double zeta, const Eigen::VectorXd& lambda) {
  const Problem p = setup(X, W, target, reference_arm);
  if (lambda.size() != W.size()) throw Error(ErrorCode::ShapeMismatch, "lambda length differs from n");
  Eigen::VectorXd lam(static_cast<Eigen::Index>(p.rows.size()));
  for (std::size_t r = 0; r < p.rows.size(); ++r) lam[static_cast<Eigen::Index>(r)] = lambda[static_cast<Eigen::Index>(p.rows[r])];
  const Eigen::VectorXd g = p.A.transpose() * lam - p.t * lam.sum();
  return primal(zeta, lam, g);
}

PointEstimate balancing_estimate(const Dataset& ds, const Eigen::VectorXd& lambda) {
  if (static_cast<std::size_t>(lambda.size()) != ds.n()) {
    throw Error(ErrorCode::ShapeMismatch, "lambda length differs from n");
  }
  double st = 0.0, sc = 0.0, yt = 0.0, yc = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (ds.treated(i)) {
      st += lambda[ii];
      yt += lambda[ii] * ds.Y()[ii];
    } else {
      sc += lambda[ii];
      yc += lambda[ii] * ds.Y()[ii];
    }
  }
  if (!(st > 0.0) || !(sc > 0.0)) throw Error(ErrorCode::ZeroArmWeight, "an arm carries no positive weight");
  PointEstimate out;
  out.value = yt / st - yc / sc;
  out.se = 0.0;
  out.method = Method::arbe;
  out.estimand = Estimand::ate();
  out.n_used = ds.n();
  out.notes.push_back("weighted difference in means");
  return out;
}

Eigen::VectorXd att_weights(const BalanceSolution& sol, const Eigen::VectorXd& W) {
  if (sol.lambda.size() != W.size()) throw Error(ErrorCode::ShapeMismatch, "lambda length differs from n");
  const double nt = (W.array() > 0.5).cast<double>().sum();
  if (nt == 0.0) throw Error(ErrorCode::EmptyArm, "no treated units");
  Eigen::VectorXd out = sol.lambda;
  for (Eigen::Index i = 0; i < W.size(); ++i) {
    if (W[i] > 0.5) out[i] = 1.0 / nt;
  }
  return out;
}

}  // namespace atekit::balance

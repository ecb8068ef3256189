#include "atekit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace atekit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonBinaryTreatment: return "NonBinaryTreatment";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::EmptyArm: return "EmptyArm";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::EmptyReferenceArm: return "EmptyReferenceArm";
    case ErrorCode::ZeroArmWeight: return "ZeroArmWeight";
    case ErrorCode::MissingVarianceEstimates: return "MissingVarianceEstimates";
    case ErrorCode::EmptyAfterTrim: return "EmptyAfterTrim";
    case ErrorCode::FoldArmEmpty: return "FoldArmEmpty";
    case ErrorCode::TooManyFailedReplicates: return "TooManyFailedReplicates";
    case ErrorCode::AllSplitsFailed: return "AllSplitsFailed";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnknownDgp: return "UnknownDgp";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> row,
             std::optional<std::size_t> column)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      row_(row),
      column_(column) {}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::NonBinaryTreatment:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::MissingValue:
    case ErrorCode::FileNotFound:
    case ErrorCode::MissingColumn:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::UnknownDgp:
    case ErrorCode::UnknownMethod:
      return true;
    default:
      return false;
  }
}

// ---------------------------------------------------------------- Dataset

namespace {

std::vector<std::string> default_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd X, Eigen::VectorXd W, Eigen::VectorXd Y,
                 std::vector<std::string> names)
    : x_(std::move(X)), w_(std::move(W)), y_(std::move(Y)), names_(std::move(names)) {
  n_treated_ = static_cast<std::size_t>(std::count_if(
      w_.data(), w_.data() + w_.size(), [](double v) { return v > 0.5; }));
}

Dataset Dataset::create(Eigen::MatrixXd X, Eigen::VectorXd W, Eigen::VectorXd Y,
                        std::vector<std::string> column_names) {
  const auto n = Y.size();
  if (W.size() != n || X.rows() != n) {
    throw Error(ErrorCode::ShapeMismatch, "X, W and Y must have the same number of rows");
  }
  if (n < 2) throw Error(ErrorCode::TooFewRows, "a dataset needs at least 2 units");
  if (X.cols() < 1) throw Error(ErrorCode::ShapeMismatch, "a dataset needs at least 1 covariate");
  if (column_names.empty()) column_names = default_names(static_cast<std::size_t>(X.cols()));
  if (static_cast<Eigen::Index>(column_names.size()) != X.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "column_names must have one entry per covariate");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    if (!std::isfinite(Y[i])) throw Error(ErrorCode::NonFiniteValue, "outcome is not finite", row, 0);
    if (!std::isfinite(W[i])) throw Error(ErrorCode::NonFiniteValue, "treatment is not finite", row, 1);
    if (W[i] != 0.0 && W[i] != 1.0) {
      std::ostringstream msg;
      msg << "treatment value " << W[i] << " at row " << row << " is not 0 or 1";
      throw Error(ErrorCode::NonBinaryTreatment, msg.str(), row, 1);
    }
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (!std::isfinite(X(i, j))) {
        throw Error(ErrorCode::NonFiniteValue,
                    "covariate '" + column_names[static_cast<std::size_t>(j)] +
                        "' is not finite at row " + std::to_string(row),
                    row, static_cast<std::size_t>(j) + 2);
      }
    }
  }
  return Dataset(std::move(X), std::move(W), std::move(Y), std::move(column_names));
}

void Dataset::require_both_arms() const {
  if (n_treated_ == 0 || n_treated_ == n()) {
    throw Error(ErrorCode::EmptyArm, n_treated_ == 0 ? "no treated units" : "no control units");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  if (rows.size() < 2) throw Error(ErrorCode::TooFewRows, "subset needs at least 2 units");
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(m, x_.cols());
  Eigen::VectorXd W(m), Y(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)]);
    X.row(k) = x_.row(i);
    W[k] = w_[i];
    Y[k] = y_[i];
  }
  return Dataset(std::move(X), std::move(W), std::move(Y), names_);
}

Dataset Dataset::select_columns(std::span<const std::size_t> cols) const {
  if (cols.empty()) throw Error(ErrorCode::ShapeMismatch, "at least one column must be kept");
  Eigen::MatrixXd X(x_.rows(), static_cast<Eigen::Index>(cols.size()));
  std::vector<std::string> names;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    X.col(static_cast<Eigen::Index>(k)) = x_.col(static_cast<Eigen::Index>(cols[k]));
    names.push_back(names_[cols[k]]);
  }
  return Dataset(std::move(X), w_, y_, std::move(names));
}

Dataset Dataset::with_outcome(Eigen::VectorXd Y) const {
  return create(x_, w_, std::move(Y), names_);
}

std::vector<std::size_t> Dataset::arm_indices(bool treated_arm) const {
  std::vector<std::size_t> idx;
  idx.reserve(treated_arm ? n_treated_ : n() - n_treated_);
  for (std::size_t i = 0; i < n(); ++i) {
    if (treated(i) == treated_arm) idx.push_back(i);
  }
  return idx;
}

Dataset validate_dataset(std::span<const RawRecord> rows, std::vector<std::string> column_names) {
  if (rows.empty()) throw Error(ErrorCode::ShapeMismatch, "no rows");
  const std::size_t d = rows.front().x.size();
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(d));
  Eigen::VectorXd W(n), Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (r.x.size() != d) {
      throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(i) + " is not rectangular",
                  static_cast<std::size_t>(i));
    }
    Y[i] = r.y;
    W[i] = r.w;
    for (std::size_t j = 0; j < d; ++j) X(i, static_cast<Eigen::Index>(j)) = r.x[j];
  }
  return Dataset::create(std::move(X), std::move(W), std::move(Y), std::move(column_names));
}

// ---------------------------------------------------------------- Estimand

Estimand Estimand::trimmed(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "trimming alpha must lie in (0, 0.5)");
  }
  return {Kind::Trimmed, alpha};
}

std::string_view to_string(Estimand::Kind kind) noexcept {
  switch (kind) {
    case Estimand::Kind::ATE: return "ate";
    case Estimand::Kind::ATT: return "att";
    case Estimand::Kind::OverlapWeighted: return "overlap";
    case Estimand::Kind::Trimmed: return "trimmed";
  }
  return "unknown";
}

Estimand parse_estimand(std::string_view text, double trim_alpha) {
  if (text == "ate") return Estimand::ate();
  if (text == "att") return Estimand::att();
  if (text == "overlap") return Estimand::overlap();
  if (text == "trimmed") return Estimand::trimmed(trim_alpha);
  throw Error(ErrorCode::InvalidArgument, "unknown estimand '" + std::string(text) + "'");
}

Eigen::VectorXd weight_function(const Estimand& estimand, const Eigen::VectorXd& ehat) {
  const auto n = ehat.size();
  Eigen::VectorXd w(n);
  switch (estimand.kind) {
    case Estimand::Kind::ATE:
      w.setOnes();
      break;
    case Estimand::Kind::ATT:
      w = ehat;
      break;
    case Estimand::Kind::OverlapWeighted:
      w = ehat.array() * (1.0 - ehat.array());
      break;
    case Estimand::Kind::Trimmed:
      for (Eigen::Index i = 0; i < n; ++i) {
        w[i] = (ehat[i] > estimand.alpha && ehat[i] < 1.0 - estimand.alpha) ? 1.0 : 0.0;
      }
      break;
  }
  return w;
}

// ---------------------------------------------------------------- Nuisances

Eigen::VectorXd clip_propensity(const Eigen::VectorXd& e, double clip_eta) {
  return e.array().max(clip_eta).min(1.0 - clip_eta).matrix();
}

NuisanceEstimates NuisanceEstimates::make(const Dataset& ds, const Eigen::VectorXd& ehat_raw,
                                          Eigen::VectorXd mu0hat, Eigen::VectorXd mu1hat,
                                          double clip_eta,
                                          std::optional<Eigen::VectorXd> sigma2_0hat,
                                          std::optional<Eigen::VectorXd> sigma2_1hat) {
  if (!(clip_eta > 0.0 && clip_eta < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "clip_eta must lie in (0, 0.5)");
  }
  const auto n = static_cast<Eigen::Index>(ds.n());
  if (ehat_raw.size() != n || mu0hat.size() != n || mu1hat.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "nuisance vectors must align with the dataset");
  }
  auto check_var = [n](const std::optional<Eigen::VectorXd>& v) {
    if (!v) return;
    if (v->size() != n) throw Error(ErrorCode::ShapeMismatch, "variance vector misaligned");
    if ((v->array() < 0.0).any()) {
      throw Error(ErrorCode::InvalidArgument, "variance estimates must be non-negative");
    }
  };
  check_var(sigma2_0hat);
  check_var(sigma2_1hat);
  NuisanceEstimates out;
  out.ehat = clip_propensity(ehat_raw, clip_eta);
  out.mu0hat = std::move(mu0hat);
  out.mu1hat = std::move(mu1hat);
  out.sigma2_0hat = std::move(sigma2_0hat);
  out.sigma2_1hat = std::move(sigma2_1hat);
  out.phat = static_cast<double>(ds.n_treated()) / static_cast<double>(ds.n());
  out.clip_eta = clip_eta;
  return out;
}

// ---------------------------------------------------------------- Methods

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::naive: return "naive";
    case Method::ols: return "ols";
    case Method::dse: return "dse";
    case Method::arbe: return "arbe";
    case Method::dre: return "dre";
    case Method::dmle: return "dmle";
  }
  return "unknown";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::naive, Method::ols, Method::dse,
                                           Method::arbe,  Method::dre, Method::dmle};
  return methods;
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::UnknownMethod, "unknown method '" + std::string(name) + "'");
}

std::vector<Method> parse_methods(std::string_view comma_list) {
  std::vector<Method> out;
  if (comma_list == "all") return all_methods();
  std::size_t start = 0;
  while (start <= comma_list.size()) {
    const auto end = std::min(comma_list.find(',', start), comma_list.size());
    const auto token = comma_list.substr(start, end - start);
    if (!token.empty()) out.push_back(parse_method(token));
    start = end + 1;
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty method list");
  return out;
}

std::string_view to_string(LambdaRule rule) noexcept {
  return rule == LambdaRule::min ? "min" : "1se";
}

std::string_view to_string(NuisanceFamily family) noexcept {
  return family == NuisanceFamily::linear ? "linear" : "forest";
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (bootstrap_reps < 1) fail("bootstrap_reps must be >= 1");
  if (half_sample_reps < 1) fail("half_sample_reps must be >= 1");
  if (dml_folds < 2) fail("dml_folds must be >= 2");
  if (!(trim_alpha > 0.0 && trim_alpha < 0.5)) fail("trim_alpha must lie in (0, 0.5)");
  if (!(clip_eta > 0.0 && clip_eta < 0.5)) fail("clip_eta must lie in (0, 0.5)");
  if (histogram_bins < 1) fail("histogram_bins must be >= 1");
  if (linmod.cv_folds < 2) fail("linmod.cv_folds must be >= 2");
  if (linmod.grid_size < 1) fail("linmod.grid_size must be >= 1");
  if (!(linmod.min_ratio > 0.0 && linmod.min_ratio < 1.0)) fail("linmod.min_ratio must lie in (0, 1)");
  if (!(linmod.enet_mix >= 0.0 && linmod.enet_mix <= 1.0)) fail("linmod.enet_mix must lie in [0, 1]");
  if (linmod.max_sweeps < 1) fail("linmod.max_sweeps must be >= 1");
  if (!(linmod.tol > 0.0)) fail("linmod.tol must be positive");
  if (forest.n_trees < 1) fail("forest.n_trees must be >= 1");
  if (forest.mtry < 0) fail("forest.mtry must be >= 0");
  if (forest.min_leaf < 1) fail("forest.min_leaf must be >= 1");
  if (!(balance.zeta >= 0.0 && balance.zeta <= 1.0)) fail("balance.zeta must lie in [0, 1]");
  if (balance.max_iter < 1) fail("balance.max_iter must be >= 1");
  if (!(balance.tol > 0.0)) fail("balance.tol must be positive");
}

// ---------------------------------------------------------------- numerics

double mean(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.sum() / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double sample_sd(const Eigen::VectorXd& v) {
  return sample_sd(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

double quantile_type7(std::vector<double> v, double q) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty data");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace atekit

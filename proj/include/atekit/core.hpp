#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atekit/error.hpp"

namespace atekit {

/// Observed sample (Y_obs, W, X). Immutable once built; every instance has
/// passed validation, so downstream code never rechecks shapes or finiteness.
class Dataset {
 public:
  /// Validates and takes ownership. Throws ShapeMismatch, NonBinaryTreatment,
  /// NonFiniteValue or TooFewRows.
  static Dataset create(Eigen::MatrixXd X, Eigen::VectorXd W, Eigen::VectorXd Y,
                        std::vector<std::string> column_names = {});

  std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(x_.cols()); }
  const Eigen::MatrixXd& X() const noexcept { return x_; }
  const Eigen::VectorXd& W() const noexcept { return w_; }
  const Eigen::VectorXd& Y() const noexcept { return y_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  std::size_t n_treated() const noexcept { return n_treated_; }
  std::size_t n_control() const noexcept { return n() - n_treated_; }
  bool treated(std::size_t i) const noexcept { return w_[static_cast<Eigen::Index>(i)] > 0.5; }

  /// Throws EmptyArm unless both arms have at least one unit.
  void require_both_arms() const;

  /// Rows in the given order (duplicates allowed, as in a bootstrap draw).
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset select_columns(std::span<const std::size_t> cols) const;
  Dataset with_outcome(Eigen::VectorXd Y) const;

  std::vector<std::size_t> arm_indices(bool treated_arm) const;

 private:
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd W, Eigen::VectorXd Y,
          std::vector<std::string> names);

  Eigen::MatrixXd x_;
  Eigen::VectorXd w_;
  Eigen::VectorXd y_;
  std::vector<std::string> names_;
  std::size_t n_treated_ = 0;
};

/// One input row before validation.
struct RawRecord {
  double y = 0.0;
  double w = 0.0;
  std::vector<double> x;
};

/// Builds a Dataset from row records. Errors carry the row and the column
/// (0 = outcome, 1 = treatment, 2 + j = covariate j).
Dataset validate_dataset(std::span<const RawRecord> rows,
                         std::vector<std::string> column_names = {});

struct Estimand {
  enum class Kind { ATE, ATT, OverlapWeighted, Trimmed };

  Kind kind = Kind::ATE;
  double alpha = 0.0;  // Trimmed only

  static Estimand ate() { return {Kind::ATE, 0.0}; }
  static Estimand att() { return {Kind::ATT, 0.0}; }
  static Estimand overlap() { return {Kind::OverlapWeighted, 0.0}; }
  static Estimand trimmed(double alpha);

  bool operator==(const Estimand&) const = default;
};

std::string_view to_string(Estimand::Kind kind) noexcept;
Estimand parse_estimand(std::string_view text, double trim_alpha = 0.1);

/// Per-unit weights defining a weighted estimand. ATT maps to w = e so the
/// weighted estimand coincides with the effect on the treated.
Eigen::VectorXd weight_function(const Estimand& estimand, const Eigen::VectorXd& ehat);

/// Fitted nuisances aligned with one Dataset. Build through make() so the
/// clipping and treated-fraction invariants always hold.
struct NuisanceEstimates {
  Eigen::VectorXd ehat;
  Eigen::VectorXd mu0hat;
  Eigen::VectorXd mu1hat;
  std::optional<Eigen::VectorXd> sigma2_0hat;
  std::optional<Eigen::VectorXd> sigma2_1hat;
  double phat = 0.0;
  double clip_eta = 0.01;

  static NuisanceEstimates make(const Dataset& ds, const Eigen::VectorXd& ehat_raw,
                                Eigen::VectorXd mu0hat, Eigen::VectorXd mu1hat,
                                double clip_eta,
                                std::optional<Eigen::VectorXd> sigma2_0hat = std::nullopt,
                                std::optional<Eigen::VectorXd> sigma2_1hat = std::nullopt);
};

Eigen::VectorXd clip_propensity(const Eigen::VectorXd& e, double clip_eta);

enum class Method { naive, ols, dse, arbe, dre, dmle };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);
std::vector<Method> parse_methods(std::string_view comma_list);
const std::vector<Method>& all_methods();

struct PointEstimate {
  double value = 0.0;
  double se = 0.0;
  Method method = Method::naive;
  Estimand estimand = Estimand::ate();
  std::size_t n_used = 0;
  std::vector<std::string> notes;
};

enum class LambdaRule { min, one_se };
enum class NuisanceFamily { linear, forest };

std::string_view to_string(LambdaRule rule) noexcept;
std::string_view to_string(NuisanceFamily family) noexcept;

struct LinmodConfig {
  int cv_folds = 5;
  int grid_size = 100;
  double min_ratio = 1e-4;
  double enet_mix = 0.5;
  LambdaRule selection_rule = LambdaRule::one_se;
  LambdaRule prediction_rule = LambdaRule::min;
  int max_sweeps = 10000;
  double tol = 1e-7;
};

struct ForestConfig {
  int n_trees = 500;
  int mtry = 0;  // 0 -> ceil(d / 3)
  int min_leaf = 5;
};

struct BalanceConfig {
  double zeta = 0.5;
  int max_iter = 50000;
  double tol = 1e-6;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int bootstrap_reps = 1000;
  int half_sample_reps = 200;
  int dml_folds = 5;
  double trim_alpha = 0.1;
  double clip_eta = 0.01;
  int histogram_bins = 20;
  bool hajek = false;
  NuisanceFamily nuisance_family = NuisanceFamily::linear;
  LinmodConfig linmod;
  ForestConfig forest;
  BalanceConfig balance;

  /// Throws InvalidArgument on out-of-range settings.
  void validate() const;
};

// Small numeric helpers shared across modules.
double mean(const Eigen::VectorXd& v);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> v);
double sample_sd(const Eigen::VectorXd& v);
/// Type-7 (linear interpolation) quantile of unsorted data.
double quantile_type7(std::vector<double> v, double q);

}  // namespace atekit

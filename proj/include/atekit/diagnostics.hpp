#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atekit/core.hpp"
#include "atekit/estimators.hpp"

namespace atekit::diagnostics {

using estimators::EstimatorFn;

struct ReplicateSummary {
  double se = 0.0;
  std::vector<double> estimates;  // successful replicates, in replicate order
  std::size_t n_failed = 0;
};

/// Standard deviation (n - 1) of the estimator over B resamples of n units
/// drawn with replacement. Replicate r draws from stream (seed, r) and runs
/// the estimator with a seed derived from the same pair. Failed replicates
/// are dropped; more than 10% failures throws TooManyFailedReplicates.
ReplicateSummary bootstrap(const EstimatorFn& estimator, const Dataset& ds, int B, std::uint64_t seed);
double bootstrap_se(const EstimatorFn& estimator, const Dataset& ds, int B, std::uint64_t seed);

struct HalfSampleResult {
  double sbb = 0.0;
  double mean_difference = 0.0;  // mean over half estimates of (half - full)
  std::vector<double> half_estimates;
  std::size_t n_failed = 0;
};

/// Each rep splits the sample at random into halves of sizes floor(n/2) and
/// ceil(n/2) and runs the estimator on both. SBB is the mean of
/// (half estimate - full estimate) divided by se; a zero numerator gives 0.
HalfSampleResult half_sample_bias(const EstimatorFn& estimator, const Dataset& ds, int reps,
                                  std::uint64_t seed, double full_estimate, double se);

struct SkippedCovariate {
  std::size_t column = 0;
  std::string reason;
};

struct CovSplitResult {
  std::vector<std::size_t> columns;  // evaluated columns
  std::vector<double> per_covariate;  // aligned with columns
  std::vector<SkippedCovariate> skipped;
  double mean = 0.0;
  double std = 0.0;
};

/// For each covariate, splits at its median (values <= median go low) and
/// averages the estimator over the two halves. Constant columns, splits with
/// a minority side of at most 5% of units, and splits leaving a side without
/// both arms are skipped. Every split uses the same estimator seeds, so
/// identical columns yield identical values. Throws AllSplitsFailed.
CovSplitResult covariate_split_sensitivity(const EstimatorFn& estimator, const Dataset& ds,
                                           std::uint64_t seed);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

struct BiasFunctionSummary {
  Eigen::VectorXd b_values;  // b(X_i) / sd(Y)
  double mean = 0.0;
  double q025 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q975 = 0.0;
  std::vector<HistogramBin> histogram;
  double sd_y = 0.0;
  double phat = 0.0;
  bool degenerate_outcome = false;
};

/// b(x) = (e - p)(p (mu0 - mean mu0) + (1 - p)(mu1 - mean mu1)) / sd(Y) from
/// the given nuisances.
BiasFunctionSummary bias_function_from_nuisances(const Dataset& ds, const NuisanceEstimates& nuis,
                                                 int bins);

/// The same with out-of-bag forest nuisances fitted under cfg.forest.
BiasFunctionSummary bias_function_summary(const Dataset& ds, const RunConfig& cfg, std::uint64_t seed);

/// Equal-width histogram over [min, max]; the top edge is closed.
std::vector<HistogramBin> histogram(const Eigen::VectorXd& values, int bins);

struct AggregateBias {
  double B = 0.0;
  std::optional<double> naive_minus_reference;
};

/// B = mean(b) sd(Y) / (p (1 - p)), in outcome units.
AggregateBias aggregate_bias(const BiasFunctionSummary& summary, double phat,
                             std::optional<double> naive = std::nullopt,
                             std::optional<double> reference = std::nullopt);

/// A report cell: a value, or the error that prevented it.
struct Cell {
  std::optional<double> value;
  std::string error;
};

struct ReportRow {
  Method method = Method::naive;
  Cell estimate;
  Cell se;
  Cell trimmed;
  Cell sbb;
  Cell covsplit_mean;
  Cell covsplit_std;
  std::vector<std::string> notes;
  std::vector<SkippedCovariate> skipped_covariates;
};

struct Bounds {
  Cell ate_bound;
  Cell weighted_bound;
  Cell ratio;
  Cell weighted_bound_mean_weight_normalized;
  Cell ate_bound_decomposition;
};

struct DiagnosticsReport {
  std::vector<ReportRow> rows;
  std::optional<BiasFunctionSummary> bias_summary;
  std::string bias_summary_error;
  std::optional<AggregateBias> aggregate;
  Bounds bounds;
  RunConfig config;
  Estimand estimand;
  std::vector<std::string> notes;
};

/// Runs every method with its estimate, bootstrap s.e., trimmed estimate,
/// half-sample bias and covariate-split sensitivity, then attaches the
/// bias-function summary and the ATE versus overlap-weighted bound
/// comparison. Cell failures are recorded, never thrown.
DiagnosticsReport build_report(const Dataset& ds, const std::vector<Method>& methods,
                               const RunConfig& cfg, Estimand estimand);

}  // namespace atekit::diagnostics

#include <algorithm>
#include <cmath>
#include <numeric>

#include "atekit/dataio.hpp"
#include "atekit/diagnostics.hpp"
#include "atekit/estimators.hpp"
#include "atekit/report.hpp"
#include "helpers.hpp"

using namespace atekit;
using namespace atekit::diagnostics;

namespace {

EstimatorFn constant_estimator(double c) {
  return [c](const Dataset& ds, std::uint64_t) {
    PointEstimate pe;
    pe.value = c;
    pe.n_used = ds.n();
    return pe;
  };
}

EstimatorFn naive_fn() {
  return [](const Dataset& ds, std::uint64_t) { return estimators::estimate_naive(ds); };
}

EstimatorFn size_estimator() {
  return [](const Dataset& ds, std::uint64_t) {
    PointEstimate pe;
    pe.value = static_cast<double>(ds.n());
    return pe;
  };
}

Dataset balanced_unit_variance(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd X = testing::gaussian_matrix(m, 2, rng);
  Eigen::VectorXd W(m), Y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    W[i] = i % 2 == 0 ? 1.0 : 0.0;
    Y[i] = 0.5 * W[i] + N(rng);
  }
  return Dataset::create(X, W, Y);
}

double naive_by_hand(const Dataset& ds, const std::vector<std::size_t>& rows) {
  double s1 = 0, s0 = 0;
  int n1 = 0, n0 = 0;
  for (auto i : rows) {
    const auto k = static_cast<Eigen::Index>(i);
    if (ds.W()[k] == 1.0) {
      s1 += ds.Y()[k];
      ++n1;
    } else {
      s0 += ds.Y()[k];
      ++n0;
    }
  }
  return s1 / n1 - s0 / n0;
}

}  // namespace

TEST_CASE("bootstrap s.e. of the naive difference matches the closed form") {
  const Dataset ds = balanced_unit_variance(400, 1);
  const double se = bootstrap_se(naive_fn(), ds, 1000, 17);
  CHECK(std::abs(se - std::sqrt(2.0 / 200.0)) <= 0.15 * std::sqrt(2.0 / 200.0));
}

TEST_CASE("bootstrap s.e. is zero for a constant outcome") {
  const Dataset base = balanced_unit_variance(50, 2);
  const Dataset ds = Dataset::create(base.X(), base.W(), Eigen::VectorXd::Constant(50, 3.0));
  CHECK(bootstrap_se(naive_fn(), ds, 50, 3) == 0.0);
}

TEST_CASE("bootstrap replicates are keyed by index and reproducible") {
  const Dataset ds = balanced_unit_variance(120, 3);
  const auto a = bootstrap(naive_fn(), ds, 10, 5);
  const auto b = bootstrap(naive_fn(), ds, 20, 5);
  const auto c = bootstrap(naive_fn(), ds, 10, 5);
  REQUIRE(a.estimates.size() == 10);
  CHECK(std::equal(a.estimates.begin(), a.estimates.end(), b.estimates.begin()));
  CHECK(a.estimates == c.estimates);
  CHECK(a.se == sample_sd(std::span<const double>(a.estimates)));
  CHECK(bootstrap(naive_fn(), ds, 10, 6).estimates != a.estimates);
}

TEST_CASE("bootstrap validates B and the failure budget") {
  const Dataset ds = balanced_unit_variance(40, 4);
  CHECK_ERROR(bootstrap(naive_fn(), ds, 1, 0), ErrorCode::InvalidArgument);

  auto failing = [](std::uint64_t every) -> EstimatorFn {
    return [every](const Dataset& d, std::uint64_t seed) {
      if (seed % every == 0) throw Error(ErrorCode::EmptyArm, "forced failure");
      return estimators::estimate_naive(d);
    };
  };
  CHECK_ERROR(bootstrap(failing(3), ds, 200, 7), ErrorCode::TooManyFailedReplicates);
  const auto ok = bootstrap(failing(50), ds, 200, 7);
  CHECK(ok.n_failed > 0);
  CHECK(ok.n_failed <= 20);
  CHECK(ok.estimates.size() + ok.n_failed == 200);
}

TEST_CASE("half-sample bias of a constant estimator is exactly zero") {
  const Dataset ds = balanced_unit_variance(30, 5);
  const auto r = half_sample_bias(constant_estimator(2.5), ds, 25, 9, 2.5, 0.0);
  CHECK(r.sbb == 0.0);
  CHECK(r.half_estimates.size() == 50);
}

TEST_CASE("half-sample splits have sizes floor(n/2) and ceil(n/2)") {
  const Dataset ds = balanced_unit_variance(11, 6);
  const auto r = half_sample_bias(size_estimator(), ds, 8, 1, 11.0, 1.0);
  REQUIRE(r.half_estimates.size() == 16);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(r.half_estimates[2 * k] == 5.0);
    CHECK(r.half_estimates[2 * k + 1] == 6.0);
  }
  CHECK(r.mean_difference == doctest::Approx(5.5 - 11.0));
  CHECK(r.sbb == doctest::Approx(-5.5));
}

TEST_CASE("half-sample bias divides the mean difference by the s.e.") {
  const Dataset ds = balanced_unit_variance(200, 7);
  const double full = estimators::estimate_naive(ds).value;
  const auto r = half_sample_bias(naive_fn(), ds, 40, 3, full, 0.2);
  double diff = 0.0;
  for (double h : r.half_estimates) diff += h - full;
  diff /= static_cast<double>(r.half_estimates.size());
  CHECK(r.mean_difference == doctest::Approx(diff).epsilon(1e-12));
  CHECK(r.sbb == doctest::Approx(diff / 0.2).epsilon(1e-12));
}

TEST_CASE("half-sample bias input checks") {
  const Dataset ds = balanced_unit_variance(4, 8);
  const Dataset tiny = ds.subset(std::vector<std::size_t>{0, 1, 2});
  CHECK_ERROR(half_sample_bias(naive_fn(), tiny, 5, 0, 0.0, 1.0), ErrorCode::TooFewRows);
  CHECK_ERROR(half_sample_bias(naive_fn(), ds, 0, 0, 0.0, 1.0), ErrorCode::InvalidArgument);
  CHECK_ERROR(half_sample_bias(size_estimator(), ds, 3, 0, 0.0, 0.0), ErrorCode::InvalidArgument);
}

TEST_CASE("covariate split of a constant estimator has zero spread") {
  const Dataset ds = balanced_unit_variance(60, 9);
  const auto r = covariate_split_sensitivity(constant_estimator(-1.25), ds, 4);
  REQUIRE(r.per_covariate.size() == 2);
  for (double v : r.per_covariate) CHECK(v == -1.25);
  CHECK(r.mean == -1.25);
  CHECK(r.std == 0.0);
}

TEST_CASE("covariate split averages the two median halves") {
  const Dataset ds = balanced_unit_variance(81, 10);
  const auto r = covariate_split_sensitivity(naive_fn(), ds, 0);
  REQUIRE(r.columns.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const Eigen::VectorXd col = ds.X().col(static_cast<Eigen::Index>(r.columns[k]));
    std::vector<double> sorted(col.data(), col.data() + col.size());
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[40];
    std::vector<std::size_t> low, high;
    for (std::size_t i = 0; i < 81; ++i) (col[static_cast<Eigen::Index>(i)] <= median ? low : high).push_back(i);
    CHECK(low.size() == 41);
    const double expected = 0.5 * (naive_by_hand(ds, low) + naive_by_hand(ds, high));
    CHECK(r.per_covariate[k] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(r.mean == doctest::Approx(0.5 * (r.per_covariate[0] + r.per_covariate[1])));
}

TEST_CASE("duplicated covariates give identical split values") {
  const Dataset base = balanced_unit_variance(100, 11);
  Eigen::MatrixXd X(100, 3);
  X << base.X(), base.X().col(0);
  const Dataset ds = Dataset::create(X, base.W(), base.Y());
  RunConfig cfg;
  cfg.linmod.grid_size = 20;
  const auto r = covariate_split_sensitivity(estimators::make_estimator(Method::dre, cfg, Estimand::ate()), ds, 12);
  REQUIRE(r.per_covariate.size() == 3);
  CHECK(r.per_covariate[0] == r.per_covariate[2]);
  CHECK(r.per_covariate[0] != r.per_covariate[1]);
}

TEST_CASE("covariate split skips constant and lopsided columns") {
  const Dataset base = balanced_unit_variance(100, 12);
  Eigen::MatrixXd X(100, 3);
  X.col(0) = base.X().col(0);
  X.col(1).setConstant(4.0);
  X.col(2).setZero();
  X(0, 2) = 1.0;
  X(1, 2) = 1.0;
  const Dataset ds = Dataset::create(X, base.W(), base.Y());
  const auto r = covariate_split_sensitivity(naive_fn(), ds, 0);
  CHECK(r.columns == std::vector<std::size_t>{0});
  REQUIRE(r.skipped.size() == 2);
  CHECK(r.skipped[0].column == 1);
  CHECK(r.skipped[1].column == 2);
  CHECK(r.std == 0.0);

  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(100, 2, 1.0);
  CHECK_ERROR(covariate_split_sensitivity(naive_fn(), Dataset::create(C, base.W(), base.Y()), 0),
              ErrorCode::AllSplitsFailed);
}

TEST_CASE("histogram conserves mass and spans the range") {
  Rng rng(13);
  const Eigen::MatrixXd v = testing::gaussian_matrix(537, 1, rng);
  const auto h = histogram(v.col(0), 12);
  REQUIRE(h.size() == 12);
  std::size_t total = 0;
  for (const auto& b : h) total += b.count;
  CHECK(total == 537);
  CHECK(h.front().left == v.minCoeff());
  CHECK(h.back().right == v.maxCoeff());
  CHECK(h.back().count >= 1);
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k].left == doctest::Approx(h[k - 1].right));

  const auto flat = histogram(Eigen::VectorXd::Constant(9, 2.0), 4);
  CHECK(flat[0].count == 9);
  CHECK_ERROR(histogram(v.col(0), 0), ErrorCode::InvalidArgument);
}

TEST_CASE("bias function matches the display on given nuisances") {
  const Dataset ds = balanced_unit_variance(10, 14);
  Eigen::VectorXd e(10), m0(10), m1(10);
  for (int i = 0; i < 10; ++i) {
    e[i] = 0.3 + 0.04 * i;
    m0[i] = i;
    m1[i] = 2.0 * i - 1.0;
  }
  const auto nuis = NuisanceEstimates::make(ds, e, m0, m1, 0.01);
  const auto s = bias_function_from_nuisances(ds, nuis, 5);
  const double p = nuis.phat;
  const double sd = sample_sd(ds.Y());
  for (int i = 0; i < 10; ++i) {
    const double expected = (e[i] - p) * (p * (m0[i] - m0.mean()) + (1 - p) * (m1[i] - m1.mean())) / sd;
    CHECK(s.b_values[i] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(std::abs(s.mean - s.b_values.mean()) < 1e-10);
  CHECK(s.q025 <= s.q25);
  CHECK(s.q25 <= s.median);
  CHECK(s.median <= s.q75);
  CHECK(s.q75 <= s.q975);

  const auto flat = NuisanceEstimates::make(ds, Eigen::VectorXd::Constant(10, p), m0, m1, 0.01);
  CHECK(bias_function_from_nuisances(ds, flat, 5).b_values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bias function with a constant outcome is flagged degenerate") {
  const Dataset base = balanced_unit_variance(40, 15);
  const Dataset ds = Dataset::create(base.X(), base.W(), Eigen::VectorXd::Constant(40, 1.0));
  const auto nuis = NuisanceEstimates::make(ds, Eigen::VectorXd::Constant(40, 0.4), Eigen::VectorXd::Ones(40),
                                            Eigen::VectorXd::Ones(40), 0.01);
  const auto s = bias_function_from_nuisances(ds, nuis, 6);
  CHECK(s.degenerate_outcome);
  CHECK(s.b_values.isZero(0.0));
  CHECK(aggregate_bias(s, 0.5).B == 0.0);
}

TEST_CASE("forest bias function is flat in a randomized experiment") {
  dataio::SynthSpec spec = dataio::named_dgp("randomized", 2000);
  const auto s = dataio::generate_synthetic(spec, 16);
  RunConfig cfg;
  cfg.forest.n_trees = 200;
  const auto summary = bias_function_summary(s.dataset, cfg, 3);
  CHECK(std::abs(summary.mean) < 0.02);
  std::size_t total = 0;
  for (const auto& b : summary.histogram) total += b.count;
  CHECK(total == 2000);
  CHECK(summary.q025 <= summary.median);
  CHECK(summary.median <= summary.q975);
}

TEST_CASE("aggregate bias recovers the coefficient product on a linear design") {
  dataio::SynthSpec spec = dataio::named_dgp("product_sparse", 5000);
  spec.beta.setZero();
  spec.gamma.setZero();
  spec.beta[0] = 1.0;
  spec.gamma[0] = 0.1;
  std::vector<double> draws;
  double target_sum = 0.0;
  for (int r = 0; r < 200; ++r) {
    const auto s = dataio::generate_synthetic(spec, 500 + static_cast<std::uint64_t>(r));
    const auto nuis = NuisanceEstimates::make(s.dataset, s.e_true, s.mu0_true, s.mu1_true, 1e-6);
    const auto summary = bias_function_from_nuisances(s.dataset, nuis, 10);
    const double p = nuis.phat;
    draws.push_back(aggregate_bias(summary, p).B);
    target_sum += 0.1 / (p * (1 - p));
  }
  const double target = target_sum / 200.0;
  CHECK(std::abs(testing::mc_mean(draws) - target) < 3 * testing::mc_se(draws));
}

TEST_CASE("aggregate bias tracks naive minus the doubly robust estimate") {
  const auto s = dataio::generate_synthetic(dataio::named_dgp("confounded_linear", 20000), 17);
  const auto nuis = NuisanceEstimates::make(s.dataset, s.e_true, s.mu0_true, s.mu1_true, 1e-6);
  const auto summary = bias_function_from_nuisances(s.dataset, nuis, 10);
  const double naive = estimators::estimate_naive(s.dataset).value;
  const double dre = estimators::dre_from_nuisances(s.dataset, nuis).value;
  const auto agg = aggregate_bias(summary, nuis.phat, naive, dre);
  REQUIRE(agg.naive_minus_reference);
  CHECK(*agg.naive_minus_reference == naive - dre);
  CHECK(agg.B * *agg.naive_minus_reference > 0.0);
  CHECK(std::abs(agg.B - *agg.naive_minus_reference) <= 0.3 * std::abs(*agg.naive_minus_reference));
  CHECK_ERROR(aggregate_bias(summary, 1.0), ErrorCode::InvalidArgument);
}

TEST_CASE("report on a small dataset has one finite row and is reproducible") {
  dataio::SynthSpec spec = dataio::named_dgp("randomized", 20);
  spec.d = 2;
  spec.beta = Eigen::VectorXd::Constant(2, 0.3);
  spec.gamma = Eigen::VectorXd::Zero(2);
  const auto s = dataio::generate_synthetic(spec, 18);
  RunConfig cfg;
  cfg.seed = 5;
  cfg.bootstrap_reps = 30;
  cfg.half_sample_reps = 10;
  cfg.forest.n_trees = 50;
  cfg.forest.min_leaf = 2;
  const auto rep = build_report(s.dataset, {Method::naive}, cfg, Estimand::ate());
  REQUIRE(rep.rows.size() == 1);
  const auto& row = rep.rows[0];
  CHECK(row.method == Method::naive);
  for (const Cell* c : {&row.estimate, &row.se, &row.trimmed, &row.sbb, &row.covsplit_mean, &row.covsplit_std}) {
    REQUIRE(c->value);
    CHECK(std::isfinite(*c->value));
  }
  CHECK(*row.estimate.value == estimators::estimate_naive(s.dataset).value);

  const auto json = report::report_to_json(rep, {"a", "b"});
  CHECK(json["rows"].size() == 1);
  for (const char* key : {"method", "estimate", "se", "trimmed", "sbb", "covsplit_mean", "covsplit_std"}) {
    CHECK(json["rows"][0].contains(key));
  }
  CHECK(json["rows"][0].size() == 7);
  CHECK(json.contains("bias_summary"));
  CHECK(json.contains("bounds"));
  CHECK(json.contains("meta"));
  const auto again = report::report_to_json(build_report(s.dataset, {Method::naive}, cfg, Estimand::ate()), {"a", "b"});
  CHECK(json.dump() == again.dump());

  CHECK_ERROR(build_report(s.dataset, {}, cfg, Estimand::ate()), ErrorCode::InvalidArgument);
}

TEST_CASE("report records a failing cell instead of aborting") {
  const Dataset ds = balanced_unit_variance(24, 19);
  RunConfig cfg;
  cfg.bootstrap_reps = 20;
  cfg.half_sample_reps = 5;
  cfg.dml_folds = 30;
  cfg.forest.n_trees = 20;
  const auto rep = build_report(ds, {Method::naive, Method::dmle}, cfg, Estimand::ate());
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].estimate.value);
  CHECK_FALSE(rep.rows[1].estimate.value);
  CHECK_FALSE(rep.rows[1].estimate.error.empty());
}

TEST_CASE("histogram CSV has the documented header") {
  const auto h = histogram(Eigen::VectorXd::LinSpaced(5, 0.0, 1.0), 2);
  const std::string csv = report::histogram_csv(h);
  CHECK(csv.rfind("bin_left,bin_right,count\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

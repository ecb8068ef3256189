#include <cmath>
#include <limits>

#include "helpers.hpp"

using namespace atekit;

TEST_CASE("validate_dataset builds a well-formed dataset") {
  std::vector<RawRecord> rows = {{1, 0, {0}}, {3, 0, {0}}, {2, 1, {1}}, {4, 1, {1}}};
  const Dataset ds = validate_dataset(rows);
  CHECK(ds.n() == 4);
  CHECK(ds.d() == 1);
  CHECK(ds.n_treated() == 2);
  CHECK(ds.n_control() == 2);
  CHECK(ds.Y()[1] == 3.0);
  CHECK(ds.column_names().size() == 1);
}

TEST_CASE("validate_dataset rejects invalid cells with location") {
  std::vector<RawRecord> rows = {{1, 0, {0}}, {3, 2, {0}}, {2, 1, {1}}};
  try {
    validate_dataset(rows);
    FAIL("expected NonBinaryTreatment");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonBinaryTreatment);
    CHECK(e.row() == std::optional<std::size_t>(1));
  }
  rows[1].w = 0;
  rows[2].y = std::nan("");
  try {
    validate_dataset(rows);
    FAIL("expected NonFiniteValue");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteValue);
    CHECK(e.row() == std::optional<std::size_t>(2));
    CHECK(e.column() == std::optional<std::size_t>(0));
  }
}

TEST_CASE("validate_dataset shape rules") {
  std::vector<RawRecord> ragged = {{1, 0, {0, 1}}, {3, 1, {0}}};
  CHECK_ERROR(validate_dataset(ragged), ErrorCode::ShapeMismatch);
  std::vector<RawRecord> one = {{1, 0, {0}}};
  CHECK_ERROR(validate_dataset(one), ErrorCode::TooFewRows);
}

TEST_CASE("single-cell corruption triggers exactly the matching error class") {
  Rng rng(11);
  std::uniform_int_distribution<int> pick_row(0, 19), pick_kind(0, 2);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<RawRecord> rows;
    for (int i = 0; i < 20; ++i) rows.push_back({static_cast<double>(i), static_cast<double>(i % 2), {0.5 * i, 1.0}});
    const int r = pick_row(rng);
    const int kind = pick_kind(rng);
    ErrorCode expected;
    if (kind == 0) {
      rows[static_cast<std::size_t>(r)].w = 0.5;
      expected = ErrorCode::NonBinaryTreatment;
    } else if (kind == 1) {
      rows[static_cast<std::size_t>(r)].x[1] = std::numeric_limits<double>::infinity();
      expected = ErrorCode::NonFiniteValue;
    } else {
      rows[static_cast<std::size_t>(r)].y = -std::numeric_limits<double>::infinity();
      expected = ErrorCode::NonFiniteValue;
    }
    CHECK(testing::error_of([&] { validate_dataset(rows); }) == std::optional(expected));
  }
}

TEST_CASE("Dataset::create enforces the same invariants") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 1, 2;
  Eigen::VectorXd W(3), Y(3);
  W << 0, 1, 1;
  Y << 1, 2, 3;
  CHECK_NOTHROW(Dataset::create(X, W, Y));
  Eigen::VectorXd Wshort(2);
  Wshort << 0, 1;
  CHECK_ERROR(Dataset::create(X, Wshort, Y), ErrorCode::ShapeMismatch);
  Eigen::VectorXd Ybad = Y;
  Ybad[0] = std::nan("");
  CHECK_ERROR(Dataset::create(X, W, Ybad), ErrorCode::NonFiniteValue);
}

TEST_CASE("EmptyArm is raised by estimation-side checks only") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 1, 2;
  const Dataset ds = Dataset::create(X, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3));
  CHECK_ERROR(ds.require_both_arms(), ErrorCode::EmptyArm);
}

TEST_CASE("subset keeps duplicates and order") {
  Eigen::MatrixXd X(4, 1);
  X << 10, 11, 12, 13;
  Eigen::VectorXd W(4), Y(4);
  W << 0, 1, 0, 1;
  Y << 0, 1, 2, 3;
  const Dataset ds = Dataset::create(X, W, Y, {"a"});
  const std::vector<std::size_t> rows = {3, 3, 0};
  const Dataset s = ds.subset(rows);
  CHECK(s.n() == 3);
  CHECK(s.X()(1, 0) == 13.0);
  CHECK(s.Y()[2] == 0.0);
  CHECK(s.n_treated() == 2);
  CHECK(s.column_names()[0] == "a");
}

TEST_CASE("weight_function examples") {
  Eigen::VectorXd e(2);
  e << 0.3, 0.7;
  CHECK(weight_function(Estimand::ate(), e) == Eigen::VectorXd::Ones(2));
  e << 0.5, 0.1;
  const Eigen::VectorXd ov = weight_function(Estimand::overlap(), e);
  CHECK(ov[0] == doctest::Approx(0.25));
  CHECK(ov[1] == doctest::Approx(0.09));
  Eigen::VectorXd e3(3);
  e3 << 0.05, 0.5, 0.95;
  const Eigen::VectorXd tr = weight_function(Estimand::trimmed(0.1), e3);
  CHECK(tr[0] == 0.0);
  CHECK(tr[1] == 1.0);
  CHECK(tr[2] == 0.0);
  CHECK(weight_function(Estimand::att(), e3) == e3);
}

TEST_CASE("overlap weights are bounded and peak nearest one half") {
  Rng rng(3);
  std::uniform_real_distribution<double> U(0.001, 0.999);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd e(25);
    for (auto& v : e) v = U(rng);
    const Eigen::VectorXd w = weight_function(Estimand::overlap(), e);
    const Eigen::VectorXd tr = weight_function(Estimand::trimmed(0.2), e);
    CHECK(w.minCoeff() >= 0.0);
    CHECK(w.maxCoeff() <= 1.0);
    CHECK(tr.minCoeff() >= 0.0);
    CHECK(tr.maxCoeff() <= 1.0);
    Eigen::Index amax, amin;
    w.maxCoeff(&amax);
    (e.array() - 0.5).abs().minCoeff(&amin);
    CHECK(amax == amin);
  }
}

TEST_CASE("Estimand::trimmed validates alpha") {
  CHECK_ERROR(Estimand::trimmed(0.0), ErrorCode::InvalidArgument);
  CHECK_ERROR(Estimand::trimmed(0.5), ErrorCode::InvalidArgument);
  CHECK_NOTHROW(Estimand::trimmed(0.1));
}

TEST_CASE("NuisanceEstimates::make clips and records the treated fraction") {
  Eigen::MatrixXd X(4, 1);
  X << 0, 1, 2, 3;
  Eigen::VectorXd W(4);
  W << 0, 1, 1, 1;
  const Dataset ds = Dataset::create(X, W, Eigen::VectorXd::Zero(4));
  Eigen::VectorXd e(4);
  e << 0.0, 0.5, 1.0, 0.995;
  const auto nuis = NuisanceEstimates::make(ds, e, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), 0.01);
  CHECK(nuis.ehat[0] == 0.01);
  CHECK(nuis.ehat[2] == 0.99);
  CHECK(nuis.ehat[3] == 0.99);
  CHECK(nuis.phat == 0.75);
  CHECK_ERROR(NuisanceEstimates::make(ds, e, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), 0.5),
              ErrorCode::InvalidArgument);
  Eigen::VectorXd neg = Eigen::VectorXd::Zero(4);
  neg[0] = -1.0;
  CHECK_ERROR(NuisanceEstimates::make(ds, e, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), 0.01, neg, neg),
              ErrorCode::InvalidArgument);
}

TEST_CASE("RunConfig validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.dml_folds = 1;
  CHECK_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
  cfg = RunConfig{};
  cfg.trim_alpha = 0.5;
  CHECK_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
  cfg = RunConfig{};
  cfg.bootstrap_reps = 0;
  CHECK_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("method and estimand names round-trip") {
  for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
  CHECK_ERROR(parse_method("lasso"), ErrorCode::UnknownMethod);
  CHECK(parse_methods("all").size() == 6);
  CHECK(parse_methods("naive,dre") == std::vector<Method>{Method::naive, Method::dre});
  CHECK(parse_estimand("att") == Estimand::att());
}

TEST_CASE("quantile_type7 matches linear interpolation") {
  const std::vector<double> v = {4, 1, 3, 2};
  CHECK(quantile_type7(v, 0.0) == 1.0);
  CHECK(quantile_type7(v, 1.0) == 4.0);
  CHECK(quantile_type7(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile_type7(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("derive_seed gives distinct streams") {
  CHECK(derive_seed(1, stream::bootstrap, 0) != derive_seed(1, stream::bootstrap, 1));
  CHECK(derive_seed(1, stream::bootstrap, 0) != derive_seed(1, stream::half_sample, 0));
  CHECK(derive_seed(1, stream::bootstrap, 0) == derive_seed(1, stream::bootstrap, 0));
}

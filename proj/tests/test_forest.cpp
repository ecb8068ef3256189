#include <cmath>

#include "atekit/forest.hpp"
#include "helpers.hpp"

using namespace atekit;
using namespace atekit::forest;

namespace {

ForestParams small(int trees) {
  ForestParams p;
  p.n_trees = trees;
  return p;
}

}  // namespace

TEST_CASE("constant target predicts the constant everywhere") {
  Rng rng(1);
  const Eigen::MatrixXd X = testing::gaussian_matrix(60, 3, rng);
  const auto f = fit_forest(X, Eigen::VectorXd::Constant(60, 2.5), small(20), 7);
  const Eigen::MatrixXd Xq = testing::gaussian_matrix(10, 3, rng);
  CHECK((f.predict(Xq).array() == 2.5).all());
  const auto oob = predict_oob(f, X);
  CHECK((oob.values.array() == 2.5).all());
}

TEST_CASE("step function is learned out of bag") {
  Rng rng(2);
  const Eigen::MatrixXd X = testing::gaussian_matrix(200, 3, rng);
  std::normal_distribution<double> N(0.0, 0.3);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) y[i] = (X(i, 0) > 0 ? 2.0 : 0.0) + N(rng);
  const auto f = fit_forest(X, y, small(200), 3);
  const auto oob = predict_oob(f, X);
  const double mse = (oob.values - y).squaredNorm() / 200.0;
  const double var = (y.array() - y.mean()).square().mean();
  CHECK(mse < var / 4.0);
}

TEST_CASE("same inputs and seed give bitwise identical forests") {
  Rng rng(3);
  const Eigen::MatrixXd X = testing::gaussian_matrix(80, 4, rng);
  const Eigen::VectorXd y = X.col(1).array().square();
  const auto a = fit_forest(X, y, small(30), 11), b = fit_forest(X, y, small(30), 11);
  const Eigen::MatrixXd Xq = testing::gaussian_matrix(20, 4, rng);
  const Eigen::VectorXd pa = a.predict(Xq), pb = b.predict(Xq);
  for (Eigen::Index i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
  CHECK(predict_oob(a, X).values == predict_oob(b, X).values);
  const auto c = fit_forest(X, y, small(30), 12);
  CHECK(c.predict(Xq) != pa);
}

TEST_CASE("leaves respect min_leaf and predictions stay in the outcome range") {
  Rng rng(4);
  const Eigen::MatrixXd X = testing::gaussian_matrix(100, 5, rng);
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::VectorXd y(100);
  for (auto& v : y) v = N(rng);
  ForestParams p = small(25);
  p.min_leaf = 7;
  const auto f = fit_forest(X, y, p, 5);
  for (const auto& t : f.trees)
    for (const auto& node : t.nodes())
      if (node.feature < 0) CHECK(node.count >= 7);
  const Eigen::MatrixXd Xq = 3.0 * testing::gaussian_matrix(200, 5, rng);
  const Eigen::VectorXd pq = f.predict(Xq);
  CHECK(pq.minCoeff() >= y.minCoeff());
  CHECK(pq.maxCoeff() <= y.maxCoeff());
  for (const auto& t : f.trees) {
    for (Eigen::Index i = 0; i < Xq.rows(); ++i) {
      const Eigen::RowVectorXd row = Xq.row(i);
      const double v = t.predict(row);
      CHECK(v >= y.minCoeff());
      CHECK(v <= y.maxCoeff());
    }
  }
}

TEST_CASE("binary targets give predictions in [0, 1]") {
  Rng rng(5);
  const Eigen::MatrixXd X = testing::gaussian_matrix(120, 2, rng);
  Eigen::VectorXd w(120);
  for (int i = 0; i < 120; ++i) w[i] = X(i, 0) + 0.5 * X(i, 1) > 0 ? 1.0 : 0.0;
  const auto f = fit_forest(X, w, small(50), 2);
  const Eigen::VectorXd p = f.predict(testing::gaussian_matrix(50, 2, rng));
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.maxCoeff() <= 1.0);
}

TEST_CASE("mtry default resolves to ceil(d / 3)") {
  Rng rng(6);
  const Eigen::MatrixXd X = testing::gaussian_matrix(40, 7, rng);
  const auto f = fit_forest(X, X.col(0), small(2), 1);
  CHECK(f.params.mtry == 3);
}

TEST_CASE("a single tree leaves about e^-1 of units out of bag") {
  Rng rng(7);
  std::vector<double> frac;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Eigen::MatrixXd X = testing::gaussian_matrix(300, 2, rng);
    const auto f = fit_forest(X, X.col(0), small(1), s);
    const auto oob = predict_oob(f, X);
    frac.push_back(1.0 - static_cast<double>(oob.n_flagged) / 300.0);
  }
  const double expected = std::pow(1.0 - 1.0 / 300.0, 300.0);
  CHECK(std::abs(testing::mc_mean(frac) - expected) < 3 * testing::mc_se(frac));
}

TEST_CASE("OOB error tracks held-out error for a large forest") {
  Rng rng(8);
  std::normal_distribution<double> N(0.0, 0.5);
  auto target = [](const Eigen::MatrixXd& X, Eigen::Index i) { return std::sin(X(i, 0)) + 0.5 * X(i, 1); };
  const Eigen::MatrixXd X = testing::gaussian_matrix(400, 3, rng);
  const Eigen::MatrixXd Xh = testing::gaussian_matrix(2000, 3, rng);
  Eigen::VectorXd y(400), yh(2000);
  for (Eigen::Index i = 0; i < 400; ++i) y[i] = target(X, i) + N(rng);
  for (Eigen::Index i = 0; i < 2000; ++i) yh[i] = target(Xh, i) + N(rng);
  const auto f = fit_forest(X, y, small(300), 9);
  const double oob = (predict_oob(f, X).values - y).squaredNorm() / 400.0;
  const double held = (f.predict(Xh) - yh).squaredNorm() / 2000.0;
  CHECK(std::abs(oob - held) <= 0.2 * held);
}

TEST_CASE("too few rows for min_leaf") {
  Rng rng(9);
  const Eigen::MatrixXd X = testing::gaussian_matrix(9, 2, rng);
  CHECK_ERROR(fit_forest(X, X.col(0), small(5), 1), ErrorCode::TooFewRows);
}

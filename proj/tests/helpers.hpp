#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "atekit/core.hpp"
#include "atekit/error.hpp"
#include "atekit/rng.hpp"

namespace testing {

/// Runs fn and returns the ErrorCode it threw, or nullopt.
inline std::optional<atekit::ErrorCode> error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const atekit::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

#define CHECK_ERROR(expr, code_) CHECK(::testing::error_of([&] { (void)(expr); }) == std::optional(code_))

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index n, Eigen::Index d, atekit::Rng& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = N(rng);
  return X;
}

inline double mc_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double mc_se(const std::vector<double>& v) {
  const double m = mc_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace testing

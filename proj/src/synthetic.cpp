#include <algorithm>
#include <cmath>

#include "atekit/dataio.hpp"
#include "atekit/rng.hpp"

namespace atekit::dataio {

void SynthSpec::validate() const {
  if (n < 2 || d < 1) throw Error(ErrorCode::InvalidArgument, "synthetic design needs n >= 2 and d >= 1");
  if (static_cast<std::size_t>(beta.size()) != d || static_cast<std::size_t>(gamma.size()) != d) {
    throw Error(ErrorCode::InvalidArgument, "beta and gamma must have length d");
  }
  if (hetero && static_cast<std::size_t>(hetero->size()) != d) {
    throw Error(ErrorCode::InvalidArgument, "hetero must have length d");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(tau) || !(e_center > 0.0 && e_center < 1.0) || !std::isfinite(link_scale)) {
    throw Error(ErrorCode::InvalidArgument, "invalid synthetic design parameters");
  }
}

double SynthSpec::propensity(double index) const {
  const double z = link_scale * index;
  if (link == Link::logistic) {
    const double a = std::log(e_center / (1.0 - e_center));
    return 1.0 / (1.0 + std::exp(-(a + z)));
  }
  return std::clamp(e_center + z, 0.02, 0.98);
}

OracleSample generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed, stream::synthetic);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);

  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = normal(rng);
  }
  Eigen::VectorXd e(n), mu0(n), mu1(n), y0(n), y1(n), W(n), Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e[i] = spec.propensity(X.row(i).dot(spec.gamma));
    W[i] = unif(rng) < e[i] ? 1.0 : 0.0;
  }
  double sum_t = 0.0, count_t = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double effect = spec.tau + (spec.hetero ? X.row(i).dot(*spec.hetero) : 0.0);
    mu0[i] = X.row(i).dot(spec.beta);
    mu1[i] = mu0[i] + effect;
    const double eps = spec.noise_sd * normal(rng);
    y0[i] = mu0[i] + eps;
    y1[i] = mu1[i] + eps;
    Y[i] = W[i] > 0.5 ? y1[i] : y0[i];
    if (W[i] > 0.5) {
      sum_t += effect;
      count_t += 1.0;
    }
  }
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  OracleSample s{Dataset::create(std::move(X), std::move(W), std::move(Y), std::move(names)),
                 std::move(y0), std::move(y1), std::move(e), std::move(mu0), std::move(mu1), spec.tau,
                 count_t > 0.0 ? sum_t / count_t : spec.tau};
  return s;
}

SynthSpec named_dgp(const std::string& name, std::size_t n) {
  SynthSpec s;
  s.n = n;
  s.d = 10;
  s.tau = 1.0;
  s.noise_sd = 1.0;
  s.beta = Eigen::VectorXd::Constant(10, 0.3);
  s.gamma = Eigen::VectorXd::Constant(10, 0.3);
  if (name == "randomized") {
    s.gamma.setZero();
    s.link = SynthSpec::Link::clipped_linear;
  } else if (name == "confounded_linear") {
    s.link = SynthSpec::Link::logistic;
  } else if (name == "poor_overlap") {
    s.gamma.setZero();
    s.gamma.head(2).setConstant(0.6);
    s.link = SynthSpec::Link::clipped_linear;
  } else if (name == "well_overlap") {
    s.link = SynthSpec::Link::clipped_linear;
    s.link_scale = 0.03;
  } else if (name == "product_sparse") {
    s.beta.setZero();
    s.gamma.setZero();
    s.beta[0] = 1.0;
    s.gamma[0] = 0.2;
    s.link = SynthSpec::Link::clipped_linear;
  } else {
    throw Error(ErrorCode::UnknownDgp, "unknown design '" + name + "'");
  }
  return s;
}

const std::vector<std::string>& dgp_names() {
  static const std::vector<std::string> names = {"randomized", "confounded_linear", "poor_overlap", "well_overlap",
                                                 "product_sparse"};
  return names;
}

}  // namespace atekit::dataio

#include "atekit/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "atekit/parallel.hpp"
#include "atekit/rng.hpp"

namespace atekit::forest {

namespace {

// Mean that is exactly v when all values equal v, clamped to [min, max] so
// rounding can never push a prediction outside the training range.
double bounded_mean(double sum, std::size_t count, double lo, double hi) {
  if (lo == hi) return lo;
  return std::clamp(sum / static_cast<double>(count), lo, hi);
}

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int mtry, int min_leaf, Rng& rng)
      : x_(X), y_(y), mtry_(mtry), min_leaf_(static_cast<std::size_t>(min_leaf)), rng_(rng) {
    features_.resize(static_cast<std::size_t>(X.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<TreeNode> build(std::vector<std::uint32_t> sample) {
    nodes_.clear();
    grow(sample);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::uint32_t>& idx) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0, lo = y_[idx.front()], hi = lo;
    for (auto i : idx) {
      const double v = y_[i];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    TreeNode node;
    node.count = static_cast<int>(idx.size());
    node.value = bounded_mean(sum, idx.size(), lo, hi);

    Split best;
    if (idx.size() >= 2 * min_leaf_ && lo < hi) best = find_split(idx, sum);
    if (best.feature < 0) {
      nodes_[static_cast<std::size_t>(id)] = node;
      return id;
    }

    std::vector<std::uint32_t> left, right;
    left.reserve(best.n_left);
    right.reserve(idx.size() - best.n_left);
    for (auto i : idx) {
      (x_(i, best.feature) <= best.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    node.feature = best.feature;
    node.threshold = best.threshold;
    nodes_[static_cast<std::size_t>(id)] = node;
    const int l = grow(left);
    const int r = grow(right);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t n_left = 0;
  };

  Split find_split(const std::vector<std::uint32_t>& idx, double total) {
    const std::size_t m = idx.size();
    const std::size_t d = features_.size();
    const std::size_t tries = std::min<std::size_t>(static_cast<std::size_t>(mtry_), d);
    // Partial Fisher-Yates: the first `tries` entries are a uniform sample.
    for (std::size_t k = 0; k < tries; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, d - 1);
      std::swap(features_[k], features_[pick(rng_)]);
    }
    const double base = total * total / static_cast<double>(m);
    Split best;
    std::vector<std::pair<double, double>> col(m);
    for (std::size_t k = 0; k < tries; ++k) {
      const int f = features_[k];
      for (std::size_t t = 0; t < m; ++t) col[t] = {x_(idx[t], f), y_[idx[t]]};
      std::sort(col.begin(), col.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (col.front().first == col.back().first) continue;
      double left_sum = 0.0;
      for (std::size_t t = 0; t + 1 < m; ++t) {
        left_sum += col[t].second;
        const std::size_t nl = t + 1;
        if (nl < min_leaf_) continue;
        if (m - nl < min_leaf_) break;
        if (col[t].first == col[t + 1].first) continue;
        const double right_sum = total - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(nl) +
                             right_sum * right_sum / static_cast<double>(m - nl) - base;
        if (score > best.gain) {
          double thr = 0.5 * (col[t].first + col[t + 1].first);
          if (!(thr < col[t + 1].first)) thr = col[t].first;
          best = {f, thr, score, nl};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  int mtry_;
  std::size_t min_leaf_;
  Rng& rng_;
  std::vector<int> features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Forest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params,
                  std::uint64_t seed) {
  if (X.rows() != y.size()) throw Error(ErrorCode::ShapeMismatch, "X and y row counts differ");
  if (params.n_trees < 1 || params.min_leaf < 1 || params.mtry < 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid forest parameters");
  }
  const std::size_t n = static_cast<std::size_t>(y.size());
  if (n < 2 * static_cast<std::size_t>(params.min_leaf) || X.cols() < 1) {
    throw Error(ErrorCode::TooFewRows, "forest needs at least 2 * min_leaf rows and 1 column");
  }

  Forest forest;
  forest.params = params;
  if (forest.params.mtry == 0) {
    forest.params.mtry = static_cast<int>((X.cols() + 2) / 3);
  }
  forest.params.mtry = std::min<int>(forest.params.mtry, static_cast<int>(X.cols()));
  forest.seed = seed;
  forest.y_min = y.minCoeff();
  forest.y_max = y.maxCoeff();

  const auto n_trees = static_cast<std::size_t>(params.n_trees);
  std::vector<std::vector<TreeNode>> nodes(n_trees);
  forest.bootstrap_indices.resize(n_trees);
  parallel_for(n_trees, [&](std::size_t t) {
    Rng rng = make_rng(seed, stream::forest_tree, t);
    std::uniform_int_distribution<std::uint32_t> draw(0, static_cast<std::uint32_t>(n - 1));
    std::vector<std::uint32_t> sample(n);
    for (auto& s : sample) s = draw(rng);
    std::sort(sample.begin(), sample.end());
    forest.bootstrap_indices[t] = sample;
    TreeBuilder builder(X, y, forest.params.mtry, params.min_leaf, rng);
    nodes[t] = builder.build(std::move(sample));
  });
  forest.trees.reserve(n_trees);
  for (auto& nd : nodes) forest.trees.emplace_back(std::move(nd));
  return forest;
}

Eigen::VectorXd Forest::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  const Eigen::MatrixXd xt = X.transpose();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double* row = xt.col(i).data();
    double sum = 0.0, lo = 0.0, hi = 0.0;
    for (std::size_t t = 0; t < trees.size(); ++t) {
      const double v = trees[t].predict(row);
      sum += v;
      lo = t == 0 ? v : std::min(lo, v);
      hi = t == 0 ? v : std::max(hi, v);
    }
    out[i] = bounded_mean(sum, trees.size(), lo, hi);
  }
  return out;
}

OobPrediction predict_oob(const Forest& forest, const Eigen::MatrixXd& X_train) {
  const auto n = static_cast<std::size_t>(X_train.rows());
  std::vector<double> sum(n, 0.0), lo(n, 0.0), hi(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  std::vector<char> in_bag(n);
  const Eigen::MatrixXd xt = X_train.transpose();
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto i : forest.bootstrap_indices[t]) {
      if (i < n) in_bag[i] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      const double v = forest.trees[t].predict(xt.col(static_cast<Eigen::Index>(i)).data());
      sum[i] += v;
      lo[i] = count[i] == 0 ? v : std::min(lo[i], v);
      hi[i] = count[i] == 0 ? v : std::max(hi[i], v);
      ++count[i];
    }
  }
  OobPrediction out;
  out.values.resize(static_cast<Eigen::Index>(n));
  out.flagged.assign(n, false);
  Eigen::VectorXd fallback;
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] > 0) {
      out.values[static_cast<Eigen::Index>(i)] = bounded_mean(sum[i], count[i], lo[i], hi[i]);
      continue;
    }
    if (fallback.size() == 0) fallback = forest.predict(X_train);
    out.values[static_cast<Eigen::Index>(i)] = fallback[static_cast<Eigen::Index>(i)];
    out.flagged[i] = true;
    ++out.n_flagged;
  }
  return out;
}

}  // namespace atekit::forest

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hvaq/error.hpp"
#include "hvaq/random.hpp"
#include "hvaq/regressors/feature_matrix.hpp"

namespace hvaq {

struct TreeParams {
  std::optional<std::size_t> max_depth;     // nullopt: grow until pure or min leaf
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  std::optional<std::size_t> max_features;  // features tried per split; nullopt: all
};

/// CART regression tree stored as a flat node array; node 0 is the root.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean target of the node's samples
    std::size_t samples = 0;

    bool leaf() const { return feature < 0; }
  };

  std::vector<Node> nodes;
  std::size_t n_features = 0;

  double predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].leaf()) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      const auto& n = nodes[static_cast<std::size_t>(i)];
      if (!n.leaf()) {
        stack.emplace_back(n.left, d + 1);
        stack.emplace_back(n.right, d + 1);
      }
    }
    return best;
  }

  std::size_t leaves() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.leaf(); }));
  }
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -std::numeric_limits<double>::infinity();  // S_L^2/n_L + S_R^2/n_R
};

namespace detail {

// Greedy best split of the samples `idx` over `features` (ascending). Scores
// within a relative 1e-12 of the incumbent count as ties; the first
// candidate (lowest feature, then lowest threshold) wins ties.
inline Split best_split(const FeatureMatrix& x, std::span<const double> y, std::span<const std::size_t> idx,
                        std::span<const std::size_t> features, std::size_t min_leaf) {
  const std::size_t m = idx.size();
  double total = 0.0;
  for (auto i : idx) total += y[i];
  const double parent = total * total / static_cast<double>(m);
  Split best;
  best.score = parent;
  std::vector<std::size_t> order(idx.begin(), idx.end());
  for (auto f : features) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
    });
    double left = 0.0;
    for (std::size_t k = 1; k < m; ++k) {
      left += y[order[k - 1]];
      const double lo = x(order[k - 1], f), hi = x(order[k], f);
      if (!(lo < hi) || k < min_leaf || m - k < min_leaf) continue;
      const double right = total - left;
      const double score =
          left * left / static_cast<double>(k) + right * right / static_cast<double>(m - k);
      if (score > best.score + 1e-12 * std::abs(best.score) + 1e-300) {
        double thr = lo + (hi - lo) / 2.0;
        if (!(thr < hi)) thr = lo;
        best = {static_cast<int>(f), thr, score};
      }
    }
  }
  return best;
}

}  // namespace detail

/// Fits a tree on the rows listed in `idx` (repeats allowed, as in bootstrap
/// samples). `rng` is only used when params.max_features limits the features.
inline RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> y, std::vector<std::size_t> idx,
                               const TreeParams& params, Rng* rng = nullptr) {
  if (x.rows() != y.size()) throw SchemaError("fit_tree: feature rows and targets differ in length");
  if (idx.empty() || x.cols() == 0) throw SchemaError("fit_tree: empty data");
  const std::size_t p = x.cols();
  const std::size_t n_try = std::clamp<std::size_t>(params.max_features.value_or(p), 1, p);
  if (n_try < p && rng == nullptr) throw ConfigError("fit_tree: feature subsampling requires an rng");
  const std::size_t min_leaf = std::max<std::size_t>(1, params.min_samples_leaf);

  RegressionTree tree;
  tree.n_features = p;
  struct Work {
    int node;
    std::size_t begin, end, depth;
  };
  std::vector<Work> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, 0, idx.size(), 0});
  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});

  while (!stack.empty()) {
    const Work w = stack.back();
    stack.pop_back();
    std::span<std::size_t> span(idx.data() + w.begin, w.end - w.begin);
    double sum = 0.0;
    for (auto i : span) sum += y[i];
    auto& node = tree.nodes[static_cast<std::size_t>(w.node)];
    node.samples = span.size();
    node.value = sum / static_cast<double>(span.size());

    const bool depth_ok = !params.max_depth || w.depth < *params.max_depth;
    const bool pure = std::all_of(span.begin(), span.end(), [&](std::size_t i) { return y[i] == y[span[0]]; });
    if (!depth_ok || pure || span.size() < std::max<std::size_t>(params.min_samples_split, 2 * min_leaf)) continue;

    std::vector<std::size_t> features = all_features;
    if (n_try < p) {
      for (std::size_t k = 0; k < n_try; ++k) {
        std::swap(features[k], features[k + uniform_index(*rng, p - k)]);
      }
      features.resize(n_try);
      std::sort(features.begin(), features.end());
    }
    const Split s = detail::best_split(x, y, span, features, min_leaf);
    if (s.feature < 0) continue;

    auto mid = std::stable_partition(span.begin(), span.end(), [&](std::size_t i) {
      return x(i, static_cast<std::size_t>(s.feature)) <= s.threshold;
    });
    const std::size_t n_left = static_cast<std::size_t>(mid - span.begin());
    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& parent = tree.nodes[static_cast<std::size_t>(w.node)];
    parent.feature = s.feature;
    parent.threshold = s.threshold;
    parent.left = left;
    parent.right = left + 1;
    stack.push_back({left + 1, w.begin + n_left, w.end, w.depth + 1});
    stack.push_back({left, w.begin, w.begin + n_left, w.depth + 1});
  }
  return tree;
}

inline RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> y, const TreeParams& params,
                               Rng* rng = nullptr) {
  std::vector<std::size_t> idx(x.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return fit_tree(x, y, std::move(idx), params, rng);
}

inline std::vector<double> predict(const RegressionTree& tree, const FeatureMatrix& x) {
  if (x.cols() != tree.n_features) throw SchemaError("tree predict: column count mismatch");
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = tree.predict(x.row(r));
  return out;
}

}  // namespace hvaq

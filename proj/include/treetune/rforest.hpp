#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace treetune {

// Regression tree over the encoded [0,1]^k cube. Nodes carry their axis-aligned
// cell so marginal predictions can integrate out dimensions by cell volume.
struct PartitionTree {
  struct Node {
    bool is_leaf = true;
    int dim = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    double mean = 0.0;
    long count = 0;
    std::vector<double> lo, hi;  // cell bounds
  };
  std::vector<Node> nodes;
  int root = 0;
  std::size_t n_dims = 0;

  double predict(const std::vector<double>& x) const {
    int at = root;
    while (!nodes[at].is_leaf)
      at = x[nodes[at].dim] < nodes[at].threshold ? nodes[at].left : nodes[at].right;
    return nodes[at].mean;
  }
};

struct ForestParams {
  int n_trees = 100;
  int min_leaf = 5;
  int max_features = 0;  // per-split candidate dims; 0 = all
  bool bootstrap = true;
};

namespace detail {

struct TreeFitter {
  const std::vector<std::vector<double>>& xs;
  const std::vector<double>& ys;
  const ForestParams& params;
  std::mt19937_64& rng;
  PartitionTree& tree;

  int build(std::vector<int> idx, std::vector<double> lo, std::vector<double> hi) {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double sum = 0.0;
    for (int i : idx) sum += ys[i];
    tree.nodes[id].count = static_cast<long>(idx.size());
    tree.nodes[id].mean = idx.empty() ? 0.0 : sum / static_cast<double>(idx.size());
    tree.nodes[id].lo = lo;
    tree.nodes[id].hi = hi;
    if (static_cast<int>(idx.size()) < 2 * params.min_leaf) return id;

    // candidate dims, optionally subsampled per split
    std::vector<int> dims(tree.n_dims);
    std::iota(dims.begin(), dims.end(), 0);
    if (params.max_features > 0 &&
        params.max_features < static_cast<int>(dims.size())) {
      std::shuffle(dims.begin(), dims.end(), rng);
      dims.resize(params.max_features);
      std::sort(dims.begin(), dims.end());
    }

    double total_sum = sum, total_sq = 0.0;
    for (int i : idx) total_sq += ys[i] * ys[i];
    const double n = static_cast<double>(idx.size());
    const double parent_sse = total_sq - total_sum * total_sum / n;

    int best_dim = -1;
    double best_threshold = 0.0, best_sse = parent_sse - 1e-12;
    std::vector<std::pair<double, double>> vals;
    for (int d : dims) {
      vals.clear();
      for (int i : idx) vals.emplace_back(xs[i][d], ys[i]);
      std::sort(vals.begin(), vals.end());
      double lsum = 0.0, lsq = 0.0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        lsum += vals[i].second;
        lsq += vals[i].second * vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        double nl = static_cast<double>(i + 1), nr = n - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        double rsum = total_sum - lsum, rsq = total_sq - lsq;
        double sse = (lsq - lsum * lsum / nl) + (rsq - rsum * rsum / nr);
        if (sse < best_sse - 1e-12) {
          best_sse = sse;
          best_dim = d;
          best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }
    if (best_dim < 0) return id;

    std::vector<int> left, right;
    for (int i : idx)
      (xs[i][best_dim] < best_threshold ? left : right).push_back(i);
    tree.nodes[id].is_leaf = false;
    tree.nodes[id].dim = best_dim;
    tree.nodes[id].threshold = best_threshold;
    auto lhi = hi, rlo = lo;
    lhi[best_dim] = best_threshold;
    rlo[best_dim] = best_threshold;
    int l = build(std::move(left), lo, lhi);
    int r = build(std::move(right), rlo, hi);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

}  // namespace detail

inline PartitionTree fit_partition_tree(const std::vector<std::vector<double>>& xs,
                                        const std::vector<double>& ys,
                                        const ForestParams& params,
                                        std::mt19937_64& rng,
                                        const std::vector<int>& sample) {
  PartitionTree tree;
  tree.n_dims = xs.empty() ? 0 : xs[0].size();
  detail::TreeFitter fitter{xs, ys, params, rng, tree};
  fitter.build(sample, std::vector<double>(tree.n_dims, 0.0),
               std::vector<double>(tree.n_dims, 1.0));
  return tree;
}

inline std::vector<PartitionTree> fit_forest(
    const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
    const ForestParams& params, std::uint64_t seed) {
  if (xs.size() != ys.size() || xs.empty())
    throw std::invalid_argument("forest: need matching nonempty x/y");
  std::mt19937_64 rng(seed ^ 0xe7037ed1a0b428dbULL);
  std::vector<PartitionTree> forest;
  forest.reserve(params.n_trees);
  const int n = static_cast<int>(xs.size());
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int t = 0; t < params.n_trees; ++t) {
    std::vector<int> sample(n);
    if (params.bootstrap)
      for (int i = 0; i < n; ++i) sample[i] = pick(rng);
    else
      std::iota(sample.begin(), sample.end(), 0);
    forest.push_back(fit_partition_tree(xs, ys, params, rng, sample));
  }
  return forest;
}

// Mean and inter-tree standard deviation of the forest prediction.
inline std::pair<double, double> forest_predict(
    const std::vector<PartitionTree>& forest, const std::vector<double>& x) {
  double sum = 0.0, sq = 0.0;
  for (const auto& t : forest) {
    double p = t.predict(x);
    sum += p;
    sq += p * p;
  }
  double n = static_cast<double>(forest.size());
  double mean = sum / n;
  double var = std::max(0.0, sq / n - mean * mean);
  return {mean, std::sqrt(var)};
}

}  // namespace treetune

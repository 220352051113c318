#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "treetune/rforest.hpp"
#include "treetune/space.hpp"
#include "treetune/tuners/types.hpp"

namespace treetune {

struct MarginalEntry {
  std::vector<std::size_t> subset;  // parameter indices, |U| in {1, 2}
  std::vector<std::string> names;
  double fraction = 0.0;
  bool filtered = false;  // below the report threshold (kept in totals)
};

struct MarginalReport {
  std::vector<MarginalEntry> entries;
  double threshold = 0.005;
};

// Marginal prediction of one tree: dimensions outside U are integrated out by
// cell-volume weighting in a single traversal.
inline double marginal_prediction(const PartitionTree& tree,
                                  const std::vector<std::size_t>& subset,
                                  const std::vector<double>& values) {
  struct Walker {
    const PartitionTree& tree;
    const std::vector<std::size_t>& subset;
    const std::vector<double>& values;

    double value_for(int dim) const {
      for (std::size_t i = 0; i < subset.size(); ++i)
        if (static_cast<int>(subset[i]) == dim) return values[i];
      return -1.0;
    }
    double walk(int at, double weight) const {
      const auto& n = tree.nodes[at];
      if (n.is_leaf) return weight * n.mean;
      double v = value_for(n.dim);
      if (v >= 0.0)
        return walk(v < n.threshold ? n.left : n.right, weight);
      double span = n.hi[n.dim] - n.lo[n.dim];
      double wl = span > 0 ? (n.threshold - n.lo[n.dim]) / span : 0.5;
      return walk(n.left, weight * wl) + walk(n.right, weight * (1.0 - wl));
    }
  };
  return Walker{tree, subset, values}.walk(tree.root, 1.0);
}

namespace detail {

// Distinct interior cut points per dimension; cells between them are the
// constancy regions of the tree's marginals.
inline std::vector<std::vector<double>> cut_grid(const PartitionTree& tree) {
  std::vector<std::vector<double>> cuts(tree.n_dims);
  for (const auto& n : tree.nodes)
    if (!n.is_leaf) cuts[n.dim].push_back(n.threshold);
  for (auto& c : cuts) {
    c.push_back(0.0);
    c.push_back(1.0);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  return cuts;
}

// Variance of the marginal over subset U, integrating by the cut-point grid.
inline double marginal_variance(const PartitionTree& tree,
                                const std::vector<std::size_t>& subset,
                                const std::vector<std::vector<double>>& cuts,
                                double overall_mean) {
  std::vector<std::size_t> cell(subset.size(), 0);
  double var = 0.0;
  bool done = false;
  while (!done) {
    double weight = 1.0;
    std::vector<double> values(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const auto& c = cuts[subset[i]];
      weight *= c[cell[i] + 1] - c[cell[i]];
      values[i] = 0.5 * (c[cell[i]] + c[cell[i] + 1]);
    }
    double m = marginal_prediction(tree, subset, values);
    var += weight * (m - overall_mean) * (m - overall_mean);
    // advance the multi-index
    done = true;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (cell[i] + 2 < cuts[subset[i]].size()) {
        cell[i]++;
        std::fill(cell.begin(), cell.begin() + i, 0);
        done = false;
        break;
      }
    }
    if (subset.empty()) break;
  }
  return var;
}

inline double tree_total_variance(const PartitionTree& tree, double* mean_out) {
  double mean = 0.0;
  for (const auto& n : tree.nodes) {
    if (!n.is_leaf) continue;
    double vol = 1.0;
    for (std::size_t d = 0; d < tree.n_dims; ++d) vol *= n.hi[d] - n.lo[d];
    mean += vol * n.mean;
  }
  double var = 0.0;
  for (const auto& n : tree.nodes) {
    if (!n.is_leaf) continue;
    double vol = 1.0;
    for (std::size_t d = 0; d < tree.n_dims; ++d) vol *= n.hi[d] - n.lo[d];
    var += vol * (n.mean - mean) * (n.mean - mean);
  }
  if (mean_out) *mean_out = mean;
  return var;
}

inline std::vector<std::vector<std::size_t>> subsets_up_to(std::size_t k,
                                                           int max_order) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back({i});
  if (max_order >= 2)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) out.push_back({i, j});
  if (max_order >= 3)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        for (std::size_t l = j + 1; l < k; ++l) out.push_back({i, j, l});
  return out;
}

}  // namespace detail

// Fits a bootstrap regression forest on (encoded configuration -> fitness).
// Inactive conditional parameters sit at their default coordinate, which keeps
// the partition space rectangular.
inline std::vector<PartitionTree> fit_importance_forest(
    const std::vector<Trial>& trials, const ParamSpace& space, int n_trees,
    std::uint64_t seed) {
  if (trials.size() < 20)
    throw TunerError("importance forest needs at least 20 trials, got " +
                     std::to_string(trials.size()));
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  xs.reserve(trials.size());
  for (const auto& t : trials) {
    xs.push_back(space.encode(t.config));
    ys.push_back(t.fitness);
  }
  ForestParams params;
  params.n_trees = n_trees;
  params.min_leaf = 5;
  params.bootstrap = true;
  return fit_forest(xs, ys, params, seed);
}

// Functional-ANOVA decomposition: per tree, the subset variance of each
// marginal minus its contained lower-order terms, averaged over trees as a
// fraction of each tree's total variance. Entries under `threshold` are
// flagged, not removed from totals.
inline MarginalReport variance_decomposition(
    const std::vector<PartitionTree>& forest, const ParamSpace& space,
    int max_order = 2, double threshold = 0.005) {
  if (forest.empty()) throw TunerError("empty forest");
  const std::size_t k = forest[0].n_dims;
  auto subsets = detail::subsets_up_to(k, max_order);

  std::vector<double> fraction_sum(subsets.size(), 0.0);
  std::size_t informative_trees = 0;
  for (const auto& tree : forest) {
    double mean = 0.0;
    double total = detail::tree_total_variance(tree, &mean);
    if (total <= 1e-15) continue;  // constant tree contributes zero
    informative_trees++;
    auto cuts = detail::cut_grid(tree);

    std::map<std::vector<std::size_t>, double> vu;
    for (const auto& u : subsets) {
      double raw = detail::marginal_variance(tree, u, cuts, mean);
      double lower = 0.0;
      for (const auto& [w, v] : vu) {
        if (w.size() >= u.size()) continue;
        if (std::includes(u.begin(), u.end(), w.begin(), w.end())) lower += v;
      }
      vu[u] = std::max(0.0, raw - lower);
    }
    for (std::size_t s = 0; s < subsets.size(); ++s)
      fraction_sum[s] += vu[subsets[s]] / total;
  }

  MarginalReport report;
  report.threshold = threshold;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    MarginalEntry e;
    e.subset = subsets[s];
    for (auto i : e.subset) e.names.push_back(space[i].name);
    e.fraction = informative_trees
                     ? fraction_sum[s] / static_cast<double>(informative_trees)
                     : 0.0;
    e.filtered = e.fraction < threshold;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace treetune

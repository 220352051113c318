#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "treetune/detail/tree_builder.hpp"
#include "treetune/space.hpp"
#include "treetune/tree_model.hpp"

namespace treetune {

struct J48Params {
  double C = 0.25;  // pruning confidence, active when R == false
  long M = 2;       // minimum instances in a leaf
  long N = 3;       // folds for reduced-error pruning, active when R == true
  bool O = false;   // do not collapse
  bool R = false;   // reduced-error pruning
  bool B = false;   // binary splits only
  bool S = false;   // no subtree raising
  bool A = false;   // Laplace-smoothed leaf probabilities
  bool J = false;   // no MDL correction on numeric gains

  static J48Params from(const Configuration& c) {
    J48Params p;
    p.M = c.integer("M");
    p.R = c.boolean("R");
    if (p.R)
      p.N = c.integer("N");
    else
      p.C = c.real("C");
    p.O = c.boolean("O");
    p.B = c.boolean("B");
    p.S = c.boolean("S");
    p.A = c.boolean("A");
    p.J = c.boolean("J");
    return p;
  }
};

namespace detail {

// Pessimistic additional error count for a leaf with n instances and e errors
// at confidence CF (upper binomial confidence bound, normal approximation).
inline double added_errors(double n, double e, double cf) {
  if (n <= 0) return 0.0;
  if (cf >= 0.5) return e;
  if (e < 1e-12) return n * (1.0 - std::pow(cf, 1.0 / n));
  if (e < 1.0) {
    double base = n * (1.0 - std::pow(cf, 1.0 / n));
    return base + e * (added_errors(n, 1.0, cf) - base);
  }
  if (e + 0.5 >= n) return std::max(n - e, 0.0);
  boost::math::normal norm;
  double z = boost::math::quantile(norm, 1.0 - cf);
  double f = (e + 0.5) / n;
  double r = (f + z * z / (2.0 * n) +
              z * std::sqrt(f / n - f * f / n + z * z / (4.0 * n * n))) /
             (1.0 + z * z / n);
  return r * n - e;
}

inline double pessimistic_leaf_errors(const std::vector<long>& counts, double cf) {
  long n = 0, top = 0;
  for (long c : counts) {
    n += c;
    top = std::max(top, c);
  }
  double e = static_cast<double>(n - top);
  return e + added_errors(static_cast<double>(n), e, cf);
}

inline double pessimistic_subtree_errors(const BNode& node, double cf) {
  if (node.is_leaf) return pessimistic_leaf_errors(node.class_counts, cf);
  double sum = 0.0;
  for (const auto& c : node.children) sum += pessimistic_subtree_errors(*c, cf);
  return sum;
}

struct J48Candidate {
  bool found = false;
  int feature = -1;
  double gain = 0.0;
  double split_info = 0.0;
  Split split;

  double gain_ratio() const { return split_info > 1e-12 ? gain / split_info : 0.0; }
};

inline J48Candidate j48_numeric_candidate(const Dataset& ds,
                                          const std::vector<int>& idx,
                                          int feature, const J48Params& p) {
  J48Candidate cand;
  auto sorted = sorted_numeric(ds, idx, feature);
  const long n = static_cast<long>(sorted.size());
  if (n < 2 * p.M) return cand;
  auto impurity = [](const std::vector<long>& c, long t) { return entropy(c, t); };
  auto r = scan_numeric(sorted, ds.n_classes(), p.M, impurity);
  if (!r.found) return cand;

  long distinct = 1;
  for (long i = 1; i < n; ++i) distinct += sorted[i].first != sorted[i - 1].first;
  double gain = r.score * static_cast<double>(r.n_left + r.n_right) /
                static_cast<double>(idx.size());
  if (!p.J && distinct > 1)
    gain -= std::log2(static_cast<double>(distinct - 1)) / static_cast<double>(n);
  if (gain <= 1e-12) return cand;

  double fl = static_cast<double>(r.n_left) / static_cast<double>(n);
  double fr = static_cast<double>(r.n_right) / static_cast<double>(n);
  cand.found = true;
  cand.feature = feature;
  cand.gain = gain;
  cand.split_info = -(fl * std::log2(fl) + fr * std::log2(fr));
  cand.split.type = Split::Type::numeric;
  cand.split.feature = feature;
  cand.split.threshold = r.threshold;
  return cand;
}

inline J48Candidate j48_multiway_candidate(const Dataset& ds,
                                           const std::vector<int>& idx,
                                           int feature, const J48Params& p) {
  J48Candidate cand;
  const auto& col = ds.features[feature];
  const std::size_t n_levels = col.levels.size();
  const std::size_t n_classes = ds.n_classes();
  if (n_levels < 2) return cand;

  std::vector<std::vector<long>> branch(n_levels, std::vector<long>(n_classes, 0));
  std::vector<long> node_counts(n_classes, 0);
  long n = 0;
  for (int i : idx) {
    if (col.missing(i)) continue;
    branch[col.cat[i]][ds.labels[i]]++;
    node_counts[ds.labels[i]]++;
    n++;
  }
  if (n == 0) return cand;

  int big_enough = 0, nonempty = 0;
  double child_info = 0.0, split_info = 0.0;
  for (const auto& b : branch) {
    long bn = 0;
    for (long c : b) bn += c;
    if (bn == 0) continue;
    nonempty++;
    big_enough += bn >= p.M;
    double frac = static_cast<double>(bn) / static_cast<double>(n);
    child_info += frac * entropy(b, bn);
    split_info -= frac * std::log2(frac);
  }
  if (nonempty < 2 || big_enough < 2) return cand;

  double gain = (entropy(node_counts, n) - child_info) * static_cast<double>(n) /
                static_cast<double>(idx.size());
  if (gain <= 1e-12) return cand;
  cand.found = true;
  cand.feature = feature;
  cand.gain = gain;
  cand.split_info = split_info;
  cand.split.type = Split::Type::cat_multiway;
  cand.split.feature = feature;
  return cand;
}

inline J48Candidate j48_binary_cat_candidate(const Dataset& ds,
                                             const std::vector<int>& idx,
                                             int feature, const J48Params& p) {
  J48Candidate cand;
  auto impurity = [](const std::vector<long>& c, long t) { return entropy(c, t); };
  auto r = scan_categorical_subset(ds, idx, feature, p.M, impurity);
  if (!r.found) return cand;
  long n = r.n_left + r.n_right;
  double gain = r.score * static_cast<double>(n) / static_cast<double>(idx.size());
  if (gain <= 1e-12) return cand;
  double fl = static_cast<double>(r.n_left) / static_cast<double>(n);
  double fr = static_cast<double>(r.n_right) / static_cast<double>(n);
  cand.found = true;
  cand.feature = feature;
  cand.gain = gain;
  cand.split_info = -(fl * std::log2(fl) + fr * std::log2(fr));
  cand.split.type = Split::Type::cat_subset;
  cand.split.feature = feature;
  cand.split.in_left = r.in_left;
  return cand;
}

// Gain-ratio selection, C4.5 style: among candidates whose gain reaches the
// average positive gain, pick the best gain ratio.
inline J48Candidate j48_select_split(const Dataset& ds,
                                     const std::vector<int>& idx,
                                     const J48Params& p) {
  std::vector<J48Candidate> cands;
  for (int f = 0; f < static_cast<int>(ds.n_features()); ++f) {
    J48Candidate c;
    if (ds.features[f].kind == FeatureColumn::Kind::numeric)
      c = j48_numeric_candidate(ds, idx, f, p);
    else if (p.B)
      c = j48_binary_cat_candidate(ds, idx, f, p);
    else
      c = j48_multiway_candidate(ds, idx, f, p);
    if (c.found) cands.push_back(std::move(c));
  }
  if (cands.empty()) return {};
  double avg_gain = 0.0;
  for (const auto& c : cands) avg_gain += c.gain;
  avg_gain /= static_cast<double>(cands.size());

  J48Candidate best;
  for (auto& c : cands) {
    if (c.gain + 1e-12 < avg_gain) continue;
    if (!best.found || c.gain_ratio() > best.gain_ratio() + 1e-12) best = c;
  }
  return best;
}

inline std::unique_ptr<BNode> grow_j48(const Dataset& ds, std::vector<int> idx,
                                       const J48Params& p) {
  auto node = std::make_unique<BNode>();
  node->indices = std::move(idx);
  node->class_counts = count_classes(ds, node->indices);
  if (node->total() < 2 * p.M || is_pure(node->class_counts)) return node;

  auto cand = j48_select_split(ds, node->indices, p);
  if (!cand.found) return node;
  node->is_leaf = false;
  node->split = cand.split;
  std::size_t n_children =
      cand.split.type == Split::Type::cat_multiway
          ? ds.features[cand.split.feature].levels.size()
          : 2;
  auto parts = partition(*node, ds, n_children);
  for (auto& part : parts)
    node->children.push_back(grow_j48(ds, std::move(part), p));
  return node;
}

// Collapse pass: subtrees that do not reduce training error become leaves.
inline void collapse_j48(BNode& node) {
  if (node.is_leaf) return;
  for (auto& c : node.children) collapse_j48(*c);
  if (node.subtree_error() >= node.error_count()) node.make_leaf();
}

// Recomputes counts of a subtree after its instance set changed (raising).
inline void redistribute(BNode& node, const Dataset& ds, std::vector<int> idx) {
  node.indices = std::move(idx);
  node.class_counts = count_classes(ds, node.indices);
  if (node.is_leaf) return;
  auto parts = partition(node, ds, node.children.size());
  for (std::size_t c = 0; c < node.children.size(); ++c)
    redistribute(*node.children[c], ds, std::move(parts[c]));
}

inline void pessimistic_prune(BNode& node, const Dataset& ds, const J48Params& p) {
  if (node.is_leaf) return;
  for (auto& c : node.children) pessimistic_prune(*c, ds, p);

  double est_subtree = pessimistic_subtree_errors(node, p.C);
  double est_leaf = pessimistic_leaf_errors(node.class_counts, p.C);

  double est_raised = std::numeric_limits<double>::infinity();
  std::unique_ptr<BNode> raised;
  if (!p.S && !node.children.empty()) {
    std::size_t largest = 0;
    for (std::size_t c = 1; c < node.children.size(); ++c)
      if (node.children[c]->total() > node.children[largest]->total()) largest = c;
    if (!node.children[largest]->is_leaf) {
      raised = std::make_unique<BNode>();
      *raised = std::move(*node.children[largest]);
      redistribute(*raised, ds, node.indices);
      est_raised = pessimistic_subtree_errors(*raised, p.C);
    }
  }

  if (est_leaf <= est_subtree + 0.1 && est_leaf <= est_raised + 0.1) {
    node.make_leaf();
  } else if (raised && est_raised <= est_subtree + 0.1) {
    *(&node) = std::move(*raised);
  }
}

// Reduced-error pruning against a holdout set; returns subtree holdout errors.
inline long rep_prune(BNode& node, const Dataset& ds,
                      const std::vector<int>& holdout) {
  long leaf_err = 0;
  int cls = node.majority_class();
  for (int i : holdout) leaf_err += ds.labels[i] != cls;
  if (node.is_leaf) return leaf_err;

  std::vector<std::vector<int>> parts(node.children.size());
  for (int i : holdout) {
    int c = route_child(node.split, ds, i, node.children.size());
    if (c < 0 || node.children[c]->total() == 0) c = node.majority_child;
    parts[c].push_back(i);
  }
  long subtree_err = 0;
  for (std::size_t c = 0; c < node.children.size(); ++c)
    subtree_err += rep_prune(*node.children[c], ds, parts[c]);
  if (leaf_err <= subtree_err) {
    node.make_leaf();
    return leaf_err;
  }
  return subtree_err;
}

}  // namespace detail

inline TreeModel fit_j48(const Dataset& ds, const std::vector<int>& indices,
                         const J48Params& params, std::uint64_t seed = 0) {
  if (indices.empty()) throw ModelError("fit_j48: empty training set");

  std::vector<int> grow_set = indices;
  std::vector<int> holdout;
  if (params.R) {
    // Seeded stratified split into N folds; fold 0 is the pruning holdout.
    std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
    std::vector<std::vector<int>> by_class(ds.n_classes());
    for (int i : indices) by_class[ds.labels[i]].push_back(i);
    grow_set.clear();
    int offset = 0;
    for (auto& group : by_class) {
      std::shuffle(group.begin(), group.end(), rng);
      for (std::size_t i = 0; i < group.size(); ++i) {
        int fold = (offset + static_cast<int>(i)) % static_cast<int>(params.N);
        (fold == 0 ? holdout : grow_set).push_back(group[i]);
      }
      offset = (offset + static_cast<int>(group.size())) %
               static_cast<int>(params.N);
    }
    if (grow_set.empty()) grow_set = indices;  // degenerate tiny input
  }

  auto root = detail::grow_j48(ds, grow_set, params);
  if (!params.O) detail::collapse_j48(*root);
  if (params.R) {
    if (!holdout.empty()) detail::rep_prune(*root, ds, holdout);
  } else {
    detail::pessimistic_prune(*root, ds, params);
  }
  return detail::flatten(std::move(root), ds, "j48", params.A, 0);
}

inline TreeModel fit_j48(const Dataset& ds, const std::vector<int>& indices,
                         const Configuration& config, std::uint64_t seed = 0) {
  return fit_j48(ds, indices, J48Params::from(config), seed);
}

}  // namespace treetune

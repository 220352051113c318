#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "treetune/dataset.hpp"
#include "treetune/tree_model.hpp"

namespace treetune::detail {

// Mutable tree used while growing and pruning; flattened into a TreeModel at
// the end. Keeps the node-local instance indices for pruning passes.
struct BNode {
  Split split;
  bool is_leaf = true;
  std::vector<std::unique_ptr<BNode>> children;
  std::vector<long> class_counts;
  int majority_child = -1;
  std::vector<SurrogateSplit> surrogates;
  std::vector<int> indices;

  long total() const {
    long t = 0;
    for (long c : class_counts) t += c;
    return t;
  }
  int majority_class() const {
    return static_cast<int>(std::max_element(class_counts.begin(),
                                             class_counts.end()) -
                            class_counts.begin());
  }
  long error_count() const {
    return total() - *std::max_element(class_counts.begin(), class_counts.end());
  }
  long subtree_error() const {
    if (is_leaf) return error_count();
    long e = 0;
    for (const auto& c : children) e += c->subtree_error();
    return e;
  }
  std::size_t node_count() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c->node_count();
    return n;
  }
  void make_leaf() {
    is_leaf = true;
    children.clear();
    surrogates.clear();
    majority_child = -1;
  }
};

inline std::vector<long> count_classes(const Dataset& ds,
                                       const std::vector<int>& idx) {
  std::vector<long> counts(ds.n_classes(), 0);
  for (int i : idx) counts[ds.labels[i]]++;
  return counts;
}

inline bool is_pure(const std::vector<long>& counts) {
  int nonzero = 0;
  for (long c : counts) nonzero += c > 0;
  return nonzero <= 1;
}

inline double gini(const std::vector<long>& counts, long total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (long c : counts) {
    double p = static_cast<double>(c) / static_cast<double>(total);
    g -= p * p;
  }
  return g;
}

inline double entropy(const std::vector<long>& counts, long total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (long c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

// Sorted (value, label) pairs over the node's non-missing cells.
inline std::vector<std::pair<double, int>> sorted_numeric(
    const Dataset& ds, const std::vector<int>& idx, int feature) {
  std::vector<std::pair<double, int>> out;
  const auto& col = ds.features[feature];
  out.reserve(idx.size());
  for (int i : idx)
    if (!col.missing(i)) out.emplace_back(col.num[i], ds.labels[i]);
  std::sort(out.begin(), out.end());
  return out;
}

struct BinaryScanResult {
  bool found = false;
  double score = -1e300;      // impurity decrease; higher is better
  double threshold = 0.0;     // numeric
  std::vector<std::uint8_t> in_left;  // categorical subset
  long n_left = 0, n_right = 0;
};

// Scans midpoint thresholds of a numeric feature, maximizing the drop of the
// given impurity (gini or entropy) subject to `min_child` per side.
template <typename Impurity>
BinaryScanResult scan_numeric(const std::vector<std::pair<double, int>>& sorted,
                              std::size_t n_classes, long min_child,
                              Impurity impurity) {
  BinaryScanResult best;
  const long n = static_cast<long>(sorted.size());
  if (n < 2 * min_child) return best;
  std::vector<long> left(n_classes, 0), right(n_classes, 0);
  for (const auto& [v, y] : sorted) right[y]++;
  const double parent = impurity(right, n);
  for (long i = 0; i < n - 1; ++i) {
    left[sorted[i].second]++;
    right[sorted[i].second]--;
    if (sorted[i].first == sorted[i + 1].first) continue;
    long nl = i + 1, nr = n - nl;
    if (nl < min_child || nr < min_child) continue;
    double child = (static_cast<double>(nl) * impurity(left, nl) +
                    static_cast<double>(nr) * impurity(right, nr)) /
                   static_cast<double>(n);
    double gain = parent - child;
    if (gain > best.score + 1e-12) {
      best.found = true;
      best.score = gain;
      best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
      best.n_left = nl;
      best.n_right = nr;
    }
  }
  return best;
}

// Binary subset scan for a categorical feature: levels ordered by the
// proportion of the node's majority class, then prefix subsets are scanned.
template <typename Impurity>
BinaryScanResult scan_categorical_subset(const Dataset& ds,
                                         const std::vector<int>& idx,
                                         int feature, long min_child,
                                         Impurity impurity) {
  BinaryScanResult best;
  const auto& col = ds.features[feature];
  const std::size_t n_levels = col.levels.size();
  const std::size_t n_classes = ds.n_classes();
  if (n_levels < 2) return best;

  std::vector<std::vector<long>> level_counts(n_levels,
                                              std::vector<long>(n_classes, 0));
  std::vector<long> node_counts(n_classes, 0);
  long n = 0;
  for (int i : idx) {
    if (col.missing(i)) continue;
    level_counts[col.cat[i]][ds.labels[i]]++;
    node_counts[ds.labels[i]]++;
    n++;
  }
  if (n < 2 * min_child) return best;
  const int ref_class = static_cast<int>(
      std::max_element(node_counts.begin(), node_counts.end()) -
      node_counts.begin());

  std::vector<std::size_t> order(n_levels);
  for (std::size_t l = 0; l < n_levels; ++l) order[l] = l;
  auto frac = [&](std::size_t l) {
    long t = 0;
    for (long c : level_counts[l]) t += c;
    return t == 0 ? -1.0
                  : static_cast<double>(level_counts[l][ref_class]) /
                        static_cast<double>(t);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac(a) > frac(b); });

  const double parent = impurity(node_counts, n);
  std::vector<long> left(n_classes, 0), right = node_counts;
  std::vector<std::uint8_t> in_left(n_levels, 0);
  long nl = 0;
  for (std::size_t step = 0; step + 1 < n_levels; ++step) {
    std::size_t lv = order[step];
    in_left[lv] = 1;
    for (std::size_t c = 0; c < n_classes; ++c) {
      left[c] += level_counts[lv][c];
      right[c] -= level_counts[lv][c];
    }
    nl = 0;
    for (long c : left) nl += c;
    long nr = n - nl;
    if (nl < min_child || nr < min_child) continue;
    double child = (static_cast<double>(nl) * impurity(left, nl) +
                    static_cast<double>(nr) * impurity(right, nr)) /
                   static_cast<double>(n);
    double gain = parent - child;
    if (gain > best.score + 1e-12) {
      best.found = true;
      best.score = gain;
      best.in_left = in_left;
      best.n_left = nl;
      best.n_right = nr;
    }
  }
  return best;
}

// Child index for an instance during building, -1 when the value is missing.
inline int route_child(const Split& s, const Dataset& ds, int inst,
                       std::size_t n_children) {
  return route_by_split(s, ds, static_cast<std::size_t>(inst), n_children);
}

// Partitions the node's instances among children; missing values follow the
// majority child. Returns the per-child index sets and sets majority_child.
inline std::vector<std::vector<int>> partition(BNode& node, const Dataset& ds,
                                               std::size_t n_children) {
  std::vector<std::vector<int>> parts(n_children);
  std::vector<int> missing;
  for (int i : node.indices) {
    int c = route_child(node.split, ds, i, n_children);
    if (c < 0)
      missing.push_back(i);
    else
      parts[c].push_back(i);
  }
  std::size_t largest = 0;
  for (std::size_t c = 1; c < n_children; ++c)
    if (parts[c].size() > parts[largest].size()) largest = c;
  node.majority_child = static_cast<int>(largest);
  for (int i : missing) parts[largest].push_back(i);
  return parts;
}

// Flattens the builder tree into the immutable model (preorder layout).
inline TreeModel flatten(std::unique_ptr<BNode> root, const Dataset& ds,
                         std::string learner_tag, bool laplace,
                         int use_surrogates) {
  TreeModel m;
  m.learner_tag = std::move(learner_tag);
  m.n_classes = static_cast<int>(ds.n_classes());
  m.n_features = static_cast<int>(ds.n_features());
  m.laplace = laplace;
  m.use_surrogates = use_surrogates;

  struct Item {
    const BNode* node;
    int parent;
    int slot;
  };
  std::vector<Item> stack{{root.get(), -1, -1}};
  while (!stack.empty()) {
    auto [node, parent, slot] = stack.back();
    stack.pop_back();
    int id = static_cast<int>(m.nodes.size());
    TreeNode out;
    out.is_leaf = node->is_leaf;
    out.split = node->split;
    out.class_counts = node->class_counts;
    out.majority_child = node->majority_child;
    out.surrogates = node->surrogates;
    m.nodes.push_back(std::move(out));
    if (parent >= 0) m.nodes[parent].children[slot] = id;
    if (!node->is_leaf) {
      m.nodes[id].children.assign(node->children.size(), -1);
      for (int c = static_cast<int>(node->children.size()) - 1; c >= 0; --c)
        stack.push_back({node->children[c].get(), id, c});
    }
  }
  return m;
}

// Surrogate search: the best split on another feature that reproduces the
// primary split's left/right assignment better than majority routing.
inline std::vector<SurrogateSplit> find_surrogates(
    const Dataset& ds, const BNode& node, int surrogatestyle,
    std::size_t max_keep = 5) {
  std::vector<SurrogateSplit> out;
  std::vector<int> gone;  // primary side per usable instance
  std::vector<int> usable;
  for (int i : node.indices) {
    int side = route_child(node.split, ds, i, 2);
    if (side < 0) continue;
    usable.push_back(i);
    gone.push_back(side);
  }
  if (usable.empty()) return out;
  long n_left = std::count(gone.begin(), gone.end(), 0);
  long n_right = static_cast<long>(gone.size()) - n_left;
  double majority_rate =
      static_cast<double>(std::max(n_left, n_right)) / static_cast<double>(gone.size());

  auto agreement = [&](const Split& cand) -> std::optional<double> {
    long agree = 0, seen = 0;
    long agree_l = 0, seen_l = 0, agree_r = 0, seen_r = 0;
    for (std::size_t j = 0; j < usable.size(); ++j) {
      int side = route_child(cand, ds, usable[j], 2);
      if (side < 0) continue;
      seen++;
      bool ok = side == gone[j];
      agree += ok;
      if (gone[j] == 0) {
        seen_l++;
        agree_l += ok;
      } else {
        seen_r++;
        agree_r += ok;
      }
    }
    if (seen == 0) return std::nullopt;
    if (surrogatestyle == 1) {
      double rl = seen_l ? static_cast<double>(agree_l) / seen_l : 0.0;
      double rr = seen_r ? static_cast<double>(agree_r) / seen_r : 0.0;
      return 0.5 * (rl + rr);
    }
    return static_cast<double>(agree) / static_cast<double>(seen);
  };

  for (int f = 0; f < static_cast<int>(ds.n_features()); ++f) {
    if (f == node.split.feature) continue;
    const auto& col = ds.features[f];
    Split best_cand;
    double best_agree = majority_rate;
    if (col.kind == FeatureColumn::Kind::numeric) {
      std::vector<double> values;
      for (int i : usable)
        if (!col.missing(i)) values.push_back(col.num[i]);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t v = 0; v + 1 < values.size(); ++v) {
        Split cand;
        cand.type = Split::Type::numeric;
        cand.feature = f;
        cand.threshold = 0.5 * (values[v] + values[v + 1]);
        if (auto a = agreement(cand); a && *a > best_agree + 1e-12) {
          best_agree = *a;
          best_cand = cand;
        }
      }
    } else if (col.levels.size() >= 2) {
      // one level vs rest candidates
      for (std::size_t lv = 0; lv < col.levels.size(); ++lv) {
        Split cand;
        cand.type = Split::Type::cat_subset;
        cand.feature = f;
        cand.in_left.assign(col.levels.size(), 0);
        cand.in_left[lv] = 1;
        if (auto a = agreement(cand); a && *a > best_agree + 1e-12) {
          best_agree = *a;
          best_cand = cand;
        }
      }
    }
    if (best_cand.feature == f) out.push_back({best_cand, best_agree});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SurrogateSplit& a, const SurrogateSplit& b) {
                     return a.agreement > b.agreement;
                   });
  if (out.size() > max_keep) out.resize(max_keep);
  return out;
}

}  // namespace treetune::detail

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "treetune/dataset.hpp"

namespace treetune {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A split on one feature. Numeric sends value < threshold left. Categorical
// splits are either a binary left-subset or multiway with one child per level.
struct Split {
  enum class Type { numeric, cat_subset, cat_multiway };
  Type type = Type::numeric;
  int feature = -1;
  double threshold = 0.0;
  std::vector<std::uint8_t> in_left;  // per level flag, cat_subset only
};

// Alternate split used for routing instances whose primary split value is
// missing, kept when its agreement beats majority routing.
struct SurrogateSplit {
  Split split;
  double agreement = 0.0;
};

struct TreeNode {
  bool is_leaf = true;
  Split split;
  std::vector<int> children;
  std::vector<long> class_counts;
  int majority_child = -1;  // child with the larger training count
  std::vector<SurrogateSplit> surrogates;

  long total() const {
    return std::accumulate(class_counts.begin(), class_counts.end(), 0L);
  }
  int majority_class() const {
    return static_cast<int>(std::max_element(class_counts.begin(),
                                             class_counts.end()) -
                            class_counts.begin());
  }
  long error_count() const {
    return total() - *std::max_element(class_counts.begin(), class_counts.end());
  }
};

struct TreeModel {
  std::vector<TreeNode> nodes;
  int root = 0;
  std::string learner_tag;
  int n_classes = 0;
  int n_features = 0;
  bool laplace = false;      // J48 `A`: Laplace-smoothed leaf probabilities
  int use_surrogates = 0;    // CART `usesurrogate`

  std::size_t size() const { return nodes.size(); }
};

inline std::size_t tree_size(const TreeModel& model) { return model.nodes.size(); }

namespace detail {

// -1 = take the split value as missing.
inline int route_by_split(const Split& s, const Dataset& ds, std::size_t inst,
                          std::size_t n_children) {
  const FeatureColumn& col = ds.features[s.feature];
  if (col.missing(inst)) return -1;
  switch (s.type) {
    case Split::Type::numeric:
      return col.num[inst] < s.threshold ? 0 : 1;
    case Split::Type::cat_subset: {
      int lv = col.cat[inst];
      if (lv < 0 || lv >= static_cast<int>(s.in_left.size())) return -1;
      return s.in_left[lv] ? 0 : 1;
    }
    case Split::Type::cat_multiway: {
      int lv = col.cat[inst];
      if (lv < 0 || lv >= static_cast<int>(n_children)) return -1;
      return lv;
    }
  }
  return -1;
}

}  // namespace detail

// Routes one instance to its leaf. Missing split values go through the best
// agreeing surrogate when enabled, otherwise to the majority-count child.
inline int route_to_leaf(const TreeModel& m, const Dataset& ds, std::size_t inst) {
  if (ds.n_features() != static_cast<std::size_t>(m.n_features))
    throw ModelError("instance arity " + std::to_string(ds.n_features()) +
                     " does not match training arity " +
                     std::to_string(m.n_features));
  int at = m.root;
  while (!m.nodes[at].is_leaf) {
    const TreeNode& node = m.nodes[at];
    int child = detail::route_by_split(node.split, ds, inst, node.children.size());
    if (child < 0 && m.use_surrogates > 0) {
      for (const auto& sur : node.surrogates) {
        child = detail::route_by_split(sur.split, ds, inst, 2);
        if (child >= 0) break;
      }
    }
    if (child < 0) child = node.majority_child;
    // empty multiway branches (level unseen in training) fall back too
    if (m.nodes[node.children[child]].total() == 0) child = node.majority_child;
    at = node.children[child];
  }
  return at;
}

inline std::vector<double> predict_proba(const TreeModel& m, const Dataset& ds,
                                         std::size_t inst) {
  const TreeNode& leaf = m.nodes[route_to_leaf(m, ds, inst)];
  std::vector<double> p(leaf.class_counts.size(), 0.0);
  double denom = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    p[c] = static_cast<double>(leaf.class_counts[c]) + (m.laplace ? 1.0 : 0.0);
    denom += p[c];
  }
  if (denom <= 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return p;
  }
  for (auto& v : p) v /= denom;
  return p;
}

inline int predict(const TreeModel& m, const Dataset& ds, std::size_t inst) {
  const TreeNode& leaf = m.nodes[route_to_leaf(m, ds, inst)];
  return leaf.majority_class();
}

inline ConfusionMatrix evaluate(const TreeModel& m, const Dataset& ds,
                                const std::vector<int>& indices) {
  ConfusionMatrix cm = ConfusionMatrix::zeros(ds.n_classes());
  for (int i : indices) cm.add(ds.labels[i], predict(m, ds, i));
  return cm;
}

// Preorder text serialization; stable across runs for identical models.
inline std::string to_text(const TreeModel& m) {
  std::ostringstream os;
  os.precision(17);
  os << "tree " << m.learner_tag << " classes=" << m.n_classes
     << " features=" << m.n_features << " laplace=" << (m.laplace ? 1 : 0)
     << " surrogate=" << m.use_surrogates << "\n";
  std::vector<int> stack = {m.root};
  std::vector<int> order;
  while (!stack.empty()) {
    int at = stack.back();
    stack.pop_back();
    order.push_back(at);
    const auto& ch = m.nodes[at].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  for (int at : order) {
    const TreeNode& n = m.nodes[at];
    os << "node " << at;
    if (n.is_leaf) {
      os << " leaf";
    } else {
      os << " split feature=" << n.split.feature;
      switch (n.split.type) {
        case Split::Type::numeric:
          os << " threshold=" << n.split.threshold;
          break;
        case Split::Type::cat_subset: {
          os << " left_levels=";
          for (auto b : n.split.in_left) os << (b ? '1' : '0');
          break;
        }
        case Split::Type::cat_multiway:
          os << " multiway";
          break;
      }
      os << " children=";
      for (std::size_t i = 0; i < n.children.size(); ++i)
        os << (i ? "," : "") << n.children[i];
      os << " majority_child=" << n.majority_child;
    }
    os << " counts=";
    for (std::size_t c = 0; c < n.class_counts.size(); ++c)
      os << (c ? "," : "") << n.class_counts[c];
    os << "\n";
  }
  return os.str();
}

}  // namespace treetune

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "treetune/detail/tree_builder.hpp"
#include "treetune/space.hpp"
#include "treetune/tree_model.hpp"

namespace treetune {

struct CartParams {
  double cp = 0.01;
  long minsplit = 20;
  long minbucket = 7;
  long maxdepth = 30;
  int usesurrogate = 2;
  int surrogatestyle = 0;

  static CartParams from(const Configuration& c) {
    CartParams p;
    p.cp = c.real("cp");
    p.minsplit = c.integer("minsplit");
    p.minbucket = c.integer("minbucket");
    p.maxdepth = c.integer("maxdepth");
    p.usesurrogate = std::stoi(c.level("usesurrogate"));
    p.surrogatestyle = std::stoi(c.level("surrogatestyle"));
    return p;
  }
};

namespace detail {

inline std::unique_ptr<BNode> grow_cart(const Dataset& ds, std::vector<int> idx,
                                        const CartParams& p, long depth,
                                        bool want_surrogates) {
  auto node = std::make_unique<BNode>();
  node->indices = std::move(idx);
  node->class_counts = count_classes(ds, node->indices);
  const long n = node->total();

  if (n < p.minsplit || n < 2 * p.minbucket || depth >= p.maxdepth ||
      is_pure(node->class_counts))
    return node;

  auto impurity = [](const std::vector<long>& c, long t) { return gini(c, t); };
  BinaryScanResult best;
  int best_feature = -1;
  for (int f = 0; f < static_cast<int>(ds.n_features()); ++f) {
    BinaryScanResult r;
    if (ds.features[f].kind == FeatureColumn::Kind::numeric)
      r = scan_numeric(sorted_numeric(ds, node->indices, f), ds.n_classes(),
                       p.minbucket, impurity);
    else
      r = scan_categorical_subset(ds, node->indices, f, p.minbucket, impurity);
    // weight by covered fraction so features with many missing cells
    // do not win on a small sub-sample
    if (r.found)
      r.score *= static_cast<double>(r.n_left + r.n_right) / static_cast<double>(n);
    if (r.found && r.score > best.score + 1e-12) {
      best = r;
      best_feature = f;
    }
  }
  if (best_feature < 0 || best.score <= 1e-12) return node;

  node->is_leaf = false;
  node->split.feature = best_feature;
  if (ds.features[best_feature].kind == FeatureColumn::Kind::numeric) {
    node->split.type = Split::Type::numeric;
    node->split.threshold = best.threshold;
  } else {
    node->split.type = Split::Type::cat_subset;
    node->split.in_left = best.in_left;
  }
  if (want_surrogates)
    node->surrogates = find_surrogates(ds, *node, p.surrogatestyle);

  auto parts = partition(*node, ds, 2);
  for (auto& part : parts)
    node->children.push_back(
        grow_cart(ds, std::move(part), p, depth + 1, want_surrogates));
  return node;
}

// Cost-complexity pass: a split whose subtree reduces training error by less
// than cp, relative to the root error, is collapsed. Bottom-up so inner
// prunes feed the parent's subtree error.
inline void prune_cart(BNode& node, double cp, long root_error) {
  if (node.is_leaf) return;
  for (auto& c : node.children) prune_cart(*c, cp, root_error);
  long improvement = node.error_count() - node.subtree_error();
  if (static_cast<double>(improvement) <
      cp * static_cast<double>(std::max(root_error, 1L)))
    node.make_leaf();
}

}  // namespace detail

inline TreeModel fit_cart(const Dataset& ds, const std::vector<int>& indices,
                          const CartParams& params) {
  if (indices.empty()) throw ModelError("fit_cart: empty training set");
  bool surrogates = params.usesurrogate > 0 && ds.has_missing();
  auto root = detail::grow_cart(ds, indices, params, 0, surrogates);
  detail::prune_cart(*root, params.cp, root->error_count());
  return detail::flatten(std::move(root), ds, "cart", false, params.usesurrogate);
}

inline TreeModel fit_cart(const Dataset& ds, const std::vector<int>& indices,
                          const Configuration& config) {
  return fit_cart(ds, indices, CartParams::from(config));
}

}  // namespace treetune

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "treetune/detail/tree_builder.hpp"
#include "treetune/space.hpp"
#include "treetune/tree_model.hpp"

namespace treetune {

struct CtreeParams {
  double mincriterion = 0.95;
  long minsplit = 20;
  long minbucket = 7;
  long mtry = 0;  // 0 = consider all features
  long maxdepth = 30;
  bool stump = false;

  static CtreeParams from(const Configuration& c) {
    CtreeParams p;
    p.mincriterion = c.real("mincriterion");
    p.minsplit = c.integer("minsplit");
    p.minbucket = c.integer("minbucket");
    p.mtry = c.integer("mtry");
    p.maxdepth = c.integer("maxdepth");
    p.stump = c.boolean("stump");
    return p;
  }
};

namespace detail {

// Chi-square independence p-value of the level x class contingency table.
inline double chi_square_pvalue(const Dataset& ds, const std::vector<int>& idx,
                                int feature) {
  const auto& col = ds.features[feature];
  const std::size_t n_levels = col.levels.size();
  const std::size_t n_classes = ds.n_classes();
  std::vector<std::vector<long>> table(n_levels, std::vector<long>(n_classes, 0));
  long n = 0;
  for (int i : idx) {
    if (col.missing(i)) continue;
    table[col.cat[i]][ds.labels[i]]++;
    n++;
  }
  if (n == 0) return 1.0;
  std::vector<long> row(n_levels, 0), colsum(n_classes, 0);
  for (std::size_t r = 0; r < n_levels; ++r)
    for (std::size_t c = 0; c < n_classes; ++c) {
      row[r] += table[r][c];
      colsum[c] += table[r][c];
    }
  int rows_used = 0, cols_used = 0;
  for (long v : row) rows_used += v > 0;
  for (long v : colsum) cols_used += v > 0;
  if (rows_used < 2 || cols_used < 2) return 1.0;

  double stat = 0.0;
  for (std::size_t r = 0; r < n_levels; ++r) {
    if (row[r] == 0) continue;
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (colsum[c] == 0) continue;
      double expect = static_cast<double>(row[r]) * static_cast<double>(colsum[c]) /
                      static_cast<double>(n);
      double diff = static_cast<double>(table[r][c]) - expect;
      stat += diff * diff / expect;
    }
  }
  double dof = static_cast<double>((rows_used - 1) * (cols_used - 1));
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, std::max(stat, 0.0)));
}

// One-way ANOVA F-test p-value of the numeric feature grouped by class.
inline double anova_f_pvalue(const Dataset& ds, const std::vector<int>& idx,
                             int feature) {
  const auto& col = ds.features[feature];
  const std::size_t n_classes = ds.n_classes();
  std::vector<double> sum(n_classes, 0.0), sumsq(n_classes, 0.0);
  std::vector<long> cnt(n_classes, 0);
  double gsum = 0.0;
  long n = 0;
  for (int i : idx) {
    if (col.missing(i)) continue;
    double v = col.num[i];
    int y = ds.labels[i];
    sum[y] += v;
    sumsq[y] += v * v;
    cnt[y]++;
    gsum += v;
    n++;
  }
  int groups = 0;
  for (long c : cnt) groups += c > 0;
  if (groups < 2 || n <= groups) return 1.0;

  double gmean = gsum / static_cast<double>(n);
  double ss_between = 0.0, ss_within = 0.0;
  for (std::size_t g = 0; g < n_classes; ++g) {
    if (cnt[g] == 0) continue;
    double mean = sum[g] / static_cast<double>(cnt[g]);
    ss_between += static_cast<double>(cnt[g]) * (mean - gmean) * (mean - gmean);
    ss_within += sumsq[g] - static_cast<double>(cnt[g]) * mean * mean;
  }
  double df1 = static_cast<double>(groups - 1);
  double df2 = static_cast<double>(n - groups);
  if (ss_within <= 1e-300) return ss_between > 1e-12 ? 0.0 : 1.0;
  double f = (ss_between / df1) / (ss_within / df2);
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, std::max(f, 0.0)));
}

inline std::unique_ptr<BNode> grow_ctree(const Dataset& ds, std::vector<int> idx,
                                         const CtreeParams& p, long depth,
                                         std::mt19937_64& rng) {
  auto node = std::make_unique<BNode>();
  node->indices = std::move(idx);
  node->class_counts = count_classes(ds, node->indices);
  const long n = node->total();
  const long depth_cap = p.stump ? 1 : p.maxdepth;

  if (n < p.minsplit || n < 2 * p.minbucket || depth >= depth_cap ||
      is_pure(node->class_counts))
    return node;

  // draw mtry candidate features without replacement (0 = all)
  std::vector<int> candidates(ds.n_features());
  for (std::size_t f = 0; f < ds.n_features(); ++f)
    candidates[f] = static_cast<int>(f);
  long m = p.mtry;
  if (m > 0 && m < static_cast<long>(candidates.size())) {
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(m);
    std::sort(candidates.begin(), candidates.end());
  }

  int best_feature = -1;
  double best_p = 2.0;
  for (int f : candidates) {
    double pv = ds.features[f].kind == FeatureColumn::Kind::numeric
                    ? anova_f_pvalue(ds, node->indices, f)
                    : chi_square_pvalue(ds, node->indices, f);
    pv = std::min(1.0, pv * static_cast<double>(candidates.size()));  // Bonferroni
    if (pv < best_p - 1e-15) {
      best_p = pv;
      best_feature = f;
    }
  }
  if (best_feature < 0 || 1.0 - best_p <= p.mincriterion) return node;

  // split point on the selected feature, impurity-based, minbucket-feasible
  auto impurity = [](const std::vector<long>& c, long t) { return gini(c, t); };
  BinaryScanResult r;
  if (ds.features[best_feature].kind == FeatureColumn::Kind::numeric)
    r = scan_numeric(sorted_numeric(ds, node->indices, best_feature),
                     ds.n_classes(), p.minbucket, impurity);
  else
    r = scan_categorical_subset(ds, node->indices, best_feature, p.minbucket,
                                impurity);
  if (!r.found) return node;

  node->is_leaf = false;
  node->split.feature = best_feature;
  if (ds.features[best_feature].kind == FeatureColumn::Kind::numeric) {
    node->split.type = Split::Type::numeric;
    node->split.threshold = r.threshold;
  } else {
    node->split.type = Split::Type::cat_subset;
    node->split.in_left = r.in_left;
  }
  auto parts = partition(*node, ds, 2);
  for (auto& part : parts)
    node->children.push_back(grow_ctree(ds, std::move(part), p, depth + 1, rng));
  return node;
}

}  // namespace detail

inline TreeModel fit_ctree(const Dataset& ds, const std::vector<int>& indices,
                           const CtreeParams& params, std::uint64_t seed = 0) {
  if (indices.empty()) throw ModelError("fit_ctree: empty training set");
  std::mt19937_64 rng(seed ^ 0xa0761d6478bd642fULL);
  auto root = detail::grow_ctree(ds, indices, params, 0, rng);
  return detail::flatten(std::move(root), ds, "ctree", false, 0);
}

inline TreeModel fit_ctree(const Dataset& ds, const std::vector<int>& indices,
                           const Configuration& config, std::uint64_t seed = 0) {
  return fit_ctree(ds, indices, CtreeParams::from(config), seed);
}

}  // namespace treetune

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "treetune/dataset.hpp"
#include "treetune/space.hpp"

namespace treetune {

struct ComplexityProfile {
  double f1 = 0.0;  // max Fisher discriminant ratio over numeric features
  double f3 = 0.0;  // max individual feature efficiency
  double f4 = 0.0;  // collective feature efficiency
  double n1 = 0.0;  // fraction of boundary points (MST)
  double n2 = 0.0;  // intra/inter class nearest-neighbour distance ratio
  double n4 = 0.0;  // 1-NN error on interpolated synthetic points
  double l2 = 0.0;  // training error of a ridge one-vs-rest linear classifier
  int cls = 0;      // class count
  std::vector<std::string> flags;
};

struct Advice {
  Learner learner = Learner::j48;
  bool tune = false;
  std::vector<std::string> fired;
};

namespace detail {

// Dense numeric view: numerics mean-imputed and min-max scaled to [0,1];
// categorical columns kept separately for matching distance.
struct NumericView {
  std::vector<std::vector<double>> num;  // per numeric feature, scaled
  std::vector<std::vector<int>> cat;     // per categorical feature, -1 missing
  std::size_t n = 0;

  double dist2(std::size_t a, std::size_t b) const {
    double d = 0.0;
    for (const auto& col : num) {
      double diff = col[a] - col[b];
      d += diff * diff;
    }
    for (const auto& col : cat)
      if (col[a] != col[b]) d += 1.0;
    return d;
  }
};

inline NumericView make_view(const Dataset& ds) {
  NumericView v;
  v.n = ds.n_instances();
  for (const auto& f : ds.features) {
    if (f.kind == FeatureColumn::Kind::numeric) {
      std::vector<double> col(f.num.begin(), f.num.end());
      double sum = 0.0;
      std::size_t cnt = 0;
      for (double x : col)
        if (!std::isnan(x)) {
          sum += x;
          cnt++;
        }
      double mean = cnt ? sum / static_cast<double>(cnt) : 0.0;
      for (double& x : col)
        if (std::isnan(x)) x = mean;
      double lo = *std::min_element(col.begin(), col.end());
      double hi = *std::max_element(col.begin(), col.end());
      if (hi > lo)
        for (double& x : col) x = (x - lo) / (hi - lo);
      else
        std::fill(col.begin(), col.end(), 0.0);
      v.num.push_back(std::move(col));
    } else {
      v.cat.emplace_back(f.cat.begin(), f.cat.end());
    }
  }
  return v;
}

// Indices of instances outside the one-vs-rest overlap interval of `col`,
// maximized over classes; used by both f3 and f4.
inline std::vector<char> separated_mask(const std::vector<double>& col,
                                        const std::vector<int>& labels,
                                        const std::vector<int>& subset,
                                        int n_classes) {
  std::vector<char> best(subset.size(), 0);
  std::size_t best_count = 0;
  for (int c = 0; c < n_classes; ++c) {
    double min_c = std::numeric_limits<double>::infinity(), max_c = -min_c;
    double min_r = min_c, max_r = -min_c;
    bool has_c = false, has_r = false;
    for (int i : subset) {
      double x = col[i];
      if (labels[i] == c) {
        min_c = std::min(min_c, x);
        max_c = std::max(max_c, x);
        has_c = true;
      } else {
        min_r = std::min(min_r, x);
        max_r = std::max(max_r, x);
        has_r = true;
      }
    }
    if (!has_c || !has_r) continue;
    double lo = std::max(min_c, min_r);  // overlap interval
    double hi = std::min(max_c, max_r);
    std::vector<char> mask(subset.size(), 0);
    std::size_t count = 0;
    for (std::size_t s = 0; s < subset.size(); ++s) {
      double x = col[subset[s]];
      if (x < lo || x > hi) {
        mask[s] = 1;
        count++;
      }
    }
    if (count > best_count) {
      best_count = count;
      best = std::move(mask);
    }
  }
  return best;
}

}  // namespace detail

// Maximum Fisher discriminant ratio across numeric features: instance-weighted
// between-class variance of per-class means over pooled within-class variance.
inline double complexity_f1(const Dataset& ds, std::vector<std::string>* flags = nullptr) {
  auto view = detail::make_view(ds);
  if (view.num.empty()) throw DataError("f1 requires at least one numeric feature");
  if (ds.n_classes() < 2) throw DataError("f1 requires at least two classes");
  double best = 0.0;
  const double n = static_cast<double>(view.n);
  for (const auto& col : view.num) {
    std::vector<double> sum(ds.n_classes(), 0.0), sq(ds.n_classes(), 0.0);
    std::vector<double> cnt(ds.n_classes(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < view.n; ++i) {
      int c = ds.labels[i];
      sum[c] += col[i];
      sq[c] += col[i] * col[i];
      cnt[c] += 1.0;
      total += col[i];
    }
    double grand = total / n;
    double between = 0.0, within = 0.0;
    for (std::size_t c = 0; c < ds.n_classes(); ++c) {
      if (cnt[c] == 0.0) continue;
      double mu = sum[c] / cnt[c];
      between += cnt[c] * (mu - grand) * (mu - grand);
      within += sq[c] - cnt[c] * mu * mu;
    }
    between /= n;
    within /= n;
    if (within <= 1e-300) {
      if (between > 1e-300) {
        if (flags) flags->push_back("f1: zero within-class variance, ratio unbounded");
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    best = std::max(best, between / within);
  }
  return best;
}

inline double complexity_f3(const Dataset& ds) {
  auto view = detail::make_view(ds);
  if (view.num.empty()) throw DataError("f3 requires numeric features");
  std::vector<int> all(view.n);
  std::iota(all.begin(), all.end(), 0);
  std::size_t best = 0;
  for (const auto& col : view.num) {
    auto mask = detail::separated_mask(col, ds.labels, all, static_cast<int>(ds.n_classes()));
    best = std::max(best, static_cast<std::size_t>(
                              std::count(mask.begin(), mask.end(), char(1))));
  }
  return static_cast<double>(best) / static_cast<double>(view.n);
}

// Collective efficiency: greedily remove the instances the best feature
// separates, recompute on the remainder, accumulate until no feature helps.
inline double complexity_f4(const Dataset& ds) {
  auto view = detail::make_view(ds);
  if (view.num.empty()) throw DataError("f4 requires numeric features");
  std::vector<int> remaining(view.n);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::size_t removed = 0;
  while (!remaining.empty()) {
    std::vector<char> best_mask;
    std::size_t best_count = 0;
    for (const auto& col : view.num) {
      auto mask = detail::separated_mask(col, ds.labels, remaining,
                                         static_cast<int>(ds.n_classes()));
      auto count = static_cast<std::size_t>(
          std::count(mask.begin(), mask.end(), char(1)));
      if (count > best_count) {
        best_count = count;
        best_mask = std::move(mask);
      }
    }
    if (best_count == 0) break;
    std::vector<int> next;
    for (std::size_t s = 0; s < remaining.size(); ++s)
      if (!best_mask[s]) next.push_back(remaining[s]);
    removed += best_count;
    remaining = std::move(next);
  }
  return static_cast<double>(removed) / static_cast<double>(view.n);
}

// Boundary fraction: vertices incident to a minimum-spanning-tree edge whose
// endpoints carry different labels. Prim's algorithm, ties broken by index.
inline double complexity_n1(const Dataset& ds) {
  auto view = detail::make_view(ds);
  const std::size_t n = view.n;
  if (n < 2) throw DataError("n1 requires at least two instances");
  std::vector<char> in_tree(n, 0);
  std::vector<double> best_d(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, -1);
  std::vector<char> boundary(n, 0);
  in_tree[0] = 1;
  for (std::size_t j = 1; j < n; ++j) {
    best_d[j] = view.dist2(0, j);
    best_from[j] = 0;
  }
  for (std::size_t step = 1; step < n; ++step) {
    int pick = -1;
    for (std::size_t j = 0; j < n; ++j)
      if (!in_tree[j] && (pick < 0 || best_d[j] < best_d[pick])) pick = static_cast<int>(j);
    in_tree[pick] = 1;
    if (ds.labels[pick] != ds.labels[best_from[pick]]) {
      boundary[pick] = 1;
      boundary[best_from[pick]] = 1;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      double d = view.dist2(static_cast<std::size_t>(pick), j);
      if (d < best_d[j]) {
        best_d[j] = d;
        best_from[j] = pick;
      }
    }
  }
  return static_cast<double>(std::count(boundary.begin(), boundary.end(), char(1))) /
         static_cast<double>(n);
}

// Ratio of summed intra-class to summed inter-class nearest-neighbour
// distances; singleton-class instances contribute only to the denominator.
inline double complexity_n2(const Dataset& ds, std::vector<std::string>* flags = nullptr) {
  auto view = detail::make_view(ds);
  const std::size_t n = view.n;
  if (n < 2) throw DataError("n2 requires at least two instances");
  double intra = 0.0, inter = 0.0;
  bool skipped = false;
  for (std::size_t i = 0; i < n; ++i) {
    double best_same = std::numeric_limits<double>::infinity();
    double best_other = best_same;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = view.dist2(i, j);
      if (ds.labels[j] == ds.labels[i])
        best_same = std::min(best_same, d);
      else
        best_other = std::min(best_other, d);
    }
    if (std::isfinite(best_other)) inter += std::sqrt(best_other);
    if (std::isfinite(best_same))
      intra += std::sqrt(best_same);
    else
      skipped = true;
  }
  if (skipped && flags)
    flags->push_back("n2: singleton class, instance skipped in numerator");
  if (inter <= 1e-300) return 0.0;
  return intra / inter;
}

// 1-NN error on a synthetic set built by convex interpolation between random
// same-class pairs, one synthetic point per original instance.
inline double complexity_n4(const Dataset& ds, std::uint64_t seed = 42) {
  auto view = detail::make_view(ds);
  const std::size_t n = view.n;
  if (n < 2) throw DataError("n4 requires at least two instances");
  std::vector<std::vector<int>> by_class(ds.n_classes());
  for (std::size_t i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(static_cast<int>(i));
  std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t errors = 0, made = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pool = by_class[ds.labels[i]];
    if (pool.size() < 2) continue;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    int a = pool[pick(rng)], b = pool[pick(rng)];
    double lambda = unit(rng);
    // interpolate numerics; categoricals take one endpoint's level
    std::vector<double> x(view.num.size());
    for (std::size_t d = 0; d < view.num.size(); ++d)
      x[d] = view.num[d][a] + lambda * (view.num[d][b] - view.num[d][a]);
    std::vector<int> xc(view.cat.size());
    for (std::size_t d = 0; d < view.cat.size(); ++d)
      xc[d] = lambda < 0.5 ? view.cat[d][a] : view.cat[d][b];
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double dist = 0.0;
      for (std::size_t d = 0; d < view.num.size(); ++d) {
        double diff = x[d] - view.num[d][j];
        dist += diff * diff;
      }
      for (std::size_t d = 0; d < view.cat.size(); ++d)
        if (xc[d] != view.cat[d][j]) dist += 1.0;
      if (dist < best) {
        best = dist;
        best_j = static_cast<int>(j);
      }
    }
    made++;
    if (ds.labels[best_j] != ds.labels[i]) errors++;
  }
  if (made == 0) return 0.0;
  return static_cast<double>(errors) / static_cast<double>(made);
}

namespace detail {

// Solves (A + lambda I) w = b in place via Cholesky; A symmetric positive
// semi-definite.
inline std::vector<double> ridge_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b, double lambda) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) a[i][i] += lambda;
  // Cholesky factorization a = L L^T
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a[i][j];
      for (std::size_t k = 0; k < j; ++k) sum -= a[i][k] * a[j][k];
      if (i == j)
        a[i][i] = std::sqrt(std::max(sum, 1e-12));
      else
        a[i][j] = sum / a[j][j];
    }
  }
  // forward then backward substitution
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i][k] * b[k];
    b[i] /= a[i][i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) b[ii] -= a[k][ii] * b[k];
    b[ii] /= a[ii][ii];
  }
  return b;
}

}  // namespace detail

// Training error of a ridge (1e-3) one-vs-rest least-squares classifier over
// the numeric view with one-hot expanded categoricals.
inline double complexity_l2(const Dataset& ds, double lambda = 1e-3) {
  auto view = detail::make_view(ds);
  const std::size_t n = view.n;
  // design matrix: bias + scaled numerics + one-hot categoricals
  std::vector<std::vector<double>> cols;
  cols.emplace_back(n, 1.0);
  for (auto& c : view.num) cols.push_back(std::move(c));
  for (const auto& c : view.cat) {
    int levels = 0;
    for (int v : c) levels = std::max(levels, v + 1);
    for (int l = 0; l < levels; ++l) {
      std::vector<double> hot(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        if (c[i] == l) hot[i] = 1.0;
      cols.push_back(std::move(hot));
    }
  }
  const std::size_t p = cols.size();
  std::vector<std::vector<double>> gram(p, std::vector<double>(p, 0.0));
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a; b < p; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += cols[a][i] * cols[b][i];
      gram[a][b] = gram[b][a] = s;
    }
  std::vector<std::vector<double>> scores(ds.n_classes(),
                                          std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < ds.n_classes(); ++c) {
    std::vector<double> rhs(p, 0.0);
    for (std::size_t a = 0; a < p; ++a) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += cols[a][i] * (ds.labels[i] == static_cast<int>(c) ? 1.0 : -1.0);
      rhs[a] = s;
    }
    auto w = detail::ridge_solve(gram, std::move(rhs), lambda);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t a = 0; a < p; ++a) s += cols[a][i] * w[a];
      scores[c][i] = s;
    }
  }
  std::size_t errors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < ds.n_classes(); ++c)
      if (scores[c][i] > scores[best][i]) best = c;
    if (static_cast<int>(best) != ds.labels[i]) errors++;
  }
  return static_cast<double>(errors) / static_cast<double>(n);
}

inline ComplexityProfile complexity_profile(const Dataset& ds,
                                            std::uint64_t seed = 42) {
  ComplexityProfile p;
  p.cls = static_cast<int>(ds.n_classes());
  p.f1 = complexity_f1(ds, &p.flags);
  p.f3 = complexity_f3(ds);
  p.f4 = complexity_f4(ds);
  p.n1 = complexity_n1(ds);
  p.n2 = complexity_n2(ds, &p.flags);
  p.n4 = complexity_n4(ds, seed);
  p.l2 = complexity_l2(ds);
  return p;
}

// Threshold rules for when tuning tends to beat defaults, per learner. When
// tune and defaults rules fire together the verdict is tune, with every fired
// rule listed.
inline Advice advise(const ComplexityProfile& p, Learner learner) {
  Advice a;
  a.learner = learner;
  std::vector<std::string> tune_rules, default_rules;
  switch (learner) {
    case Learner::j48:
      if (p.cls > 8) tune_rules.push_back("cls > 8");
      if (p.f1 < 0.06) tune_rules.push_back("f1 < 0.06");
      if (p.n1 > 0.218) tune_rules.push_back("n1 > 0.218");
      if (p.f4 > 0.8695) default_rules.push_back("f4 > 0.8695");
      a.tune = !tune_rules.empty();
      break;
    case Learner::cart:
      if (p.n1 >= 0.278 && p.f3 > 0.0125 && p.n4 < 0.2545) {
        default_rules.push_back("n1 >= 0.278 and f3 > 0.0125 and n4 < 0.2545");
        a.tune = false;
      } else {
        tune_rules.push_back("not (n1 >= 0.278 and f3 > 0.0125 and n4 < 0.2545)");
        a.tune = true;
      }
      break;
    case Learner::ctree:
      if (p.n2 > 0.5595) tune_rules.push_back("n2 > 0.5595");
      if (p.l2 < 0.129) tune_rules.push_back("l2 < 0.129");
      a.tune = !tune_rules.empty();
      break;
  }
  a.fired = tune_rules;
  a.fired.insert(a.fired.end(), default_rules.begin(), default_rules.end());
  return a;
}

}  // namespace treetune

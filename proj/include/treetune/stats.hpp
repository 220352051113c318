#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace treetune {

struct StatsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Average-tie ranks, rank 1 for the smallest value.
inline std::vector<double> rank_ascending(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

enum class Verdict { improve, degrade, tie };

struct WilcoxonResult {
  double statistic = 0.0;  // W+ (sum of positive signed ranks)
  double p_value = 1.0;
  Verdict verdict = Verdict::tie;
  std::size_t n_used = 0;  // pairs remaining after dropping zero differences
};

namespace detail {

// Exact two-sided signed-rank p-value by dynamic programming over the sign
// assignments. Ranks are doubled so tie-averaged half ranks stay integral.
inline double wilcoxon_exact_p(const std::vector<double>& ranks, double w_plus) {
  std::vector<long> r2(ranks.size());
  long total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    r2[i] = std::llround(2.0 * ranks[i]);
    total += r2[i];
  }
  std::vector<double> count(total + 1, 0.0);
  count[0] = 1.0;
  for (long r : r2)
    for (long s = total; s >= r; --s) count[s] += count[s - r];
  const double denom = std::pow(2.0, static_cast<double>(ranks.size()));
  long w2 = std::llround(2.0 * w_plus);
  double le = 0.0, ge = 0.0;
  for (long s = 0; s <= total; ++s) {
    if (s <= w2) le += count[s];
    if (s >= w2) ge += count[s];
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / denom);
}

}  // namespace detail

// Two-sided Wilcoxon signed-rank test on paired samples. Exact enumeration up
// to 25 informative pairs, normal approximation with tie correction beyond.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b,
                                           double alpha = 0.05) {
  if (a.size() != b.size())
    throw StatsError("paired samples must have equal length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);

  WilcoxonResult res;
  res.n_used = diffs.size();
  if (diffs.empty()) return res;  // all zero differences: tie with p = 1

  std::vector<double> abs_d(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) abs_d[i] = std::fabs(diffs[i]);
  auto ranks = rank_ascending(abs_d);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i)
    if (diffs[i] > 0) w_plus += ranks[i];
  res.statistic = w_plus;

  const std::size_t n = diffs.size();
  if (n <= 25) {
    res.p_value = detail::wilcoxon_exact_p(ranks, w_plus);
  } else {
    double mean = static_cast<double>(n) * (n + 1) / 4.0;
    double var = static_cast<double>(n) * (n + 1) * (2.0 * n + 1) / 24.0;
    // tie correction: subtract sum(t^3 - t)/48 per tie group
    std::vector<double> sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
      double t = static_cast<double>(j - i + 1);
      var -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
    if (var <= 0) {
      res.p_value = 1.0;
    } else {
      double z = (w_plus - mean) / std::sqrt(var);
      boost::math::normal norm;
      res.p_value = 2.0 * boost::math::cdf(norm, -std::fabs(z));
    }
  }

  if (res.p_value < alpha) {
    std::vector<double> sd = diffs;
    std::nth_element(sd.begin(), sd.begin() + sd.size() / 2, sd.end());
    double median = sd[sd.size() / 2];
    if (sd.size() % 2 == 0) {
      auto lower = *std::max_element(sd.begin(), sd.begin() + sd.size() / 2);
      median = 0.5 * (median + lower);
    }
    res.verdict = median > 0   ? Verdict::improve
                  : median < 0 ? Verdict::degrade
                               : Verdict::tie;
  }
  return res;
}

// Per-dataset ranks for a techniques x datasets score matrix (higher score is
// better, rank 1 = best, ties averaged).
inline std::vector<std::vector<double>> rank_matrix(
    const std::vector<std::vector<double>>& scores) {
  if (scores.empty()) throw StatsError("empty score matrix");
  const std::size_t k = scores.size();
  const std::size_t n = scores[0].size();
  for (const auto& row : scores)
    if (row.size() != n) throw StatsError("ragged score matrix");
  std::vector<std::vector<double>> ranks(k, std::vector<double>(n));
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<double> col(k);
    for (std::size_t t = 0; t < k; ++t) col[t] = -scores[t][d];
    auto r = rank_ascending(col);
    for (std::size_t t = 0; t < k; ++t) ranks[t][d] = r[t];
  }
  return ranks;
}

struct FriedmanResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
  std::vector<double> mean_ranks;
};

// Friedman chi-square over a techniques x datasets score matrix:
// chi2 = 12N/(k(k+1)) * [sum R_j^2 - k(k+1)^2/4].
inline FriedmanResult friedman_test(const std::vector<std::vector<double>>& scores,
                                    double alpha = 0.05) {
  const std::size_t k = scores.size();
  if (k < 3) throw StatsError("friedman test needs >= 3 techniques");
  const std::size_t n = scores[0].size();
  if (n < 2) throw StatsError("friedman test needs >= 2 datasets");

  auto ranks = rank_matrix(scores);
  FriedmanResult res;
  res.mean_ranks.resize(k);
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    double mean = std::accumulate(ranks[t].begin(), ranks[t].end(), 0.0) /
                  static_cast<double>(n);
    res.mean_ranks[t] = mean;
    sum_sq += mean * mean;
  }
  double kk = static_cast<double>(k);
  res.statistic = 12.0 * static_cast<double>(n) / (kk * (kk + 1.0)) *
                  (sum_sq - kk * (kk + 1.0) * (kk + 1.0) / 4.0);
  res.statistic = std::max(res.statistic, 0.0);
  if (res.statistic <= 1e-12) {
    res.statistic = 0.0;
    res.p_value = 1.0;
  } else {
    boost::math::chi_squared dist(kk - 1.0);
    res.p_value = boost::math::cdf(boost::math::complement(dist, res.statistic));
  }
  res.reject = res.p_value < alpha;
  return res;
}

// Studentized-range constants divided by sqrt(2), k = 2..10.
inline double nemenyi_q(std::size_t k, double alpha) {
  static const double q05[] = {1.960, 2.343, 2.569, 2.728, 2.850,
                               2.949, 3.031, 3.102, 3.164};
  static const double q10[] = {1.645, 2.052, 2.291, 2.459, 2.589,
                               2.693, 2.780, 2.855, 2.920};
  if (k < 2 || k > 10)
    throw StatsError("nemenyi constants tabulated for k in [2,10]");
  if (std::fabs(alpha - 0.05) < 1e-9) return q05[k - 2];
  if (std::fabs(alpha - 0.10) < 1e-9) return q10[k - 2];
  throw StatsError("nemenyi constants tabulated for alpha in {0.05, 0.1}");
}

inline double nemenyi_cd(std::size_t k, std::size_t n_datasets, double alpha) {
  if (n_datasets == 0) throw StatsError("need at least one dataset");
  double kk = static_cast<double>(k);
  return nemenyi_q(k, alpha) *
         std::sqrt(kk * (kk + 1.0) / (6.0 * static_cast<double>(n_datasets)));
}

// Maximal rank-sorted intervals whose extreme gap is within the critical
// difference; every technique belongs to at least one group.
inline std::vector<std::vector<std::size_t>> cd_groups(
    const std::vector<double>& mean_ranks, double cd) {
  const std::size_t k = mean_ranks.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mean_ranks[a] < mean_ranks[b];
  });
  std::vector<std::vector<std::size_t>> groups;
  long last_end = -1;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i;
    while (j + 1 < k && mean_ranks[order[j + 1]] - mean_ranks[order[i]] <= cd + 1e-12)
      ++j;
    if (static_cast<long>(j) <= last_end) continue;  // contained in an earlier group
    last_end = static_cast<long>(j);
    std::vector<std::size_t> g;
    for (std::size_t t = i; t <= j; ++t) g.push_back(order[t]);
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace treetune

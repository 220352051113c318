#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "treetune/rforest.hpp"
#include "treetune/space.hpp"
#include "treetune/tuners/types.hpp"

namespace treetune {

struct TunerOptions {
  int population = 10;
  // irace racing controls
  int n_instances = 100;
  double race_alpha = 0.05;
  int t_first = 100;
  int t_each = 1;
  int min_survivors = 5;
  // smbo surrogate
  int forest_trees = 100;
  int ei_candidates = 1000;
};

namespace detail {

class Evaluator {
 public:
  Evaluator(const ParamSpace& space, FitnessFn fitness, int budget)
      : space_(space), fitness_(std::move(fitness)), budget_(budget) {}

  bool exhausted() const { return consumed_ >= budget_; }
  int remaining() const { return budget_ - consumed_; }
  int consumed() const { return consumed_; }

  double eval(const Configuration& config) {
    if (exhausted()) throw TunerError("budget exhausted");
    auto t0 = std::chrono::steady_clock::now();
    double f = fitness_(config);
    auto t1 = std::chrono::steady_clock::now();
    consumed_++;
    Trial trial;
    trial.index = consumed_;
    trial.config = config;
    trial.fitness = f;
    trial.wall_us =
        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
    path_.record(std::move(trial));
    if (!has_best_ || f > best_fitness_) {  // ties keep the earliest trial
      has_best_ = true;
      best_fitness_ = f;
      best_ = config;
    }
    return f;
  }

  TunerResult finish(Configuration best_override = {}) && {
    TunerResult r;
    r.best = best_override.values.empty() ? best_ : std::move(best_override);
    r.best_fitness = best_fitness_;
    r.path = std::move(path_);
    return r;
  }

  const Configuration& best() const { return best_; }
  double best_fitness() const { return best_fitness_; }

 private:
  const ParamSpace& space_;
  FitnessFn fitness_;
  int budget_;
  int consumed_ = 0;
  OptimizationPath path_;
  Configuration best_;
  double best_fitness_ = -1e300;
  bool has_best_ = false;
};

// ---- GA ------------------------------------------------------------------

struct GaParams {
  double crossover_prob = 0.8;
  double mutation_prob = 0.05;
  double scaling_factor = 2.0;  // max scaled fitness = 2 * mean
};

// Roulette selection with linear fitness scaling.
inline std::size_t ga_select(const std::vector<double>& fitness,
                             std::mt19937_64& rng, const GaParams& p) {
  const std::size_t n = fitness.size();
  double mean = std::accumulate(fitness.begin(), fitness.end(), 0.0) /
                static_cast<double>(n);
  double fmax = *std::max_element(fitness.begin(), fitness.end());
  std::vector<double> w(n, 1.0);
  if (fmax > mean + 1e-15) {
    double a = (p.scaling_factor - 1.0) * mean / (fmax - mean);
    double b = mean * (1.0 - a);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::max(0.0, a * fitness[i] + b);
  }
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (total <= 0) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(rng);
  }
  std::uniform_real_distribution<double> d(0.0, total);
  double x = d(rng);
  for (std::size_t i = 0; i < n; ++i) {
    x -= w[i];
    if (x <= 0) return i;
  }
  return n - 1;
}

// Produces `count` offspring: local arithmetic crossover with probability 0.8
// (per-coordinate uniform lambda) and per-coordinate random-reset mutation.
inline std::vector<EncodedConfig> ga_generation(
    const std::vector<EncodedConfig>& pop, const std::vector<double>& fitness,
    std::size_t count, std::mt19937_64& rng, const GaParams& p = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<EncodedConfig> offspring;
  offspring.reserve(count);
  while (offspring.size() < count) {
    const auto& a = pop[ga_select(fitness, rng, p)];
    const auto& b = pop[ga_select(fitness, rng, p)];
    EncodedConfig child = a;
    if (unit(rng) < p.crossover_prob)
      for (std::size_t d = 0; d < child.size(); ++d) {
        double lambda = unit(rng);
        child[d] = lambda * a[d] + (1.0 - lambda) * b[d];
      }
    for (std::size_t d = 0; d < child.size(); ++d)
      if (unit(rng) < p.mutation_prob) child[d] = unit(rng);
    offspring.push_back(std::move(child));
  }
  return offspring;
}

// ---- PSO (SPSO-2007) -------------------------------------------------------

struct PsoState {
  std::vector<EncodedConfig> position;
  std::vector<EncodedConfig> velocity;
  std::vector<EncodedConfig> pbest_x;
  std::vector<double> pbest_f;
  std::vector<std::vector<std::size_t>> informs;  // informs[i] = targets of i
};

inline constexpr double kPsoW = 0.7213475204444817;   // 1 / (2 ln 2)
inline constexpr double kPsoC = 1.1931471805599454;   // 0.5 + ln 2

inline void pso_randomize_links(PsoState& s, std::mt19937_64& rng, int k = 3) {
  const std::size_t n = s.position.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    s.informs[i].assign(1, i);  // each particle informs itself
    for (int j = 0; j < k; ++j) s.informs[i].push_back(pick(rng));
  }
}

// One velocity/position update for all particles. Positions are clamped to
// [0,1] with the velocity zeroed at the wall.
inline void pso_step(PsoState& s, std::mt19937_64& rng) {
  const std::size_t n = s.position.size();
  const std::size_t dims = s.position[0].size();
  // neighbourhood best per particle from the informant links
  std::vector<std::size_t> nbest(n);
  for (std::size_t i = 0; i < n; ++i) nbest[i] = i;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t target : s.informs[i])
      if (s.pbest_f[i] > s.pbest_f[nbest[target]]) nbest[target] = i;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = s.pbest_x[i];
    const auto& l = s.pbest_x[nbest[i]];
    const bool self_best = nbest[i] == i;
    for (std::size_t d = 0; d < dims; ++d) {
      double v = kPsoW * s.velocity[i][d] +
                 unit(rng) * kPsoC * (p[d] - s.position[i][d]);
      if (!self_best)
        v += unit(rng) * kPsoC * (l[d] - s.position[i][d]);
      double x = s.position[i][d] + v;
      if (x < 0.0) {
        x = 0.0;
        v = 0.0;
      } else if (x > 1.0) {
        x = 1.0;
        v = 0.0;
      }
      s.velocity[i][d] = v;
      s.position[i][d] = x;
    }
  }
}

// ---- EDA (Gaussian copula, truncated-normal margins) -----------------------

struct EdaModel {
  std::vector<double> mean, sd;              // per-coordinate margins on [0,1]
  std::vector<std::vector<double>> chol;     // Cholesky factor of the copula
};

inline std::vector<std::vector<double>> cholesky_psd(
    std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double sum = m[i][j] + (i == j ? jitter : 0.0);
        for (std::size_t k = 0; k < j; ++k) sum -= l[i][k] * l[j][k];
        if (i == j) {
          if (sum <= 1e-12) {
            ok = false;
            break;
          }
          l[i][j] = std::sqrt(sum);
        } else {
          l[i][j] = sum / l[j][j];
        }
      }
    }
    if (ok) return l;
    jitter = jitter == 0.0 ? 1e-8 : jitter * 100.0;
  }
  // fall back to independence
  std::vector<std::vector<double>> id(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) id[i][i] = 1.0;
  return id;
}

// Fits truncated-normal margins per coordinate and a Gaussian copula from the
// normal scores of the selected individuals' ranks.
inline EdaModel eda_fit(const std::vector<EncodedConfig>& selected) {
  const std::size_t n = selected.size();
  const std::size_t dims = selected[0].size();
  EdaModel model;
  model.mean.assign(dims, 0.0);
  model.sd.assign(dims, 0.0);
  for (std::size_t d = 0; d < dims; ++d) {
    double sum = 0.0, sq = 0.0;
    for (const auto& x : selected) {
      sum += x[d];
      sq += x[d] * x[d];
    }
    double mean = sum / static_cast<double>(n);
    model.mean[d] = mean;
    model.sd[d] = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
  }

  boost::math::normal norm;
  std::vector<std::vector<double>> z(n, std::vector<double>(dims, 0.0));
  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = selected[i][d];
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    for (std::size_t r = 0; r < n; ++r)
      z[order[r]][d] = boost::math::quantile(
          norm, (static_cast<double>(r) + 1.0) / (static_cast<double>(n) + 1.0));
  }
  std::vector<std::vector<double>> corr(dims, std::vector<double>(dims, 0.0));
  for (std::size_t a = 0; a < dims; ++a) {
    for (std::size_t b = a; b < dims; ++b) {
      double saa = 0.0, sbb = 0.0, sab = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        saa += z[i][a] * z[i][a];
        sbb += z[i][b] * z[i][b];
        sab += z[i][a] * z[i][b];
      }
      double denom = std::sqrt(saa * sbb);
      double r = denom > 1e-12 ? sab / denom : (a == b ? 1.0 : 0.0);
      corr[a][b] = corr[b][a] = a == b ? 1.0 : std::clamp(r, -0.999, 0.999);
    }
  }
  model.chol = cholesky_psd(std::move(corr));
  return model;
}

inline double truncnorm_quantile(double u, double mean, double sd) {
  if (sd <= 1e-12) return std::clamp(mean, 0.0, 1.0);  // point-mass margin
  boost::math::normal norm;
  double a = boost::math::cdf(norm, (0.0 - mean) / sd);
  double b = boost::math::cdf(norm, (1.0 - mean) / sd);
  double p = a + u * (b - a);
  p = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return std::clamp(mean + sd * boost::math::quantile(norm, p), 0.0, 1.0);
}

inline std::vector<EncodedConfig> eda_sample(const EdaModel& model,
                                             std::size_t count,
                                             std::mt19937_64& rng) {
  const std::size_t dims = model.mean.size();
  boost::math::normal norm;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<EncodedConfig> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> w(dims);
    for (auto& v : w) v = gauss(rng);
    EncodedConfig x(dims, 0.0);
    for (std::size_t d = 0; d < dims; ++d) {
      double zd = 0.0;
      for (std::size_t k = 0; k <= d; ++k) zd += model.chol[d][k] * w[k];
      double u = boost::math::cdf(norm, zd);
      x[d] = truncnorm_quantile(u, model.mean[d], model.sd[d]);
    }
    out.push_back(std::move(x));
  }
  return out;
}

// ---- SMBO ------------------------------------------------------------------

inline double expected_improvement(double mu, double sigma, double f_best) {
  if (sigma <= 1e-15) return 0.0;
  boost::math::normal norm;
  double z = (mu - f_best) / sigma;
  return (mu - f_best) * boost::math::cdf(norm, z) +
         sigma * boost::math::pdf(norm, z);
}

inline std::vector<EncodedConfig> latin_hypercube(std::size_t points,
                                                  std::size_t dims,
                                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<EncodedConfig> out(points, EncodedConfig(dims, 0.0));
  std::vector<std::size_t> strata(points);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (std::size_t i = 0; i < points; ++i)
      out[i][d] = (static_cast<double>(strata[i]) + unit(rng)) /
                  static_cast<double>(points);
  }
  return out;
}

// ---- Irace racing ----------------------------------------------------------

struct RaceCandidate {
  Configuration config;
  std::map<int, double> results;  // instance id -> fitness

  double mean() const {
    double s = 0.0;
    for (const auto& [_, v] : results) s += v;
    return results.empty() ? -1e300 : s / static_cast<double>(results.size());
  }
};

// Friedman chi-square over candidates x instances blocks (k >= 2 allowed
// inside a race) with tie-averaged ranks.
inline double race_friedman_pvalue(const std::vector<std::vector<double>>& rows,
                                   std::vector<double>& rank_sums) {
  const std::size_t m = rows.size();
  const std::size_t n = rows[0].size();
  rank_sums.assign(m, 0.0);
  for (std::size_t inst = 0; inst < n; ++inst) {
    std::vector<double> col(m);
    for (std::size_t c = 0; c < m; ++c) col[c] = -rows[c][inst];  // higher = better
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    std::size_t i = 0;
    while (i < m) {
      std::size_t j = i;
      while (j + 1 < m && col[order[j + 1]] == col[order[i]]) ++j;
      double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) rank_sums[order[t]] += avg;
      i = j + 1;
    }
  }
  double mm = static_cast<double>(m), nn = static_cast<double>(n);
  double sum_sq = 0.0;
  for (double r : rank_sums) sum_sq += r * r;
  double stat =
      12.0 / (nn * mm * (mm + 1.0)) * sum_sq - 3.0 * nn * (mm + 1.0);
  if (stat <= 1e-12) return 1.0;
  boost::math::chi_squared dist(mm - 1.0);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Conover-style least significant rank-sum difference after a Friedman
// rejection; candidates whose rank sum trails the best by more are dropped.
inline double race_lsd(const std::vector<std::vector<double>>& rows,
                       const std::vector<double>& rank_sums, double alpha) {
  const double m = static_cast<double>(rows.size());
  const double n = static_cast<double>(rows[0].size());
  // recompute per-cell ranks for the squared-rank sum
  double a_sum = 0.0;
  const std::size_t mc = rows.size(), nc = rows[0].size();
  for (std::size_t inst = 0; inst < nc; ++inst) {
    std::vector<double> col(mc);
    for (std::size_t c = 0; c < mc; ++c) col[c] = -rows[c][inst];
    std::vector<std::size_t> order(mc);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    std::size_t i = 0;
    while (i < mc) {
      std::size_t j = i;
      while (j + 1 < mc && col[order[j + 1]] == col[order[i]]) ++j;
      double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      a_sum += avg * avg * static_cast<double>(j - i + 1);
      i = j + 1;
    }
  }
  double b_sum = 0.0;
  for (double r : rank_sums) b_sum += r * r;
  b_sum /= n;
  double denom = (n - 1.0) * (m - 1.0);
  if (denom <= 0) return 1e300;
  // A == B happens when every instance ranks the candidates identically with
  // no ties: perfect agreement, so any rank-sum gap is significant
  if (a_sum - b_sum <= 1e-12) return 0.0;
  double se = std::sqrt(2.0 * n * (a_sum - b_sum) / denom);
  boost::math::students_t dist(denom);
  return boost::math::quantile(dist, 1.0 - alpha / 2.0) * se;
}

}  // namespace detail

// Runs the requested technique to the evaluation budget; returns the best
// configuration, its fitness, and the full optimization path. For irace an
// optional per-instance fitness enables true racing over the resampling pool.
inline TunerResult run_tuner(Technique technique, const ParamSpace& space,
                             FitnessFn fitness, int budget, std::uint64_t seed,
                             InstanceFitnessFn instance_fitness = nullptr,
                             TunerOptions opts = {}) {
  if (budget < opts.population)
    throw TunerError("budget below initial population (" +
                     std::to_string(opts.population) + ")");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  detail::Evaluator ev(space, fitness, budget);
  const std::size_t dims = space.size();
  const std::size_t pop_size = static_cast<std::size_t>(opts.population);

  switch (technique) {
    case Technique::rs: {
      while (!ev.exhausted()) ev.eval(space.sample(rng));
      return std::move(ev).finish();
    }

    case Technique::ga: {
      std::vector<EncodedConfig> pop;
      std::vector<double> fit;
      for (std::size_t i = 0; i < pop_size && !ev.exhausted(); ++i) {
        auto c = space.sample(rng);
        pop.push_back(space.encode(c));
        fit.push_back(ev.eval(c));
      }
      while (!ev.exhausted()) {
        std::size_t elite = static_cast<std::size_t>(
            std::max_element(fit.begin(), fit.end()) - fit.begin());
        auto offspring = detail::ga_generation(pop, fit, pop_size - 1, rng);
        std::vector<EncodedConfig> next = {pop[elite]};
        std::vector<double> next_fit = {0.0};
        next_fit[0] = ev.exhausted() ? fit[elite] : ev.eval(space.decode(pop[elite]));
        for (auto& child : offspring) {
          if (ev.exhausted()) break;
          next_fit.push_back(ev.eval(space.decode(child)));
          next.push_back(std::move(child));
        }
        pop = std::move(next);
        fit = std::move(next_fit);
      }
      return std::move(ev).finish();
    }

    case Technique::pso: {
      detail::PsoState s;
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (std::size_t i = 0; i < pop_size && !ev.exhausted(); ++i) {
        auto c = space.sample(rng);
        auto x = space.encode(c);
        EncodedConfig v(dims);
        for (std::size_t d = 0; d < dims; ++d) v[d] = (unit(rng) - x[d]) / 2.0;
        s.position.push_back(x);
        s.velocity.push_back(std::move(v));
        s.pbest_x.push_back(x);
        s.pbest_f.push_back(ev.eval(c));
      }
      s.informs.resize(s.position.size());
      detail::pso_randomize_links(s, rng);
      double gbest = *std::max_element(s.pbest_f.begin(), s.pbest_f.end());
      while (!ev.exhausted()) {
        detail::pso_step(s, rng);
        for (std::size_t i = 0; i < s.position.size() && !ev.exhausted(); ++i) {
          double f = ev.eval(space.decode(s.position[i]));
          if (f > s.pbest_f[i]) {
            s.pbest_f[i] = f;
            s.pbest_x[i] = s.position[i];
          }
        }
        double now = *std::max_element(s.pbest_f.begin(), s.pbest_f.end());
        if (now <= gbest) detail::pso_randomize_links(s, rng);
        gbest = now;
      }
      return std::move(ev).finish();
    }

    case Technique::eda: {
      std::vector<EncodedConfig> pop;
      std::vector<double> fit;
      for (std::size_t i = 0; i < pop_size && !ev.exhausted(); ++i) {
        auto c = space.sample(rng);
        pop.push_back(space.encode(c));
        fit.push_back(ev.eval(c));
      }
      while (!ev.exhausted()) {
        std::vector<std::size_t> order(pop.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return fit[a] > fit[b];
        });
        std::vector<EncodedConfig> selected;
        for (std::size_t i = 0; i < pop.size() / 2; ++i)
          selected.push_back(pop[order[i]]);
        auto model = detail::eda_fit(selected);
        auto offspring = detail::eda_sample(model, pop_size - 1, rng);

        std::vector<EncodedConfig> next = {pop[order[0]]};
        std::vector<double> next_fit;
        next_fit.push_back(ev.exhausted() ? fit[order[0]]
                                          : ev.eval(space.decode(pop[order[0]])));
        for (auto& child : offspring) {
          if (ev.exhausted()) break;
          next_fit.push_back(ev.eval(space.decode(child)));
          next.push_back(std::move(child));
        }
        pop = std::move(next);
        fit = std::move(next_fit);
      }
      return std::move(ev).finish();
    }

    case Technique::smbo: {
      std::vector<std::vector<double>> xs;
      std::vector<double> ys;
      for (auto& x : detail::latin_hypercube(pop_size, dims, rng)) {
        if (ev.exhausted()) break;
        double f = ev.eval(space.decode(x));
        xs.push_back(std::move(x));
        ys.push_back(f);
      }
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::normal_distribution<double> jiggle(0.0, 0.1);
      while (!ev.exhausted()) {
        double ymin = *std::min_element(ys.begin(), ys.end());
        double ymax = *std::max_element(ys.begin(), ys.end());
        EncodedConfig proposal;
        if (ymax - ymin <= 1e-15) {
          // degenerate surrogate: fall back to uniform sampling
          proposal.assign(dims, 0.0);
          for (auto& v : proposal) v = unit(rng);
        } else {
          ForestParams fp;
          fp.n_trees = opts.forest_trees;
          fp.min_leaf = 1;
          fp.max_features =
              static_cast<int>((dims + 2) / 3);  // ceil(k/3) split candidates
          auto forest = fit_forest(xs, ys, fp, rng());
          double f_best = ev.best_fitness();

          std::vector<EncodedConfig> cands;
          for (int i = 0; i < opts.ei_candidates; ++i) {
            EncodedConfig x(dims);
            for (auto& v : x) v = unit(rng);
            cands.push_back(std::move(x));
          }
          // the ten best observed points, mutated
          std::vector<std::size_t> order(ys.size());
          std::iota(order.begin(), order.end(), 0);
          std::stable_sort(order.begin(), order.end(),
                           [&](std::size_t a, std::size_t b) { return ys[a] > ys[b]; });
          for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
            EncodedConfig x = xs[order[i]];
            for (auto& v : x) v = std::clamp(v + jiggle(rng), 0.0, 1.0);
            cands.push_back(std::move(x));
          }
          double best_ei = -1.0;
          for (auto& x : cands) {
            auto [mu, sigma] = forest_predict(forest, x);
            double ei = detail::expected_improvement(mu, sigma, f_best);
            if (ei > best_ei) {
              best_ei = ei;
              proposal = x;
            }
          }
          if (best_ei <= 0.0) {
            for (auto& v : proposal) v = unit(rng);
          }
        }
        double f = ev.eval(space.decode(proposal));
        xs.push_back(std::move(proposal));
        ys.push_back(f);
      }
      return std::move(ev).finish();
    }

    case Technique::irace: {
      InstanceFitnessFn per_instance = instance_fitness;
      if (!per_instance)
        per_instance = [&fitness](const Configuration& c, int) { return fitness(c); };
      // instance evaluations flow through the shared evaluator for budget
      // accounting and path logging
      int current_instance = 0;
      FitnessFn instance_eval = [&](const Configuration& c) {
        return per_instance(c, current_instance);
      };
      detail::Evaluator race_ev(space, instance_eval, budget);

      const int n_iter =
          2 + static_cast<int>(std::lround(std::log2(std::max<double>(2.0, dims))));
      std::vector<detail::RaceCandidate> elites;
      std::vector<int> pool(opts.n_instances);
      std::iota(pool.begin(), pool.end(), 0);

      for (int iter = 1; iter <= n_iter && !race_ev.exhausted(); ++iter) {
        int b_iter = race_ev.remaining() / (n_iter - iter + 1);
        int mu = 5 + std::min(iter, 5);
        int n_cand = std::max(opts.min_survivors + 1, b_iter / mu);

        std::vector<detail::RaceCandidate> cands = elites;
        while (static_cast<int>(cands.size()) < n_cand) {
          detail::RaceCandidate c;
          if (elites.empty()) {
            c.config = space.sample(rng);
          } else {
            // rank-weighted elite, per-parameter perturbation with
            // dispersion shrinking each iteration
            std::vector<double> w(elites.size());
            for (std::size_t e = 0; e < elites.size(); ++e)
              w[e] = static_cast<double>(elites.size() - e);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            const Configuration& elite = elites[pick(rng)].config;
            Configuration nc;
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::normal_distribution<double> gauss(0.0, 1.0);
            double shrink = std::pow(0.5, iter);
            for (const auto& p : space.params()) {
              if (!space.active(p, nc)) continue;
              if (!elite.has(p.name)) {
                nc.values[p.name] = space.sample_value(p, rng);
                continue;
              }
              switch (p.kind) {
                case ParamSpec::Kind::real: {
                  double v = std::get<double>(elite.at(p.name)) +
                             gauss(rng) * (p.hi - p.lo) * shrink;
                  nc.values[p.name] = std::clamp(v, p.lo + 1e-9, p.hi - 1e-9);
                  break;
                }
                case ParamSpec::Kind::integer: {
                  double v = static_cast<double>(
                                 std::get<long long>(elite.at(p.name))) +
                             gauss(rng) * (p.hi - p.lo) * shrink;
                  nc.values[p.name] = static_cast<long long>(std::llround(
                      std::clamp(v, p.lo, p.hi)));
                  break;
                }
                case ParamSpec::Kind::boolean:
                case ParamSpec::Kind::categorical: {
                  // softened categorical: elite level keeps growing mass
                  double p_elite = (1.0 + iter) /
                                   (static_cast<double>(p.level_count()) + iter);
                  if (unit(rng) < p_elite)
                    nc.values[p.name] = elite.at(p.name);
                  else
                    nc.values[p.name] = space.sample_value(p, rng);
                  break;
                }
              }
            }
            c.config = std::move(nc);
          }
          cands.push_back(std::move(c));
        }

        std::shuffle(pool.begin(), pool.end(), rng);
        std::vector<bool> alive(cands.size(), true);
        int race_evals = 0;
        int instances_seen = 0;
        int next_test = opts.t_first;
        for (int ii = 0; ii < static_cast<int>(pool.size()); ++ii) {
          int inst = pool[ii];
          int need = 0;
          for (std::size_t c = 0; c < cands.size(); ++c)
            need += alive[c] && !cands[c].results.count(inst);
          if (need > std::min(b_iter - race_evals, race_ev.remaining())) break;
          for (std::size_t c = 0; c < cands.size(); ++c) {
            if (!alive[c] || cands[c].results.count(inst)) continue;
            current_instance = inst;
            cands[c].results[inst] = race_ev.eval(cands[c].config);
            race_evals++;
          }
          instances_seen++;

          int n_alive = static_cast<int>(std::count(alive.begin(), alive.end(), true));
          if (race_evals >= next_test && instances_seen >= 2 && n_alive >= 2) {
            next_test = race_evals + opts.t_each * n_alive;
            std::vector<std::vector<double>> rows;
            std::vector<std::size_t> who;
            for (std::size_t c = 0; c < cands.size(); ++c) {
              if (!alive[c]) continue;
              std::vector<double> row;
              for (int jj = 0; jj <= ii; ++jj) {
                auto it = cands[c].results.find(pool[jj]);
                if (it == cands[c].results.end()) break;
                row.push_back(it->second);
              }
              if (static_cast<int>(row.size()) == instances_seen) {
                rows.push_back(std::move(row));
                who.push_back(c);
              }
            }
            if (rows.size() >= 2) {
              std::vector<double> rank_sums;
              double p = detail::race_friedman_pvalue(rows, rank_sums);
              if (p < opts.race_alpha) {
                double lsd = detail::race_lsd(rows, rank_sums, opts.race_alpha);
                double best_rank =
                    *std::min_element(rank_sums.begin(), rank_sums.end());
                for (std::size_t r = 0; r < rows.size(); ++r)
                  if (rank_sums[r] - best_rank > lsd) alive[who[r]] = false;
              }
            }
            n_alive = static_cast<int>(std::count(alive.begin(), alive.end(), true));
            if (n_alive <= opts.min_survivors) break;
          }
        }

        std::vector<detail::RaceCandidate> survivors;
        for (std::size_t c = 0; c < cands.size(); ++c)
          if (alive[c]) survivors.push_back(std::move(cands[c]));
        std::stable_sort(survivors.begin(), survivors.end(),
                         [](const detail::RaceCandidate& a,
                            const detail::RaceCandidate& b) {
                           return a.mean() > b.mean();
                         });
        if (survivors.size() > static_cast<std::size_t>(opts.min_survivors))
          survivors.resize(opts.min_survivors);
        elites = std::move(survivors);
      }

      Configuration winner =
          elites.empty() ? space.defaults() : elites.front().config;
      return std::move(race_ev).finish(std::move(winner));
    }
  }
  throw TunerError("unknown technique");
}

}  // namespace treetune

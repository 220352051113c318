#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "treetune/learner.hpp"
#include "treetune/tuners.hpp"

namespace treetune {

struct HarnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentPlan {
  std::string experiment_id = "experiment";
  Learner learner = Learner::cart;
  std::vector<Technique> techniques;
  bool include_defaults = true;
  int outer_k = 10;
  int inner_k = 3;
  int budget = 900;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  double convergence_epsilon = 1e-5;
  std::string out_dir;       // empty: keep everything in memory only
  bool keep_paths = false;   // retain full optimization paths in the report

  void check() const {
    if (outer_k < 2 || inner_k < 2) throw HarnessError("fold counts must be >= 2");
    if (budget < 10) throw HarnessError("budget must be >= 10");
    if (seeds.empty()) throw HarnessError("at least one repetition seed required");
    std::vector<std::uint64_t> s = seeds;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
      throw HarnessError("repetition seeds must be distinct");
  }
};

struct ReportRow {
  std::string technique;  // technique name or "defaults"
  std::uint64_t seed = 0;
  int outer_fold = 0;
  Configuration best_config;
  double inner_fitness = 0.0;  // best fitness seen by the tuner
  double test_bac = 0.0;
  long tree_size = 0;
  std::int64_t tuning_us = 0;
  std::int64_t training_us = 0;
  std::int64_t testing_us = 0;
  int tuning_evals = 0;
  int convergence_index = 0;  // 0 for the defaults arm
};

struct InnerPlanRecord {
  std::uint64_t seed = 0;
  int outer_fold = 0;
  std::vector<int> train_indices;              // outer-training split
  std::vector<std::vector<int>> inner_folds;   // partition of train_indices
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::string dataset_name;
  std::vector<ReportRow> rows;
  std::map<std::uint64_t, FoldPlan> outer_plans;   // per repetition seed
  std::vector<InnerPlanRecord> inner_plans;        // per (seed, outer fold)
  // keyed by (technique, seed, outer fold) when plan.keep_paths is set
  std::map<std::tuple<std::string, std::uint64_t, int>, OptimizationPath> paths;
};

// Smallest 1-based trial index whose cumulative best is within epsilon of the
// final best of the path.
inline int convergence_stats(const OptimizationPath& path, double epsilon) {
  if (path.trials.empty()) throw HarnessError("empty optimization path");
  double target = path.cumulative_best.back() - epsilon;
  for (std::size_t i = 0; i < path.cumulative_best.size(); ++i)
    if (path.cumulative_best[i] >= target) return static_cast<int>(i) + 1;
  return static_cast<int>(path.cumulative_best.size());
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  x ^= x >> 29;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 32;
  return x;
}

// Stratified k-way partition of an index subset: shuffle within class, deal
// round-robin. Non-strict: tiny classes just land in fewer folds.
inline std::vector<std::vector<int>> stratified_subset_folds(
    const Dataset& ds, const std::vector<int>& indices, int k,
    std::uint64_t seed) {
  std::vector<std::vector<int>> folds(k);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::vector<int>> by_class(ds.n_classes());
  for (int i : indices) by_class[ds.labels[i]].push_back(i);
  int offset = 0;
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); ++i)
      folds[(offset + static_cast<int>(i)) % k].push_back(idx[i]);
    offset = (offset + static_cast<int>(idx.size())) % k;
  }
  return folds;
}

inline nlohmann::json config_to_json(const Configuration& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, value] : c.values) {
    std::visit([&](const auto& v) { j[name] = v; }, value);
  }
  return j;
}

inline Configuration config_from_json(const nlohmann::json& j,
                                      const ParamSpace& space) {
  Configuration c;
  for (const auto& p : space.params()) {
    if (!j.contains(p.name)) continue;
    const auto& v = j.at(p.name);
    switch (p.kind) {
      case ParamSpec::Kind::real: c.values[p.name] = v.get<double>(); break;
      case ParamSpec::Kind::integer: c.values[p.name] = v.get<long long>(); break;
      case ParamSpec::Kind::boolean: c.values[p.name] = v.get<bool>(); break;
      case ParamSpec::Kind::categorical:
        c.values[p.name] = v.get<std::string>();
        break;
    }
  }
  return c;
}

// Mean balanced accuracy of `config` over the given inner folds, training on
// the complement within `train_indices` each time.
inline double inner_cv_fitness(const Dataset& ds, Learner learner,
                               const Configuration& config,
                               const std::vector<int>& train_indices,
                               const std::vector<std::vector<int>>& inner_folds,
                               std::uint64_t seed) {
  double total = 0.0;
  int used = 0;
  for (std::size_t f = 0; f < inner_folds.size(); ++f) {
    const auto& val = inner_folds[f];
    if (val.empty()) continue;
    std::vector<int> fit_idx;
    fit_idx.reserve(train_indices.size() - val.size());
    for (std::size_t g = 0; g < inner_folds.size(); ++g)
      if (g != f)
        fit_idx.insert(fit_idx.end(), inner_folds[g].begin(), inner_folds[g].end());
    TreeModel model;
    try {
      model = fit_learner(learner, ds, fit_idx, config, mix_seed(seed, f));
    } catch (const std::exception& e) {
      throw HarnessError(std::string("fitness evaluation failed for config ") +
                         config.to_string() + ": " + e.what());
    }
    total += balanced_accuracy(evaluate(model, ds, val));
    used++;
  }
  if (used == 0) throw HarnessError("no usable inner folds");
  return total / used;
}

class TrialLog {
 public:
  TrialLog() = default;
  explicit TrialLog(const std::filesystem::path& file) {
    std::filesystem::create_directories(file.parent_path());
    out_.open(file);
    if (!out_) throw HarnessError("cannot open " + file.string());
  }
  bool active() const { return out_.is_open(); }
  void write(const nlohmann::json& j) {
    if (out_.is_open()) out_ << j.dump() << "\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace detail

// Nested cross-validation over one dataset/learner: for each repetition seed
// and outer fold, every technique arm tunes on the outer-training split (inner
// 3-fold fitness), refits the winner on the full split, and is scored once on
// the held-out fold. A defaults arm skips tuning. All arms of a repetition
// share the same fold plans.
inline ExperimentReport run_experiment(const Dataset& ds,
                                       const ExperimentPlan& plan) {
  plan.check();
  if (!ds.stratifiable(plan.outer_k))
    throw HarnessError("dataset '" + ds.name + "' is not stratifiable into " +
                       std::to_string(plan.outer_k) + " folds");
  ExperimentReport report;
  report.plan = plan;
  report.dataset_name = ds.name;

  std::vector<std::string> arms;
  if (plan.include_defaults) arms.push_back("defaults");
  for (Technique t : plan.techniques) arms.push_back(technique_name(t));

  std::filesystem::path root;
  if (!plan.out_dir.empty()) {
    root = std::filesystem::path(plan.out_dir) / ds.name / learner_name(plan.learner);
    std::filesystem::create_directories(root);
    std::ofstream plan_file(root / "plan.json");
    nlohmann::json pj = {
        {"experiment_id", plan.experiment_id},
        {"dataset", ds.name},
        {"learner", learner_name(plan.learner)},
        {"techniques", arms},
        {"outer_k", plan.outer_k},
        {"inner_k", plan.inner_k},
        {"budget", plan.budget},
        {"seeds", plan.seeds},
        {"convergence_epsilon", plan.convergence_epsilon},
    };
    plan_file << pj.dump(2) << "\n";
  }

  for (std::uint64_t seed : plan.seeds) {
    FoldPlan outer = stratified_folds(ds, plan.outer_k, seed);
    report.outer_plans[seed] = outer;

    for (int fold = 0; fold < plan.outer_k; ++fold) {
      std::vector<int> train_idx = outer.complement_indices(fold);
      std::vector<int> test_idx = outer.fold_indices(fold);
      std::uint64_t fold_seed = detail::mix_seed(seed, static_cast<std::uint64_t>(fold));
      auto inner_folds =
          detail::stratified_subset_folds(ds, train_idx, plan.inner_k, fold_seed);
      report.inner_plans.push_back({seed, fold, train_idx, inner_folds});

      FitnessFn fitness = [&](const Configuration& config) {
        return detail::inner_cv_fitness(ds, plan.learner, config, train_idx,
                                        inner_folds, fold_seed);
      };
      // one racing instance = one freshly seeded inner split of the same
      // outer-training data
      InstanceFitnessFn instance_fitness = [&](const Configuration& config,
                                               int instance) {
        std::uint64_t s = detail::mix_seed(fold_seed, 1000 + instance);
        auto folds = detail::stratified_subset_folds(ds, train_idx, plan.inner_k, s);
        return detail::inner_cv_fitness(ds, plan.learner, config, train_idx,
                                        folds, s);
      };

      for (const std::string& arm : arms) {
        ReportRow row;
        row.technique = arm;
        row.seed = seed;
        row.outer_fold = fold;

        if (arm == "defaults") {
          row.best_config = builtin_space(plan.learner, ds.n_features()).defaults();
          row.tuning_us = 0;
          row.tuning_evals = 0;
          row.inner_fitness = fitness(row.best_config);
        } else {
          Technique tech = technique_from_name(arm);
          ParamSpace space = builtin_space(plan.learner, ds.n_features());
          auto t0 = std::chrono::steady_clock::now();
          TunerResult res =
              run_tuner(tech, space, fitness, plan.budget,
                        detail::mix_seed(fold_seed, 7777 + static_cast<int>(tech)),
                        instance_fitness);
          auto t1 = std::chrono::steady_clock::now();
          row.tuning_us =
              std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
          row.best_config = res.best;
          row.inner_fitness = res.best_fitness;
          row.tuning_evals = static_cast<int>(res.path.trials.size());
          row.convergence_index =
              convergence_stats(res.path, plan.convergence_epsilon);

          if (!plan.out_dir.empty()) {
            detail::TrialLog log(root / arm / ("seed" + std::to_string(seed)) /
                                 ("fold" + std::to_string(fold) + "_trials.jsonl"));
            for (const Trial& t : res.path.trials)
              log.write({{"experiment", plan.experiment_id},
                         {"technique", arm},
                         {"seed", seed},
                         {"outer_fold", fold},
                         {"trial", t.index},
                         {"config", detail::config_to_json(t.config)},
                         {"fitness", t.fitness},
                         {"wall_us", t.wall_us}});
          }
          if (plan.keep_paths)
            report.paths[{arm, seed, fold}] = std::move(res.path);
        }

        auto t2 = std::chrono::steady_clock::now();
        TreeModel model;
        try {
          model = fit_learner(plan.learner, ds, train_idx, row.best_config,
                              detail::mix_seed(fold_seed, 31337));
        } catch (const std::exception& e) {
          throw HarnessError(std::string("final training failed for config ") +
                             row.best_config.to_string() + ": " + e.what());
        }
        auto t3 = std::chrono::steady_clock::now();
        row.test_bac = balanced_accuracy(evaluate(model, ds, test_idx));
        auto t4 = std::chrono::steady_clock::now();
        row.training_us =
            std::chrono::duration_cast<std::chrono::microseconds>(t3 - t2).count();
        row.testing_us =
            std::chrono::duration_cast<std::chrono::microseconds>(t4 - t3).count();
        row.tree_size = static_cast<long>(tree_size(model));
        report.rows.push_back(std::move(row));
      }
    }
  }

  if (!plan.out_dir.empty()) {
    std::map<std::pair<std::string, std::uint64_t>, detail::TrialLog> logs;
    for (const ReportRow& row : report.rows) {
      auto key = std::make_pair(row.technique, row.seed);
      auto it = logs.find(key);
      if (it == logs.end())
        it = logs
                 .emplace(key, detail::TrialLog(
                                   root / row.technique /
                                   ("seed" + std::to_string(row.seed)) /
                                   "report.jsonl"))
                 .first;
      it->second.write({{"experiment", plan.experiment_id},
                        {"dataset", ds.name},
                        {"learner", learner_name(plan.learner)},
                        {"technique", row.technique},
                        {"seed", row.seed},
                        {"outer_fold", row.outer_fold},
                        {"config", detail::config_to_json(row.best_config)},
                        {"inner_fitness", row.inner_fitness},
                        {"test_bac", row.test_bac},
                        {"tree_size", row.tree_size},
                        {"tuning_us", row.tuning_us},
                        {"training_us", row.training_us},
                        {"testing_us", row.testing_us},
                        {"tuning_evals", row.tuning_evals},
                        {"convergence_index", row.convergence_index}});
    }
  }
  return report;
}

}  // namespace treetune

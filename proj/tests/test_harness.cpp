#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "treetune/harness.hpp"

using namespace treetune;

namespace {

Dataset blob_dataset(int per_class, std::uint64_t seed) {
  Dataset ds;
  ds.name = "blobs";
  FeatureColumn x, y;
  x.name = "x";
  y.name = "y";
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.35);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_class; ++i) {
      x.num.push_back(c + noise(rng));
      y.num.push_back(c + noise(rng));
      ds.labels.push_back(c);
    }
  ds.features = {x, y};
  ds.class_names = {"a", "b"};
  ds.check();
  return ds;
}

OptimizationPath path_of(const std::vector<double>& fitnesses) {
  OptimizationPath p;
  for (std::size_t i = 0; i < fitnesses.size(); ++i) {
    Trial t;
    t.index = static_cast<int>(i) + 1;
    t.fitness = fitnesses[i];
    p.record(std::move(t));
  }
  return p;
}

struct RowKey {
  std::string technique;
  std::uint64_t seed;
  int fold;
};

}  // namespace

TEST_CASE("experiment plan validation") {
  ExperimentPlan plan;
  plan.techniques = {Technique::rs};
  CHECK_NOTHROW(plan.check());

  ExperimentPlan bad = plan;
  bad.budget = 5;
  CHECK_THROWS_AS(bad.check(), HarnessError);
  bad = plan;
  bad.outer_k = 1;
  CHECK_THROWS_AS(bad.check(), HarnessError);
  bad = plan;
  bad.seeds = {1, 2, 1};
  CHECK_THROWS_AS(bad.check(), HarnessError);
  bad = plan;
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.check(), HarnessError);
}

TEST_CASE("convergence index against hand-walked paths") {
  CHECK(convergence_stats(path_of({0.5, 0.5, 0.5}), 1e-5) == 1);
  CHECK(convergence_stats(path_of({0.5, 0.6, 0.6, 0.7}), 1e-5) == 4);
  // a generous epsilon accepts the first point within reach of the final best
  CHECK(convergence_stats(path_of({0.5, 0.6, 0.6, 0.7}), 0.11) == 2);
  CHECK(convergence_stats(path_of({0.5, 0.6, 0.6, 0.7}), 1.0) == 1);
  // late improvement pushes the index to the end
  std::vector<double> late(37, 0.5);
  late.back() = 0.9;
  CHECK(convergence_stats(path_of(late), 1e-5) == 37);
  CHECK_THROWS_AS(convergence_stats(OptimizationPath{}, 1e-5), HarnessError);
}

TEST_CASE("a constant predictor scores balanced accuracy one half") {
  auto ds = blob_dataset(20, 3);
  std::vector<int> train(ds.n_instances());
  std::iota(train.begin(), train.end(), 0);
  auto folds = detail::stratified_subset_folds(ds, train, 2, 5);
  Configuration stump = builtin_space(Learner::cart, 2).defaults();
  stump.values["minsplit"] = static_cast<long long>(50);
  stump.values["minbucket"] = static_cast<long long>(50);
  double f = detail::inner_cv_fitness(ds, Learner::cart, stump, train, folds, 5);
  CHECK(f == doctest::Approx(0.5));
}

TEST_CASE("config json round trip preserves every parameter kind") {
  ParamSpace space = builtin_space(Learner::cart, 2);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    Configuration c = space.sample(rng);
    Configuration back = detail::config_from_json(detail::config_to_json(c), space);
    CHECK(back.to_string() == c.to_string());
  }
}

TEST_CASE("nested cross-validation experiment end to end") {
  auto ds = blob_dataset(20, 7);
  ExperimentPlan plan;
  plan.experiment_id = "tiny";
  plan.learner = Learner::cart;
  plan.techniques = {Technique::rs};
  plan.outer_k = 2;
  plan.inner_k = 2;
  plan.budget = 10;
  plan.seeds = {1, 2};
  plan.keep_paths = true;

  ExperimentReport report = run_experiment(ds, plan);
  // two seeds x two folds x (defaults + rs)
  REQUIRE(report.rows.size() == 8);
  CHECK(report.dataset_name == "blobs");
  REQUIRE(report.inner_plans.size() == 4);
  CHECK(report.outer_plans.size() == 2);

  for (const ReportRow& row : report.rows) {
    CHECK(row.test_bac >= 0.0);
    CHECK(row.test_bac <= 1.0);
    CHECK(row.tree_size >= 1);
    if (row.technique == "defaults") {
      CHECK(row.tuning_us == 0);
      CHECK(row.tuning_evals == 0);
      CHECK(row.convergence_index == 0);
    } else {
      CHECK(row.technique == "rs");
      CHECK(row.tuning_evals == 10);
      CHECK(row.convergence_index >= 1);
      CHECK(row.convergence_index <= 10);
      const auto& path =
          report.paths.at({row.technique, row.seed, row.outer_fold});
      REQUIRE(path.trials.size() == 10);
      double best = -1.0;
      for (const Trial& t : path.trials) best = std::max(best, t.fitness);
      CHECK(row.inner_fitness == doctest::Approx(best));
      CHECK(path.cumulative_best.back() == doctest::Approx(best));
    }
  }

  // no leakage: inner folds partition the outer-training split, which is
  // disjoint from the held-out fold
  for (const InnerPlanRecord& rec : report.inner_plans) {
    const FoldPlan& outer = report.outer_plans.at(rec.seed);
    auto test_idx = outer.fold_indices(rec.outer_fold);

    std::vector<int> merged;
    for (const auto& f : rec.inner_folds)
      merged.insert(merged.end(), f.begin(), f.end());
    std::vector<int> train_sorted = rec.train_indices;
    std::sort(train_sorted.begin(), train_sorted.end());
    std::sort(merged.begin(), merged.end());
    CHECK(merged == train_sorted);
    CHECK(std::adjacent_find(merged.begin(), merged.end()) == merged.end());

    std::vector<int> overlap;
    std::set_intersection(train_sorted.begin(), train_sorted.end(),
                          test_idx.begin(), test_idx.end(),
                          std::back_inserter(overlap));
    CHECK(overlap.empty());
    CHECK(train_sorted.size() + test_idx.size() == ds.n_instances());
  }

  // replay: the whole experiment is a pure function of dataset + plan,
  // ignoring wall-clock fields
  ExperimentReport again = run_experiment(ds, plan);
  REQUIRE(again.rows.size() == report.rows.size());
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& a = report.rows[i];
    const auto& b = again.rows[i];
    CHECK(a.technique == b.technique);
    CHECK(a.seed == b.seed);
    CHECK(a.outer_fold == b.outer_fold);
    CHECK(a.best_config.to_string() == b.best_config.to_string());
    CHECK(a.inner_fitness == doctest::Approx(b.inner_fitness));
    CHECK(a.test_bac == doctest::Approx(b.test_bac));
    CHECK(a.tree_size == b.tree_size);
    CHECK(a.tuning_evals == b.tuning_evals);
    CHECK(a.convergence_index == b.convergence_index);
  }
}

TEST_CASE("experiment persistence layout and log contents") {
  namespace fs = std::filesystem;
  auto ds = blob_dataset(20, 9);
  fs::path out = fs::temp_directory_path() / "treetune_harness_test";
  fs::remove_all(out);

  ExperimentPlan plan;
  plan.experiment_id = "persist";
  plan.learner = Learner::cart;
  plan.techniques = {Technique::rs};
  plan.outer_k = 2;
  plan.inner_k = 2;
  plan.budget = 10;
  plan.seeds = {1};
  plan.out_dir = out.string();

  run_experiment(ds, plan);
  fs::path root = out / "blobs" / "cart";
  REQUIRE(fs::exists(root / "plan.json"));
  {
    std::ifstream in(root / "plan.json");
    auto pj = nlohmann::json::parse(in);
    CHECK(pj.at("experiment_id") == "persist");
    CHECK(pj.at("dataset") == "blobs");
    CHECK(pj.at("learner") == "cart");
    CHECK(pj.at("budget") == 10);
    CHECK(pj.at("techniques") ==
          nlohmann::json(std::vector<std::string>{"defaults", "rs"}));
  }

  for (const std::string arm : {"defaults", "rs"}) {
    fs::path rep = root / arm / "seed1" / "report.jsonl";
    REQUIRE(fs::exists(rep));
    std::ifstream in(rep);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
      auto j = nlohmann::json::parse(line);
      CHECK(j.at("technique") == arm);
      CHECK(j.at("dataset") == "blobs");
      CHECK(j.at("seed") == 1);
      CHECK(j.at("test_bac").get<double>() >= 0.0);
      CHECK(j.at("config").is_object());
      rows++;
    }
    CHECK(rows == 2);  // one row per outer fold
  }

  for (int fold : {0, 1}) {
    fs::path trials =
        root / "rs" / "seed1" / ("fold" + std::to_string(fold) + "_trials.jsonl");
    REQUIRE(fs::exists(trials));
    std::ifstream in(trials);
    std::string line;
    int n = 0;
    ParamSpace space = builtin_space(Learner::cart, 2);
    while (std::getline(in, line)) {
      auto j = nlohmann::json::parse(line);
      n++;
      CHECK(j.at("trial") == n);
      CHECK(j.at("technique") == "rs");
      Configuration c = detail::config_from_json(j.at("config"), space);
      CHECK(space.validate(c).empty());
    }
    CHECK(n == 10);
  }
  // the defaults arm runs no tuner, so it leaves no trial logs behind
  CHECK_FALSE(fs::exists(root / "defaults" / "seed1" / "fold0_trials.jsonl"));
  fs::remove_all(out);
}

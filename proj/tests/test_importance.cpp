#include <doctest.h>

#include <random>

#include "treetune/importance.hpp"

using namespace treetune;

namespace {

PartitionTree two_leaf_tree() {
  PartitionTree t;
  t.n_dims = 2;
  PartitionTree::Node root;
  root.is_leaf = false;
  root.dim = 0;
  root.threshold = 0.5;
  root.lo = {0.0, 0.0};
  root.hi = {1.0, 1.0};
  root.left = 1;
  root.right = 2;
  PartitionTree::Node left;
  left.mean = 0.2;
  left.count = 10;
  left.lo = {0.0, 0.0};
  left.hi = {0.5, 1.0};
  PartitionTree::Node right;
  right.mean = 0.8;
  right.count = 10;
  right.lo = {0.5, 0.0};
  right.hi = {1.0, 1.0};
  t.nodes = {root, left, right};
  return t;
}

ParamSpace grid_space(int k) {
  ParamSpace s;
  for (int i = 0; i < k; ++i) {
    ParamSpec p;
    p.name = "x" + std::to_string(i);
    p.kind = ParamSpec::Kind::real;
    p.lo = 0.0;
    p.hi = 1.0;
    p.default_value = 0.5;
    s.add(p);
  }
  return s;
}

std::vector<Trial> grid_trials(const ParamSpace& space,
                               double (*f)(double, double), int per_dim) {
  std::vector<Trial> trials;
  for (int i = 0; i < per_dim; ++i)
    for (int j = 0; j < per_dim; ++j) {
      Configuration c;
      c.values["x0"] = (i + 0.5) / per_dim;
      c.values["x1"] = (j + 0.5) / per_dim;
      Trial t;
      t.index = static_cast<int>(trials.size()) + 1;
      t.config = c;
      t.fitness = f(std::get<double>(c.at("x0")), std::get<double>(c.at("x1")));
      trials.push_back(std::move(t));
    }
  return trials;
}

}  // namespace

TEST_CASE("marginal prediction on a hand-built two-leaf tree") {
  PartitionTree t = two_leaf_tree();
  CHECK(marginal_prediction(t, {0}, {0.3}) == doctest::Approx(0.2));
  CHECK(marginal_prediction(t, {0}, {0.7}) == doctest::Approx(0.8));
  // integrating over everything gives the overall mean
  CHECK(marginal_prediction(t, {}, {}) == doctest::Approx(0.5));
  // full subset equals the plain prediction
  CHECK(marginal_prediction(t, {0, 1}, {0.2, 0.9}) == doctest::Approx(t.predict({0.2, 0.9})));
  // the unused dimension does not change the marginal
  CHECK(marginal_prediction(t, {1}, {0.25}) == doctest::Approx(0.5));
}

TEST_CASE("volume-averaged marginal equals the tree mean") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 200; ++i) {
    double a = unit(rng), b = unit(rng);
    xs.push_back({a, b});
    ys.push_back(0.3 * a + (b > 0.6 ? 0.4 : 0.0));
  }
  ForestParams params;
  params.n_trees = 1;
  params.bootstrap = false;
  params.min_leaf = 5;
  auto forest = fit_forest(xs, ys, params, 1);
  const PartitionTree& tree = forest[0];
  double mean = 0.0;
  double total = detail::tree_total_variance(tree, &mean);
  CHECK(total > 0.0);

  auto cuts = detail::cut_grid(tree);
  for (std::size_t dim : {std::size_t(0), std::size_t(1)}) {
    double avg = 0.0;
    const auto& c = cuts[dim];
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      double mid = 0.5 * (c[i] + c[i + 1]);
      avg += (c[i + 1] - c[i]) * marginal_prediction(tree, {dim}, {mid});
    }
    CHECK(avg == doctest::Approx(mean).epsilon(1e-9));
  }
}

TEST_CASE("constant fitness produces single-leaf trees and zero importances") {
  ParamSpace space = grid_space(2);
  std::vector<Trial> trials;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    Trial t;
    t.index = i + 1;
    t.config = space.sample(rng);
    t.fitness = 0.5;
    trials.push_back(std::move(t));
  }
  auto forest = fit_importance_forest(trials, space, 10, 1);
  for (const auto& tree : forest) CHECK(tree.nodes.size() == 1);
  auto report = variance_decomposition(forest, space);
  for (const auto& e : report.entries) {
    CHECK(e.fraction == doctest::Approx(0.0));
    CHECK(e.filtered);
  }
}

TEST_CASE("step function: trees split on the active parameter, importance > 0.95") {
  ParamSpace space = grid_space(2);
  auto trials = grid_trials(space, [](double a, double) { return a < 0.5 ? 0.2 : 0.8; }, 12);
  auto forest = fit_importance_forest(trials, space, 30, 3);
  for (const auto& tree : forest) {
    REQUIRE_FALSE(tree.nodes[tree.root].is_leaf);
    CHECK(tree.nodes[tree.root].dim == 0);
  }
  auto report = variance_decomposition(forest, space);
  double singleton0 = 0.0, pair01 = 0.0;
  for (const auto& e : report.entries) {
    if (e.subset == std::vector<std::size_t>{0}) singleton0 = e.fraction;
    if (e.subset == std::vector<std::size_t>{0, 1}) pair01 = e.fraction;
  }
  CHECK(singleton0 > 0.95);
  CHECK(pair01 < 0.01);
}

TEST_CASE("additive function: pairwise importance vanishes against the grid oracle") {
  ParamSpace space = grid_space(2);
  auto trials = grid_trials(
      space, [](double a, double b) { return (a < 0.5 ? 0.1 : 0.5) + (b < 0.5 ? 0.0 : 0.3); },
      14);
  auto forest = fit_importance_forest(trials, space, 30, 7);
  auto report = variance_decomposition(forest, space);
  double pair01 = 1.0;
  for (const auto& e : report.entries)
    if (e.subset == std::vector<std::size_t>{0, 1}) pair01 = e.fraction;
  CHECK(pair01 < 0.01);

  // brute-force grid ANOVA oracle: additive design has zero interaction
  // variance; singles absorb everything
  double sum_singles = 0.0;
  for (const auto& e : report.entries)
    if (e.subset.size() == 1) sum_singles += e.fraction;
  CHECK(sum_singles > 0.95);
}

TEST_CASE("subset variances conserve the total on an exhaustive decomposition") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 300; ++i) {
    double a = unit(rng), b = unit(rng);
    xs.push_back({a, b});
    ys.push_back((a < 0.4 ? 0.3 : 0.0) * (b < 0.7 ? 1.0 : 2.0) + 0.1 * (b > 0.2));
  }
  ForestParams params;
  params.n_trees = 1;
  params.bootstrap = false;
  params.min_leaf = 5;
  auto forest = fit_forest(xs, ys, params, 2);
  const PartitionTree& tree = forest[0];
  double mean = 0.0;
  double total = detail::tree_total_variance(tree, &mean);
  auto cuts = detail::cut_grid(tree);

  std::map<std::vector<std::size_t>, double> vu;
  for (const auto& u : detail::subsets_up_to(2, 2)) {
    double raw = detail::marginal_variance(tree, u, cuts, mean);
    double lower = 0.0;
    for (const auto& [w, v] : vu)
      if (w.size() < u.size() &&
          std::includes(u.begin(), u.end(), w.begin(), w.end()))
        lower += v;
    vu[u] = raw - lower;
  }
  double sum = 0.0;
  for (const auto& [_, v] : vu) sum += v;
  CHECK(sum == doctest::Approx(total).epsilon(1e-6));
}

TEST_CASE("importance report invariant under parameter relabeling") {
  ParamSpace space = grid_space(2);
  auto trials = grid_trials(space, [](double a, double b) { return 0.7 * a + 0.1 * b; }, 12);
  auto forest = fit_importance_forest(trials, space, 20, 13);
  auto report = variance_decomposition(forest, space);

  // swap the roles of x0 and x1 in the data: importances must swap too
  auto swapped = grid_trials(space, [](double a, double b) { return 0.7 * b + 0.1 * a; }, 12);
  auto forest2 = fit_importance_forest(swapped, space, 20, 13);
  auto report2 = variance_decomposition(forest2, space);

  auto frac = [](const MarginalReport& r, std::vector<std::size_t> u) {
    for (const auto& e : r.entries)
      if (e.subset == u) return e.fraction;
    return -1.0;
  };
  CHECK(frac(report, {0}) == doctest::Approx(frac(report2, {1})).epsilon(0.12));
  CHECK(frac(report, {1}) == doctest::Approx(frac(report2, {0})).epsilon(0.12));
  CHECK(frac(report, {0}) > frac(report, {1}));
  CHECK(frac(report2, {1}) > frac(report2, {0}));
}

TEST_CASE("forest fitting preconditions and determinism") {
  ParamSpace space = grid_space(2);
  std::vector<Trial> few(10);
  CHECK_THROWS_AS(fit_importance_forest(few, space, 10, 1), TunerError);

  auto trials = grid_trials(space, [](double a, double b) { return a * b; }, 8);
  auto f1 = fit_importance_forest(trials, space, 15, 9);
  auto f2 = fit_importance_forest(trials, space, 15, 9);
  REQUIRE(f1.size() == f2.size());
  for (std::size_t t = 0; t < f1.size(); ++t) {
    REQUIRE(f1[t].nodes.size() == f2[t].nodes.size());
    for (std::size_t n = 0; n < f1[t].nodes.size(); ++n) {
      CHECK(f1[t].nodes[n].dim == f2[t].nodes[n].dim);
      CHECK(f1[t].nodes[n].threshold == doctest::Approx(f2[t].nodes[n].threshold));
      CHECK(f1[t].nodes[n].mean == doctest::Approx(f2[t].nodes[n].mean));
    }
  }
}

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "treetune/dataset.hpp"
#include "treetune/openml.hpp"

using namespace treetune;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

Dataset random_dataset(std::mt19937_64& rng, int n_classes, int min_per_class) {
  Dataset ds;
  ds.name = "random";
  std::uniform_int_distribution<int> extra(0, 15);
  FeatureColumn x;
  x.name = "x";
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < n_classes; ++c) {
    ds.class_names.push_back("c" + std::to_string(c));
    int count = min_per_class + extra(rng);
    for (int i = 0; i < count; ++i) {
      ds.labels.push_back(c);
      x.num.push_back(unit(rng));
    }
  }
  ds.features.push_back(std::move(x));
  return ds;
}

}  // namespace

TEST_CASE("balanced accuracy exact values") {
  ConfusionMatrix perfect;
  perfect.counts = {{5, 0}, {0, 5}};
  CHECK(balanced_accuracy(perfect) == doctest::Approx(1.0).epsilon(1e-12));

  ConfusionMatrix mixed;
  mixed.counts = {{8, 2}, {4, 6}};
  CHECK(balanced_accuracy(mixed) == doctest::Approx(0.7).epsilon(1e-12));

  ConfusionMatrix three;
  three.counts = {{3, 0, 0}, {0, 3, 0}, {3, 0, 0}};
  CHECK(balanced_accuracy(three) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("balanced accuracy equals plain accuracy on class-balanced matrices") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> cell(0, 20);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t c = 2 + trial % 3;
    ConfusionMatrix cm = ConfusionMatrix::zeros(c);
    // equal row sums: pad the diagonal so every row sums to the same total
    long total = 60;
    for (std::size_t i = 0; i < c; ++i) {
      long off = 0;
      for (std::size_t j = 0; j < c; ++j) {
        if (i == j) continue;
        cm.counts[i][j] = cell(rng);
        off += cm.counts[i][j];
      }
      cm.counts[i][i] = total - off;
    }
    long diag = 0;
    for (std::size_t i = 0; i < c; ++i) diag += cm.counts[i][i];
    double accuracy = static_cast<double>(diag) / static_cast<double>(total * c);
    CHECK(balanced_accuracy(cm) == doctest::Approx(accuracy).epsilon(1e-12));
  }
}

TEST_CASE("balanced accuracy skips classes absent from the test split") {
  ConfusionMatrix cm;
  cm.counts = {{4, 0, 0}, {0, 0, 0}, {0, 2, 2}};
  CHECK(balanced_accuracy(cm) == doctest::Approx(0.75));
}

TEST_CASE("csv loading basics") {
  auto path = write_temp("treetune_basic.csv", "x,y,label\n1,2,a\n2,3,a\n3,4,b\n4,5,b\n");
  Dataset ds = load_csv(path.string(), "label");
  CHECK(ds.n_instances() == 4);
  CHECK(ds.n_classes() == 2);
  CHECK(ds.n_features() == 2);
  CHECK(ds.class_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.features[0].kind == FeatureColumn::Kind::numeric);
}

TEST_CASE("csv missing token marks cells missing") {
  auto path = write_temp("treetune_missing.csv", "x,label\n1,a\n?,a\n3,b\n4,b\n");
  Dataset ds = load_csv(path.string(), "label");
  CHECK(ds.has_missing());
  CHECK(ds.features[0].missing(1));
  CHECK_FALSE(ds.features[0].missing(0));
}

TEST_CASE("csv single-instance class loads but is not 10-stratifiable") {
  auto path = write_temp("treetune_tiny.csv", "x,label\n1,c\n");
  Dataset ds = load_csv(path.string(), "label");
  ds.check();
  CHECK_FALSE(ds.stratifiable(10));
}

TEST_CASE("csv label column by numeric index and error cases") {
  auto path = write_temp("treetune_idx.csv", "x,y\n1,a\n2,b\n");
  Dataset ds = load_csv(path.string(), "1");
  CHECK(ds.n_classes() == 2);
  CHECK_THROWS_AS(load_csv(path.string(), "nope"), DataError);
  CHECK_THROWS_AS(load_csv("/does/not/exist.csv", "label"), DataError);
}

TEST_CASE("csv save/load round trip preserves cells and labels") {
  auto path = write_temp("treetune_rt_in.csv",
                         "num,cat,label\n1.5,red,a\n?,blue,a\n2.25,?,b\n0,red,b\n");
  Dataset ds = load_csv(path.string(), "label");
  auto out = std::filesystem::temp_directory_path() / "treetune_rt_out.csv";
  save_csv(ds, out.string());
  // save_csv always emits the label under the canonical "class" header
  Dataset back = load_csv(out.string(), "class");
  REQUIRE(back.n_instances() == ds.n_instances());
  CHECK(back.labels == ds.labels);
  for (std::size_t f = 0; f < ds.n_features(); ++f) {
    CHECK(back.features[f].kind == ds.features[f].kind);
    for (std::size_t i = 0; i < ds.n_instances(); ++i) {
      CHECK(back.features[f].missing(i) == ds.features[f].missing(i));
      if (ds.features[f].missing(i)) continue;
      if (ds.features[f].kind == FeatureColumn::Kind::numeric)
        CHECK(back.features[f].num[i] == doctest::Approx(ds.features[f].num[i]));
    }
  }
}

TEST_CASE("arff loading") {
  auto path = write_temp("treetune_basic.arff",
                         "% comment\n"
                         "@relation toy\n"
                         "@attribute a numeric\n"
                         "@attribute b real\n"
                         "@attribute c integer\n"
                         "@attribute class {yes,no}\n"
                         "@data\n"
                         "1,2,3,yes\n"
                         "4,5,6,no\n"
                         "7,8,9,yes\n"
                         "1,1,1,no\n"
                         "2,2,2,yes\n"
                         "3,3,3,no\n");
  Dataset ds = load_arff(path.string());
  CHECK(ds.n_instances() == 6);
  CHECK(ds.n_features() == 3);
  CHECK(ds.n_classes() == 2);
  CHECK(ds.class_names == std::vector<std::string>{"yes", "no"});
}

TEST_CASE("arff sparse rows rejected") {
  auto path = write_temp("treetune_sparse.arff",
                         "@relation s\n@attribute a numeric\n"
                         "@attribute class {x,y}\n@data\n{0 1, 1 x}\n");
  CHECK_THROWS_WITH_AS(load_arff(path.string()),
                       doctest::Contains("sparse ARFF unsupported"), DataError);
}

TEST_CASE("stratified folds: exact divisibility and strict error") {
  std::mt19937_64 rng(1);
  Dataset ds = random_dataset(rng, 2, 10);
  ds.labels.assign(20, 0);
  for (int i = 10; i < 20; ++i) ds.labels[i] = 1;
  ds.features[0].num.resize(20, 0.5);
  FoldPlan plan = stratified_folds(ds, 10, 3);
  for (int f = 0; f < 10; ++f) {
    auto idx = plan.fold_indices(f);
    REQUIRE(idx.size() == 2);
    CHECK(ds.labels[idx[0]] + ds.labels[idx[1]] == 1);  // one of each class
  }

  Dataset bad = ds;
  bad.labels[0] = 1;  // class 0 down to 9 instances
  CHECK_THROWS_AS(stratified_folds(bad, 10, 3), DataError);
}

TEST_CASE("stratified folds: deviation at most one, deterministic") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    Dataset ds = random_dataset(rng, 2 + trial % 4, 10);
    for (int k : {3, 10}) {
      FoldPlan plan = stratified_folds(ds, k, trial);
      auto counts = ds.class_counts();
      for (int f = 0; f < k; ++f) {
        auto idx = plan.fold_indices(f);
        std::vector<int> per_class(ds.n_classes(), 0);
        for (int i : idx) per_class[ds.labels[i]]++;
        for (std::size_t c = 0; c < ds.n_classes(); ++c) {
          double share = static_cast<double>(counts[c]) / k;
          CHECK(std::abs(per_class[c] - share) <= 1.0);
        }
      }
      FoldPlan again = stratified_folds(ds, k, trial);
      CHECK(plan.assignment == again.assignment);
    }
  }
}

TEST_CASE("openml client: fetch, cache, and errors") {
  // serve a miniature dataset description + ARFF from a local endpoint
  httplib::Server server;
  std::atomic<int> arff_hits{0};
  std::string arff =
      "@relation mini\n@attribute a numeric\n@attribute class {p,q}\n@data\n"
      "1,p\n2,q\n3,p\n4,q\n";
  server.Get("/api/v1/json/data/61", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(
        R"({"data_set_description":{"id":"61","url":"http://HOST/download/61.arff"}})",
        "application/json");
  });
  server.Get("/download/61.arff", [&](const httplib::Request&, httplib::Response& res) {
    arff_hits++;
    res.set_content(arff, "text/plain");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  while (!server.is_running()) std::this_thread::yield();
  std::string base = "http://127.0.0.1:" + std::to_string(port);

  // the description's download url points back at this server
  server.Get("/api/v1/json/data/62", [&, base](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"data_set_description":{"id":"62","url":")" + base +
                        R"(/download/61.arff"}})",
                    "application/json");
  });

  auto cache = std::filesystem::temp_directory_path() / "treetune_openml_cache";
  std::filesystem::remove_all(cache);

  Dataset ds = fetch_openml(62, cache.string(), base);
  CHECK(ds.n_instances() == 4);
  CHECK(ds.n_classes() == 2);
  CHECK(ds.external_id == 62);
  CHECK(arff_hits == 1);

  Dataset again = fetch_openml(62, cache.string(), base);
  CHECK(arff_hits == 1);  // cache hit: no second download
  CHECK(again.labels == ds.labels);

  CHECK_THROWS_WITH_AS(fetch_openml(-1, cache.string(), base),
                       doctest::Contains("not found"), DataError);
  CHECK_THROWS_AS(fetch_openml(999, cache.string(), base), DataError);

  server.stop();
  worker.join();
}

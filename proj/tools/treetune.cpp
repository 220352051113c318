// Command-line frontend: tune / compare / importance / complexity / inspect.
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 runtime failure,
// 5 output already exists (use --force).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "treetune/complexity.hpp"
#include "treetune/harness.hpp"
#include "treetune/importance.hpp"
#include "treetune/openml.hpp"
#include "treetune/stats.hpp"

namespace {

using nlohmann::json;
using namespace treetune;

struct CliConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CliExistsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string cache_dir() {
  if (const char* env = std::getenv("TREETUNE_CACHE_DIR")) return env;
  if (const char* home = std::getenv("HOME"))
    return std::string(home) + "/.cache/treetune";
  return "/tmp/treetune-cache";
}

Dataset load_dataset(const std::string& source, const std::string& label) {
  if (source.rfind("openml:", 0) == 0) {
    long id = 0;
    try {
      id = std::stol(source.substr(7));
    } catch (const std::exception&) {
      throw CliConfigError("invalid dataset id in '" + source + "'");
    }
    return fetch_openml(id, cache_dir());
  }
  std::filesystem::path p(source);
  if (p.extension() == ".arff") return load_arff(source, label == "class" ? "" : label);
  return load_csv(source, label);
}

Learner parse_learner(const std::string& s) {
  if (s == "cart") return Learner::cart;
  if (s == "j48") return Learner::j48;
  if (s == "ctree") return Learner::ctree;
  throw CliConfigError("unknown learner '" + s + "' (expected cart, j48, ctree)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  auto range = s.find("..");
  try {
    if (range != std::string::npos) {
      std::uint64_t a = std::stoull(s.substr(0, range));
      std::uint64_t b = std::stoull(s.substr(range + 2));
      if (b < a) throw CliConfigError("seed range '" + s + "' is reversed");
      for (std::uint64_t v = a; v <= b; ++v) out.push_back(v);
    } else {
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
    }
  } catch (const CliConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw CliConfigError("cannot parse seeds '" + s + "'");
  }
  if (out.empty()) throw CliConfigError("no seeds given");
  return out;
}

int cmd_tune(const std::string& source, const std::string& learner_s,
             const std::string& technique_s, const std::string& label,
             int budget, int outer_k, int inner_k, const std::string& seeds_s,
             const std::string& out, bool force, bool json_mode) {
  ExperimentPlan plan;
  plan.learner = parse_learner(learner_s);
  if (technique_s == "defaults") {
    plan.include_defaults = true;
  } else {
    plan.include_defaults = false;
    try {
      plan.techniques = {technique_from_name(technique_s)};
    } catch (const std::exception&) {
      throw CliConfigError("unknown technique '" + technique_s + "'");
    }
  }
  plan.budget = budget;
  plan.outer_k = outer_k;
  plan.inner_k = inner_k;
  plan.seeds = parse_seeds(seeds_s);
  plan.out_dir = out;
  plan.experiment_id = technique_s;

  Dataset ds = load_dataset(source, label);
  ds.check();

  std::filesystem::path root =
      std::filesystem::path(out) / ds.name / learner_name(plan.learner);
  if (std::filesystem::exists(root / "plan.json") && !force)
    throw CliExistsError("output '" + (root / "plan.json").string() +
                         "' already exists; re-run with --force");

  try {
    plan.check();
  } catch (const HarnessError& e) {
    throw CliConfigError(e.what());
  }
  ExperimentReport report = run_experiment(ds, plan);

  if (json_mode) {
    for (const ReportRow& r : report.rows) {
      json j = {{"dataset", ds.name},
                {"learner", learner_name(plan.learner)},
                {"technique", r.technique},
                {"seed", r.seed},
                {"outer_fold", r.outer_fold},
                {"config", detail::config_to_json(r.best_config)},
                {"inner_fitness", r.inner_fitness},
                {"test_bac", r.test_bac},
                {"tree_size", r.tree_size},
                {"tuning_us", r.tuning_us},
                {"training_us", r.training_us},
                {"testing_us", r.testing_us}};
      std::cout << j.dump() << "\n";
    }
  } else {
    std::map<std::string, std::pair<double, int>> agg;
    for (const ReportRow& r : report.rows) {
      agg[r.technique].first += r.test_bac;
      agg[r.technique].second++;
    }
    std::cout << "dataset " << ds.name << ", learner " << learner_name(plan.learner)
              << ", " << report.rows.size() << " report rows\n";
    for (const auto& [arm, sum] : agg)
      std::cout << "  " << arm << ": mean test BAC "
                << sum.first / sum.second << " over " << sum.second << " folds\n";
    std::cout << "results written under " << root.string() << "\n";
  }
  return 0;
}

struct ReportRecord {
  std::string dataset, technique;
  std::uint64_t seed;
  int fold;
  double bac;
};

std::vector<ReportRecord> load_reports(const std::vector<std::string>& paths) {
  std::vector<ReportRecord> out;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      ReportRecord r;
      // dataset may be absent from older logs; fall back to the path layout
      if (j.contains("dataset")) {
        r.dataset = j["dataset"].get<std::string>();
      } else {
        auto p = std::filesystem::path(path).parent_path();  // seed<k>
        p = p.parent_path().parent_path();                   // <dataset>/<learner>
        r.dataset = p.parent_path().filename().string();
        if (r.dataset.empty()) r.dataset = "dataset";
      }
      r.technique = j.at("technique").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.fold = j.at("outer_fold").get<int>();
      r.bac = j.at("test_bac").get<double>();
      out.push_back(std::move(r));
    }
  }
  if (out.empty()) throw DataError("no report rows found");
  return out;
}

int cmd_compare(const std::vector<std::string>& paths, double alpha,
                bool json_mode) {
  auto records = load_reports(paths);
  std::set<std::string> datasets, techniques;
  std::map<std::string, std::map<std::string, std::map<std::pair<std::uint64_t, int>, double>>>
      table;  // dataset -> technique -> (seed,fold) -> bac
  for (const auto& r : records) {
    datasets.insert(r.dataset);
    techniques.insert(r.technique);
    table[r.dataset][r.technique][{r.seed, r.fold}] = r.bac;
  }
  json out = json::object();
  out["alpha"] = alpha;
  out["wilcoxon"] = json::array();

  for (const auto& dsname : datasets) {
    std::vector<std::string> arms;
    for (const auto& [arm, _] : table[dsname]) arms.push_back(arm);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (std::size_t b = a + 1; b < arms.size(); ++b) {
        const auto& ma = table[dsname][arms[a]];
        const auto& mb = table[dsname][arms[b]];
        std::vector<double> xa, xb;
        for (const auto& [key, v] : ma) {
          auto it = mb.find(key);
          if (it == mb.end()) continue;
          xa.push_back(v);
          xb.push_back(it->second);
        }
        if (xa.size() < 2) continue;
        auto w = wilcoxon_signed_rank(xa, xb, alpha);
        const char* verdict = w.verdict == Verdict::improve      ? "first_better"
                              : w.verdict == Verdict::degrade ? "second_better"
                                                              : "tie";
        out["wilcoxon"].push_back({{"dataset", dsname},
                                   {"first", arms[a]},
                                   {"second", arms[b]},
                                   {"p_value", w.p_value},
                                   {"statistic", w.statistic},
                                   {"n_pairs", w.n_used},
                                   {"verdict", verdict}});
      }
    }
  }

  // Friedman + Nemenyi over mean BAC per (technique, dataset), when every
  // technique covers every dataset
  std::vector<std::string> tech_list(techniques.begin(), techniques.end());
  bool complete = datasets.size() >= 2 && tech_list.size() >= 3;
  for (const auto& t : tech_list)
    for (const auto& d : datasets)
      if (!table[d].count(t)) complete = false;
  if (complete) {
    std::vector<std::vector<double>> scores(tech_list.size());
    for (std::size_t t = 0; t < tech_list.size(); ++t)
      for (const auto& d : datasets) {
        double sum = 0.0;
        const auto& cells = table[d][tech_list[t]];
        for (const auto& [_, v] : cells) sum += v;
        scores[t].push_back(sum / static_cast<double>(cells.size()));
      }
    auto fr = friedman_test(scores, alpha);
    double cd = nemenyi_cd(tech_list.size(), datasets.size(), alpha);
    auto groups = cd_groups(fr.mean_ranks, cd);
    json fj = {{"statistic", fr.statistic},
               {"p_value", fr.p_value},
               {"reject", fr.reject},
               {"critical_difference", cd},
               {"techniques", tech_list},
               {"mean_ranks", fr.mean_ranks}};
    fj["groups"] = json::array();
    for (const auto& g : groups) {
      json names = json::array();
      for (std::size_t i : g) names.push_back(tech_list[i]);
      fj["groups"].push_back(names);
    }
    out["friedman"] = fj;
  }

  if (json_mode) {
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& w : out["wilcoxon"])
      std::cout << w["dataset"].get<std::string>() << ": "
                << w["first"].get<std::string>() << " vs "
                << w["second"].get<std::string>() << "  p="
                << w["p_value"].get<double>() << "  "
                << w["verdict"].get<std::string>() << "\n";
    if (out.contains("friedman")) {
      const auto& f = out["friedman"];
      std::cout << "friedman chi2=" << f["statistic"].get<double>()
                << " p=" << f["p_value"].get<double>()
                << (f["reject"].get<bool>() ? " (reject)" : " (no difference)")
                << ", CD=" << f["critical_difference"].get<double>() << "\n";
      for (std::size_t t = 0; t < tech_list.size(); ++t)
        std::cout << "  " << tech_list[t] << ": mean rank "
                  << f["mean_ranks"][t].get<double>() << "\n";
    }
  }
  return 0;
}

int cmd_importance(const std::vector<std::string>& paths,
                   const std::string& learner_s, int features, int order,
                   double filter, int trees, bool json_mode) {
  Learner learner = parse_learner(learner_s);
  ParamSpace space = builtin_space(learner, features);
  std::vector<Trial> trials;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trial log '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      Trial t;
      t.index = static_cast<int>(trials.size()) + 1;
      t.config = detail::config_from_json(j.at("config"), space);
      t.fitness = j.at("fitness").get<double>();
      trials.push_back(std::move(t));
    }
  }
  auto forest = fit_importance_forest(trials, space, trees, 1);
  auto report = variance_decomposition(forest, space, order, filter);

  if (json_mode) {
    json out = json::array();
    for (const auto& e : report.entries)
      out.push_back({{"subset", e.names},
                     {"fraction", e.fraction},
                     {"filtered", e.filtered}});
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& e : report.entries) {
      if (e.filtered) continue;
      std::string name;
      for (const auto& n : e.names) name += (name.empty() ? "" : " x ") + n;
      std::cout << name << ": " << e.fraction << "\n";
    }
  }
  return 0;
}

int cmd_complexity(const std::string& source, const std::string& label,
                   const std::string& learner_s, bool json_mode) {
  Dataset ds = load_dataset(source, label);
  ds.check();
  ComplexityProfile p = complexity_profile(ds);
  std::vector<Learner> learners;
  if (learner_s.empty())
    learners = {Learner::j48, Learner::cart, Learner::ctree};
  else
    learners = {parse_learner(learner_s)};

  json out = {{"dataset", ds.name}, {"cls", p.cls},
              {"f1", p.f1},        {"f3", p.f3},
              {"f4", p.f4},        {"n1", p.n1},
              {"n2", p.n2},        {"n4", p.n4},
              {"l2", p.l2},        {"flags", p.flags}};
  out["advice"] = json::array();
  for (Learner l : learners) {
    Advice a = advise(p, l);
    out["advice"].push_back({{"learner", learner_name(l)},
                             {"verdict", a.tune ? "tune" : "defaults"},
                             {"fired", a.fired}});
  }
  if (json_mode) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "dataset " << ds.name << " (" << ds.n_instances()
              << " instances, " << ds.n_features() << " features, " << p.cls
              << " classes)\n"
              << "  f1=" << p.f1 << " f3=" << p.f3 << " f4=" << p.f4
              << " n1=" << p.n1 << " n2=" << p.n2 << " n4=" << p.n4
              << " l2=" << p.l2 << "\n";
    for (const auto& a : out["advice"]) {
      std::cout << "  " << a["learner"].get<std::string>() << ": "
                << a["verdict"].get<std::string>();
      for (const auto& r : a["fired"]) std::cout << "  [" << r.get<std::string>() << "]";
      std::cout << "\n";
    }
    for (const auto& f : p.flags) std::cout << "  note: " << f << "\n";
  }
  return 0;
}

int cmd_inspect(const std::string& source, const std::string& learner_s,
                const std::string& label) {
  Dataset ds = load_dataset(source, label);
  ds.check();
  Learner learner = parse_learner(learner_s);
  ParamSpace space = builtin_space(learner, static_cast<int>(ds.n_features()));
  TreeModel model = fit_learner(learner, ds, all_indices(ds), space.defaults(), 1);
  std::cout << to_text(model);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperparameter tuning for decision-tree learners"};
  app.require_subcommand(1);
  bool json_mode = false;
  app.add_flag("--json", json_mode, "machine-readable output");

  // tune
  std::string t_dataset, t_learner, t_technique, t_label = "class";
  std::string t_seeds = "1..5", t_out = "results";
  int t_budget = 900, t_outer = 10, t_inner = 3;
  bool t_force = false;
  auto* tune = app.add_subcommand("tune", "run a tuning experiment");
  tune->fallthrough();
  tune->add_option("dataset", t_dataset, "CSV/ARFF path or openml:<id>")->required();
  tune->add_option("learner", t_learner, "cart | j48 | ctree")->required();
  tune->add_option("technique", t_technique,
                   "defaults | rs | ga | pso | eda | smbo | irace")->required();
  tune->add_option("--label", t_label, "label column for CSV input");
  tune->add_option("--budget", t_budget, "fitness evaluations per fold");
  tune->add_option("--outer-k", t_outer, "outer folds");
  tune->add_option("--inner-k", t_inner, "inner folds");
  tune->add_option("--seeds", t_seeds, "a..b range or comma list");
  tune->add_option("--out", t_out, "output directory");
  tune->add_flag("--force", t_force, "overwrite existing outputs");

  // compare
  std::vector<std::string> c_paths;
  double c_alpha = 0.05;
  auto* compare = app.add_subcommand("compare", "statistical comparison of reports");
  compare->fallthrough();
  compare->add_option("reports", c_paths, "report.jsonl files")->required();
  compare->add_option("--alpha", c_alpha, "significance level");

  // importance
  std::vector<std::string> i_paths;
  std::string i_learner;
  int i_features = 10, i_order = 2, i_trees = 100;
  double i_filter = 0.005;
  auto* importance = app.add_subcommand("importance", "hyperparameter importance");
  importance->fallthrough();
  importance->add_option("trials", i_paths, "trial .jsonl logs")->required();
  importance->add_option("--learner", i_learner, "cart | j48 | ctree")->required();
  importance->add_option("--features", i_features, "dataset feature count");
  importance->add_option("--order", i_order, "max subset size");
  importance->add_option("--filter", i_filter, "importance threshold");
  importance->add_option("--trees", i_trees, "forest size");

  // complexity
  std::string x_dataset, x_label = "class", x_learner;
  auto* complexity = app.add_subcommand("complexity", "data-complexity profile");
  complexity->fallthrough();
  complexity->add_option("dataset", x_dataset, "CSV/ARFF path or openml:<id>")->required();
  complexity->add_option("--label", x_label, "label column for CSV input");
  complexity->add_option("--learner", x_learner, "restrict advice to one learner");

  // inspect
  std::string n_dataset, n_learner, n_label = "class";
  auto* inspect = app.add_subcommand("inspect", "print a default-config tree");
  inspect->fallthrough();
  inspect->add_option("dataset", n_dataset, "CSV/ARFF path or openml:<id>")->required();
  inspect->add_option("learner", n_learner, "cart | j48 | ctree")->required();
  inspect->add_option("--label", n_label, "label column for CSV input");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (tune->parsed())
      return cmd_tune(t_dataset, t_learner, t_technique, t_label, t_budget,
                      t_outer, t_inner, t_seeds, t_out, t_force, json_mode);
    if (compare->parsed()) return cmd_compare(c_paths, c_alpha, json_mode);
    if (importance->parsed())
      return cmd_importance(i_paths, i_learner, i_features, i_order, i_filter,
                            i_trees, json_mode);
    if (complexity->parsed())
      return cmd_complexity(x_dataset, x_label, x_learner, json_mode);
    if (inspect->parsed()) return cmd_inspect(n_dataset, n_learner, n_label);
  } catch (const CliExistsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const CliConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SpaceError& e) {
    std::cerr << "config error (space): " << e.what() << "\n";
    return 2;
  } catch (const TunerError& e) {
    std::cerr << "config error (tuner): " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}

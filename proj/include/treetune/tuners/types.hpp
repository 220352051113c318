#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "treetune/space.hpp"

namespace treetune {

struct TunerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Technique { rs, ga, pso, eda, smbo, irace };

inline std::string technique_name(Technique t) {
  switch (t) {
    case Technique::rs: return "rs";
    case Technique::ga: return "ga";
    case Technique::pso: return "pso";
    case Technique::eda: return "eda";
    case Technique::smbo: return "smbo";
    case Technique::irace: return "irace";
  }
  return "?";
}

inline Technique technique_from_name(const std::string& s) {
  if (s == "rs") return Technique::rs;
  if (s == "ga") return Technique::ga;
  if (s == "pso") return Technique::pso;
  if (s == "eda") return Technique::eda;
  if (s == "smbo") return Technique::smbo;
  if (s == "irace") return Technique::irace;
  throw TunerError("unknown technique '" + s + "'");
}

struct Trial {
  int index = 0;  // 1-based evaluation order
  Configuration config;
  double fitness = 0.0;
  std::int64_t wall_us = 0;
};

struct OptimizationPath {
  std::vector<Trial> trials;
  std::vector<double> cumulative_best;

  void record(Trial t) {
    double prev = cumulative_best.empty() ? -1e300 : cumulative_best.back();
    cumulative_best.push_back(std::max(prev, t.fitness));
    trials.push_back(std::move(t));
  }
};

using FitnessFn = std::function<double(const Configuration&)>;
// Per-instance fitness for racing; the instance id indexes the resampling pool.
using InstanceFitnessFn = std::function<double(const Configuration&, int)>;

struct TunerResult {
  Configuration best;
  double best_fitness = 0.0;
  OptimizationPath path;
};

}  // namespace treetune

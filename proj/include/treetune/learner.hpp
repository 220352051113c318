#pragma once

#include <numeric>
#include <vector>

#include "treetune/cart.hpp"
#include "treetune/ctree.hpp"
#include "treetune/j48.hpp"

namespace treetune {

inline TreeModel fit_learner(Learner learner, const Dataset& ds,
                             const std::vector<int>& indices,
                             const Configuration& config,
                             std::uint64_t seed = 0) {
  switch (learner) {
    case Learner::cart: return fit_cart(ds, indices, config);
    case Learner::j48: return fit_j48(ds, indices, config, seed);
    case Learner::ctree: return fit_ctree(ds, indices, config, seed);
  }
  throw ModelError("unknown learner tag");
}

inline std::vector<int> all_indices(const Dataset& ds) {
  std::vector<int> idx(ds.n_instances());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace treetune

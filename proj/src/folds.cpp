#include "steer/folds.hpp"

#include <algorithm>

#include "steer/error.hpp"
#include "steer/rng.hpp"

namespace steer {

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) rows.push_back(i);
  }
  return rows;
}

FoldPlan stratified_folds(const Dataset& ds, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > ds.n_rows) {
    throw Error(ErrorCode::invalid_request,
                "fold count must lie in [2, n]; got " + std::to_string(k));
  }
  FoldPlan plan;
  plan.requested_k = k;
  plan.seed = seed;

  const auto counts = ds.class_counts();
  std::size_t smallest = ds.n_rows;
  for (auto c : counts) {
    if (c > 0) smallest = std::min(smallest, c);
  }
  plan.k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), smallest));
  if (plan.k < 2) {
    throw Error(ErrorCode::invalid_request,
                "a class has fewer than 2 members; stratified folds impossible");
  }

  plan.assignment.assign(ds.n_rows, -1);
  Rng rng(seed);
  std::size_t dealt = 0;
  for (int c = 0; c < ds.n_classes(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.n_rows; ++i) {
      if (ds.labels[i] == c) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t m : members) {
      plan.assignment[m] = static_cast<int>(dealt % static_cast<std::size_t>(plan.k));
      ++dealt;
    }
  }
  return plan;
}

}  // namespace steer

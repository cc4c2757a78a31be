#pragma once

#include <cstdint>
#include <vector>

#include "steer/dataset.hpp"

namespace steer {

struct FoldPlan {
  int k = 0;
  int requested_k = 0;  // differs from k when a class was too small
  std::vector<int> assignment;  // fold index per row
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

/// Seeded shuffle within each class, then round-robin dealing into folds.
/// The deal continues across classes so overall fold sizes differ by <= 1.
/// k is clamped to [2, smallest class size].
FoldPlan stratified_folds(const Dataset& ds, int k, std::uint64_t seed);

}  // namespace steer

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steer/classifiers.hpp"
#include "steer/dataset.hpp"
#include "steer/folds.hpp"

namespace steer {

struct EvalResult {
  std::vector<double> fold_scores;
  double mean_score = 0.0;
  double elapsed_s = 0.0;
  bool ok = true;
  std::string error;
  int failed_fold = -1;
};

/// Trains on each fold's complement and scores F1 on the fold. Any failing
/// fold marks the whole result as an error; no partial means are reported.
EvalResult evaluate_folds(const Dataset& ds, const FoldPlan& plan, const ModelSpec& model,
                          std::uint64_t model_seed);

/// Stratified k-fold F1 with folds and models seeded from `seed`.
EvalResult cross_val_f1(const Dataset& ds, const ModelSpec& model, int k = 10,
                        std::uint64_t seed = 0);

}  // namespace steer

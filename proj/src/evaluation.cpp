#include "steer/evaluation.hpp"

#include <chrono>
#include <exception>
#include <numeric>

#include "steer/metrics.hpp"
#include "steer/rng.hpp"

namespace steer {

EvalResult evaluate_folds(const Dataset& ds, const FoldPlan& plan, const ModelSpec& model,
                          std::uint64_t model_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  EvalResult result;
  for (int fold = 0; fold < plan.k; ++fold) {
    try {
      const auto train_rows = plan.train_rows(fold);
      const auto test_rows = plan.test_rows(fold);
      const Dataset train = take_rows(ds, train_rows);
      const Dataset test = take_rows(ds, test_rows);
      const auto pred = train_predict(model, train, test, derive_seed(model_seed, fold));
      result.fold_scores.push_back(f1_score(test.labels, pred, ds.positive_class, ds.n_classes()));
    } catch (const std::exception& e) {
      result.ok = false;
      result.failed_fold = fold;
      result.error = "fold " + std::to_string(fold) + ": " + e.what();
      result.fold_scores.clear();
      break;
    }
  }
  if (result.ok && !result.fold_scores.empty()) {
    result.mean_score = std::accumulate(result.fold_scores.begin(), result.fold_scores.end(), 0.0) /
                        static_cast<double>(result.fold_scores.size());
  }
  result.elapsed_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

EvalResult cross_val_f1(const Dataset& ds, const ModelSpec& model, int k, std::uint64_t seed) {
  const FoldPlan plan = stratified_folds(ds, k, seed);
  return evaluate_folds(ds, plan, model, seed);
}

}  // namespace steer

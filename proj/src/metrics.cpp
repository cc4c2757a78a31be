#include "steer/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <set>

namespace steer {

double binary_f1(std::span<const int> truth, std::span<const int> pred, int positive) {
  assert(truth.size() == pred.size());
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == positive;
    const bool p = pred[i] == positive;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  if (tp == 0) return 0.0;
  // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN).
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double macro_f1(std::span<const int> truth, std::span<const int> pred) {
  std::set<int> labels(truth.begin(), truth.end());
  labels.insert(pred.begin(), pred.end());
  if (labels.empty()) return 0.0;
  double sum = 0.0;
  for (int c : labels) sum += binary_f1(truth, pred, c);
  return sum / static_cast<double>(labels.size());
}

double f1_score(std::span<const int> truth, std::span<const int> pred, int positive,
                int n_classes) {
  return n_classes <= 2 ? binary_f1(truth, pred, positive) : macro_f1(truth, pred);
}

}  // namespace steer

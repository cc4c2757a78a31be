#pragma once

#include <span>

namespace steer {

/// F1 of the positive class; 0 when there are no true positives.
double binary_f1(std::span<const int> truth, std::span<const int> pred, int positive);

/// Unweighted mean of per-class F1 over classes present in truth or pred.
double macro_f1(std::span<const int> truth, std::span<const int> pred);

/// Binary F1 for two-class problems, macro-F1 otherwise.
double f1_score(std::span<const int> truth, std::span<const int> pred, int positive,
                int n_classes);

}  // namespace steer

#include "steer/bandit.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>

#include "steer/error.hpp"

namespace steer {

double reward(const Arm& arm, int k) {
  assert(!arm.scores.empty());
  std::vector<double> sorted = arm.scores;
  const auto top = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(top), sorted.end(),
                    std::greater<>());
  // Neumaier summation: the mean does not depend on accumulation order.
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < top; ++i) {
    const double v = sorted[i];
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(top);
}

double ucb_score(const Arm& arm, long total, int k, double c) {
  const auto n = static_cast<double>(arm.scores.size());
  if (arm.scores.empty()) return kUntriedPriority;
  const double bonus = std::sqrt(2.0 * std::log(static_cast<double>(std::max(total, 1L))) / n);
  return reward(arm, k) + c * bonus;
}

const Arm* Bandit::find(const std::string& id) const {
  auto it = arms_.find(id);
  return it == arms_.end() ? nullptr : &it->second;
}

Arm& Bandit::arm(const std::string& id) {
  auto it = arms_.find(id);
  if (it == arms_.end()) {
    throw Error(ErrorCode::unknown_target, "unknown bandit arm '" + id + "'");
  }
  return it->second;
}

void Bandit::add_arm(const std::string& id, bool active) {
  if (arms_.count(id)) return;
  Arm a;
  a.hyperpartition_id = id;
  a.active = active;
  arms_.emplace(id, std::move(a));
}

std::string Bandit::select() const {
  const Arm* best = nullptr;
  double best_score = 0.0;
  // arms_ iterates in lexicographic id order, so strict comparisons keep the
  // smallest id among exact ties.
  for (const auto& [id, a] : arms_) {
    if (!a.active) continue;
    const double s = ucb_score(a, total_, settings_.k, settings_.c);
    if (best == nullptr || s > best_score ||
        (s == best_score && a.scores.size() < best->scores.size())) {
      best = &a;
      best_score = s;
    }
  }
  if (best == nullptr) throw Error(ErrorCode::no_active_arm, "no active arm to select");
  return best->hyperpartition_id;
}

void Bandit::record(const std::string& id, double score) {
  Arm& a = arm(id);
  a.scores.push_back(score);
  a.consecutive_failures = 0;
  ++total_;
}

bool Bandit::record_failure(const std::string& id) {
  Arm& a = arm(id);
  ++a.failures;
  ++a.consecutive_failures;
  if (a.active && a.consecutive_failures >= settings_.max_consecutive_failures) {
    a.active = false;
    a.auto_disabled = true;
    return true;
  }
  return false;
}

void Bandit::set_active(const std::string& id, bool active) {
  Arm& a = arm(id);
  a.active = active && !a.auto_disabled;
}

void Bandit::clear_auto_disable(const std::string& id) {
  Arm& a = arm(id);
  a.auto_disabled = false;
  a.consecutive_failures = 0;
}

}  // namespace steer

#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace steer {

/// One hyperpartition competing for search budget.
struct Arm {
  std::string hyperpartition_id;
  std::vector<double> scores;  // chronological, append-only
  bool active = true;
  int failures = 0;
  int consecutive_failures = 0;
  bool auto_disabled = false;
  bool operator==(const Arm&) const = default;
};

struct BanditSettings {
  int k = 5;
  double c = 1.0;
  int max_consecutive_failures = 3;
  bool operator==(const BanditSettings&) const = default;
};

inline constexpr double kUntriedPriority = std::numeric_limits<double>::infinity();

/// Mean of the top min(k, n) scores. Requires at least one score.
double reward(const Arm& arm, int k);

/// reward + c * sqrt(2 ln(total) / n); +infinity for an untried arm.
double ucb_score(const Arm& arm, long total, int k, double c);

class Bandit {
 public:
  Bandit() = default;
  explicit Bandit(BanditSettings settings) : settings_(settings) {}

  const BanditSettings& settings() const { return settings_; }
  const std::map<std::string, Arm>& arms() const { return arms_; }
  const Arm* find(const std::string& id) const;
  long total() const { return total_; }

  /// No-op when the arm already exists.
  void add_arm(const std::string& id, bool active = true);

  /// Max UCB among active arms; ties by fewer trials then lexicographic id.
  /// Throws Error(no_active_arm).
  std::string select() const;

  void record(const std::string& id, double score);
  /// Returns true when this failure auto-deactivated the arm.
  bool record_failure(const std::string& id);
  void set_active(const std::string& id, bool active);
  /// Clears an auto-deactivation so the arm can be re-enabled.
  void clear_auto_disable(const std::string& id);

  bool operator==(const Bandit&) const = default;

 private:
  Arm& arm(const std::string& id);

  BanditSettings settings_;
  std::map<std::string, Arm> arms_;
  long total_ = 0;
};

}  // namespace steer

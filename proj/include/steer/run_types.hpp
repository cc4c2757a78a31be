#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/bandit.hpp"
#include "steer/search_space.hpp"
#include "steer/tuner.hpp"

namespace steer {

enum class RunStatus { created, running, paused, finished, failed };

std::string_view to_string(RunStatus status);
RunStatus run_status_from(std::string_view name);

struct BudgetIncrement {
  std::optional<long> trials;
  std::optional<double> wall_clock_s;
  bool operator==(const BudgetIncrement&) const = default;
};

/// Trial-count and/or wall-clock limits with monotone consumption.
struct Budget {
  std::optional<long> max_trials;
  std::optional<double> max_wall_clock_s;
  long consumed_trials = 0;
  double consumed_wall_clock_s = 0.0;

  bool has_limit() const { return max_trials.has_value() || max_wall_clock_s.has_value(); }
  bool exhausted() const;
  /// Raises limits; an absent limit is created relative to current consumption.
  void extend(const BudgetIncrement& inc);
  bool operator==(const Budget&) const = default;
};

struct RunSettings {
  BanditSettings bandit;
  TunerSettings tuner;
  int cv_folds = 10;
  bool operator==(const RunSettings&) const = default;
};

/// Parses `f1_cv<k>`; throws Error(unknown_metric).
int folds_for_metric(const std::string& metric);

struct Trial {
  long trial_id = 0;
  std::string run_id;
  std::string algorithm;
  std::string hyperpartition_id;
  Config config;
  double score = 0.0;
  std::vector<double> fold_scores;
  bool ok = true;
  std::string error;
  double elapsed_s = 0.0;
  std::string created_at;
  int space_version = 0;
  bool used_gp = false;
  bool operator==(const Trial&) const = default;
};

enum class CommandKind { start, pause, resume, stop, reconfigure };

std::string_view to_string(CommandKind kind);

struct ControlCommand {
  CommandKind kind = CommandKind::start;
  std::vector<SpaceDelta> deltas;
  std::optional<BudgetIncrement> extend_budget;
};

std::string now_iso8601();

nlohmann::json to_json(const Budget& budget);
Budget budget_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BudgetIncrement& inc);
BudgetIncrement budget_increment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunSettings& settings);
RunSettings run_settings_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Trial& trial);
Trial trial_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ControlCommand& cmd);
ControlCommand command_from_json(const nlohmann::json& j);

}  // namespace steer

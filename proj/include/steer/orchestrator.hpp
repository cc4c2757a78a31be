#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/bandit.hpp"
#include "steer/dataset.hpp"
#include "steer/folds.hpp"
#include "steer/run_types.hpp"
#include "steer/search_space.hpp"
#include "steer/trial_log.hpp"
#include "steer/tuner.hpp"

namespace steer {

/// Lifecycle record of one search.
struct RunInfo {
  std::string id;
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::string metric = "f1_cv10";
  RunSettings settings;
  Budget budget;
  RunStatus status = RunStatus::created;
  std::string created_at;
  std::string updated_at;
  SearchSpace space;
  int space_version = 0;
  bool operator==(const RunInfo&) const = default;
};

struct RunEvent {
  long trial_id = 0;
  std::string kind;
  std::string hyperpartition_id;
  bool operator==(const RunEvent&) const = default;
};

struct CreateRunParams {
  std::string run_id;
  SearchSpace space = default_space();
  Budget budget;
  std::uint64_t seed = 0;
  std::string metric = "f1_cv10";
  RunSettings settings;
};

/// Receives each log record as it is produced.
using RecordSink = std::function<void(const nlohmann::json&)>;

/// Single-owner run state machine: select -> propose -> evaluate -> record.
/// Not thread-safe; the caller serializes access and applies commands only
/// between steps.
class RunEngine {
 public:
  /// Validates space and budget; throws Error with the validation report.
  static RunEngine create(CreateRunParams params, std::shared_ptr<const Dataset> dataset,
                          RecordSink sink = {});

  /// Rebuilds state from log records. The dataset may be attached later.
  static RunEngine replay(const std::vector<nlohmann::json>& records,
                          std::shared_ptr<const Dataset> dataset = nullptr, RecordSink sink = {});

  const RunInfo& info() const { return info_; }
  const std::vector<Trial>& trials() const { return trials_; }
  const Bandit& bandit() const { return bandit_; }
  const std::map<std::string, TunerState>& tuners() const { return tuners_; }
  const std::vector<RunEvent>& events() const { return events_; }
  long next_seq() const { return next_seq_; }
  long latest_trial_id() const { return static_cast<long>(trials_.size()); }

  void set_sink(RecordSink sink) { sink_ = std::move(sink); }
  void attach_dataset(std::shared_ptr<const Dataset> dataset) { dataset_ = std::move(dataset); }
  bool has_dataset() const { return dataset_ != nullptr; }

  bool can_step() const { return info_.status == RunStatus::running && !info_.budget.exhausted(); }

  /// One full trial. Requires status running and remaining budget.
  const Trial& step();

  /// Applies a command atomically; throws Error(invalid_transition) or a
  /// validation code, leaving state unchanged.
  void handle_command(const ControlCommand& cmd);

  /// A run left in `running` by a crashed process becomes `paused`.
  bool recover_interrupted();

  /// Marks the run failed (e.g. the evaluator became unusable).
  void fail(const std::string& reason);

  /// Full comparable state; used by replay-equivalence checks.
  bool same_state(const RunEngine& other) const;

 private:
  RunEngine() = default;

  nlohmann::json make_record(const char* kind, const std::string& ts);
  void emit(const nlohmann::json& record);
  void transition(RunStatus to, const std::string& reason, const std::string& ts);
  void apply_trial(const Trial& trial);
  void apply_command_effects(const ControlCommand& cmd, const SearchSpace& next);
  void sync_arms();
  const FoldPlan& fold_plan();

  RunInfo info_;
  std::vector<Trial> trials_;
  Bandit bandit_;
  std::map<std::string, TunerState> tuners_;
  std::vector<RunEvent> events_;
  std::shared_ptr<const Dataset> dataset_;
  std::optional<FoldPlan> folds_;
  RecordSink sink_;
  long next_seq_ = 1;
};

nlohmann::json to_json(const RunInfo& info);

}  // namespace steer

#include "steer/orchestrator.hpp"

#include <chrono>
#include <iostream>

#include "steer/error.hpp"
#include "steer/evaluation.hpp"
#include "steer/rng.hpp"

namespace steer {

using nlohmann::json;

namespace {

json report_json(const ValidationReport& report) {
  json v = json::array();
  for (const auto& x : report.violations) {
    v.push_back({{"code", x.code}, {"message", x.message}, {"target", x.target}});
  }
  return {{"violations", v}};
}

ErrorCode code_for(const std::string& violation) {
  if (violation == "unknown_target") return ErrorCode::unknown_target;
  if (violation == "empty_range") return ErrorCode::empty_range;
  if (violation == "range_out_of_bounds") return ErrorCode::range_out_of_bounds;
  if (violation == "no_enabled_hyperpartition") return ErrorCode::no_enabled_hyperpartition;
  return ErrorCode::invalid_spec;
}

[[noreturn]] void reject_space(const ValidationReport& report) {
  const auto& first = report.violations.front();
  throw Error(code_for(first.code), "invalid search space: " + first.message +
                                        (first.target.empty() ? "" : " (" + first.target + ")"),
              report_json(report));
}

void check_budget(const Budget& b) {
  if (!b.has_limit()) throw Error(ErrorCode::invalid_budget, "budget needs max_trials or max_wall_clock_s");
  if (b.max_trials && *b.max_trials < 1) throw Error(ErrorCode::invalid_budget, "max_trials must be >= 1");
  if (b.max_wall_clock_s && !(*b.max_wall_clock_s > 0)) {
    throw Error(ErrorCode::invalid_budget, "max_wall_clock_s must be > 0");
  }
}

json budget_limits(const Budget& b) {
  Budget limits;
  limits.max_trials = b.max_trials;
  limits.max_wall_clock_s = b.max_wall_clock_s;
  return to_json(limits);
}

}  // namespace

json to_json(const RunInfo& info) {
  return {{"id", info.id},
          {"dataset_id", info.dataset_id},
          {"seed", info.seed},
          {"metric", info.metric},
          {"settings", to_json(info.settings)},
          {"budget", to_json(info.budget)},
          {"status", to_string(info.status)},
          {"created_at", info.created_at},
          {"updated_at", info.updated_at},
          {"space_version", info.space_version}};
}

RunEngine RunEngine::create(CreateRunParams params, std::shared_ptr<const Dataset> dataset,
                            RecordSink sink) {
  if (!dataset) throw Error(ErrorCode::unknown_dataset, "run needs a dataset");
  check_budget(params.budget);
  params.budget.consumed_trials = 0;
  params.budget.consumed_wall_clock_s = 0.0;
  params.settings.cv_folds = folds_for_metric(params.metric);
  if (auto report = validate_space(params.space); !report.ok()) reject_space(report);

  RunEngine engine;
  engine.sink_ = std::move(sink);
  engine.dataset_ = std::move(dataset);
  auto& info = engine.info_;
  info.id = std::move(params.run_id);
  info.dataset_id = engine.dataset_->id;
  info.seed = params.seed;
  info.metric = params.metric;
  info.settings = params.settings;
  info.budget = params.budget;
  info.space = std::move(params.space);
  engine.bandit_ = Bandit(info.settings.bandit);
  engine.sync_arms();

  const std::string ts = now_iso8601();
  info.created_at = ts;
  json record = engine.make_record("run_created", ts);
  record["run"] = {{"id", info.id},
                   {"dataset_id", info.dataset_id},
                   {"seed", info.seed},
                   {"metric", info.metric},
                   {"settings", to_json(info.settings)},
                   {"budget", budget_limits(info.budget)},
                   {"space", to_json(info.space)}};
  engine.emit(record);
  return engine;
}

json RunEngine::make_record(const char* kind, const std::string& ts) {
  return {{"seq", next_seq_++}, {"kind", kind}, {"ts", ts}};
}

void RunEngine::emit(const json& record) {
  info_.updated_at = record.at("ts").get<std::string>();
  if (sink_) sink_(record);
}

void RunEngine::transition(RunStatus to, const std::string& reason, const std::string& ts) {
  json record = make_record("status_change", ts);
  record["from"] = to_string(info_.status);
  record["to"] = to_string(to);
  record["reason"] = reason;
  info_.status = to;
  emit(record);
}

void RunEngine::sync_arms() {
  for (const auto& hp : info_.space.hyperpartitions()) {
    const bool enabled = info_.space.effectively_enabled(hp.id);
    if (!bandit_.find(hp.id)) {
      if (enabled) bandit_.add_arm(hp.id, true);
      continue;
    }
    bandit_.set_active(hp.id, enabled);
  }
}

void RunEngine::apply_command_effects(const ControlCommand& cmd, const SearchSpace& next) {
  if (!cmd.deltas.empty()) {
    info_.space = next;
    ++info_.space_version;
    // Explicit enables lift automatic failure deactivation.
    for (const auto& d : cmd.deltas) {
      std::vector<std::string> ids;
      if (d.kind == DeltaKind::enable_hyperpartition) ids.push_back(d.target);
      if (d.kind == DeltaKind::enable_algorithm) {
        for (const auto* hp : info_.space.hyperpartitions_of(d.target)) ids.push_back(hp->id);
      }
      for (const auto& id : ids) {
        if (bandit_.find(id)) bandit_.clear_auto_disable(id);
      }
    }
    sync_arms();
  }
  if (cmd.extend_budget) info_.budget.extend(*cmd.extend_budget);
}

void RunEngine::handle_command(const ControlCommand& cmd) {
  const RunStatus from = info_.status;
  auto illegal = [&] {
    return Error(ErrorCode::invalid_transition,
                 std::string("cannot ") + std::string(to_string(cmd.kind)) + " a run that is " +
                     std::string(to_string(from)),
                 json{{"status", to_string(from)}, {"command", to_string(cmd.kind)}});
  };

  std::optional<RunStatus> to;
  switch (cmd.kind) {
    case CommandKind::start:
      if (from != RunStatus::created) throw illegal();
      to = RunStatus::running;
      break;
    case CommandKind::pause:
      if (from != RunStatus::running) throw illegal();
      to = RunStatus::paused;
      break;
    case CommandKind::resume:
      if (from != RunStatus::paused) throw illegal();
      to = RunStatus::running;
      break;
    case CommandKind::stop:
      if (from != RunStatus::created && from != RunStatus::running && from != RunStatus::paused) {
        throw illegal();
      }
      to = RunStatus::finished;
      break;
    case CommandKind::reconfigure:
      if (from != RunStatus::created && from != RunStatus::running && from != RunStatus::paused) {
        throw illegal();
      }
      if (cmd.deltas.empty()) {
        throw Error(ErrorCode::invalid_request, "reconfigure needs at least one delta");
      }
      break;
  }
  if (from == RunStatus::finished || from == RunStatus::failed) throw illegal();

  // Everything that can fail happens before any state changes.
  SearchSpace next = info_.space;
  if (!cmd.deltas.empty()) {
    next = apply_deltas(info_.space, cmd.deltas);
    if (auto report = validate_space(next); !report.ok()) reject_space(report);
  }
  if (cmd.extend_budget) {
    if (cmd.extend_budget->trials && *cmd.extend_budget->trials < 0) {
      throw Error(ErrorCode::invalid_budget, "budget increments must be non-negative");
    }
  }
  if (to == RunStatus::running) {
    RunEngine preview;
    preview.info_.space = next;
    preview.bandit_ = bandit_;
    preview.apply_command_effects(cmd, next);
    bool any_active = false;
    for (const auto& [id, arm] : preview.bandit_.arms()) any_active = any_active || arm.active;
    if (!any_active) {
      throw Error(ErrorCode::no_active_arm,
                  "every enabled hyperpartition is deactivated; re-enable one first");
    }
  }

  const std::string ts = now_iso8601();
  apply_command_effects(cmd, next);
  json record = make_record("command", ts);
  record["command"] = to_json(cmd);
  record["space_version"] = info_.space_version;
  emit(record);

  if (to && *to != from) {
    transition(*to, "command", ts);
    if (*to == RunStatus::running && info_.budget.exhausted()) {
      transition(RunStatus::finished, "budget_exhausted", ts);
    }
  }
}

const FoldPlan& RunEngine::fold_plan() {
  if (!folds_) folds_ = stratified_folds(*dataset_, info_.settings.cv_folds, info_.seed);
  return *folds_;
}

const Trial& RunEngine::step() {
  if (!can_step()) {
    throw Error(ErrorCode::invalid_transition,
                std::string("run is ") + std::string(to_string(info_.status)) +
                    (info_.budget.exhausted() ? " with exhausted budget" : ""));
  }
  if (!dataset_) throw Error(ErrorCode::unknown_dataset, "dataset " + info_.dataset_id + " not attached");

  const auto t0 = std::chrono::steady_clock::now();
  Trial trial;
  trial.trial_id = latest_trial_id() + 1;
  trial.run_id = info_.id;
  trial.space_version = info_.space_version;
  const std::uint64_t seed = derive_seed(info_.seed, static_cast<std::uint64_t>(trial.trial_id));

  std::string arm_id;
  try {
    arm_id = bandit_.select();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::no_active_arm) throw;
    transition(RunStatus::paused, "no_active_arm", now_iso8601());
    throw;
  }
  const Hyperpartition* hp = info_.space.find_hyperpartition(arm_id);
  auto& tuner = tuners_[arm_id];
  tuner.hyperpartition_id = arm_id;
  const Proposal proposal = propose(tuner, *hp, info_.space, seed, info_.settings.tuner);

  trial.algorithm = hp->algorithm;
  trial.hyperpartition_id = hp->id;
  trial.config = proposal.config;
  trial.used_gp = proposal.used_gp;

  const EvalResult eval =
      evaluate_folds(*dataset_, fold_plan(), {hp->algorithm, hp->assignment, trial.config}, seed);
  trial.ok = eval.ok;
  if (eval.ok) {
    trial.score = eval.mean_score;
    trial.fold_scores = eval.fold_scores;
  } else {
    trial.error = eval.error;
  }
  trial.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string ts = now_iso8601();
  trial.created_at = ts;
  json record = make_record("trial", ts);
  record["trial"] = to_json(trial);
  apply_trial(trial);
  emit(record);
  if (!trial.ok && !events_.empty() && events_.back().trial_id == trial.trial_id) {
    std::cerr << "warning: hyperpartition " << trial.hyperpartition_id
              << " deactivated after repeated evaluation failures\n";
  }

  if (info_.budget.exhausted()) transition(RunStatus::finished, "budget_exhausted", ts);
  return trials_.back();
}

void RunEngine::apply_trial(const Trial& trial) {
  trials_.push_back(trial);
  info_.budget.consumed_trials += 1;
  info_.budget.consumed_wall_clock_s += trial.elapsed_s;
  if (trial.ok) {
    bandit_.record(trial.hyperpartition_id, trial.score);
    const Hyperpartition* hp = info_.space.find_hyperpartition(trial.hyperpartition_id);
    auto& tuner = tuners_[trial.hyperpartition_id];
    tuner.hyperpartition_id = trial.hyperpartition_id;
    record_observation(tuner, *hp, trial.config, trial.score);
  } else if (bandit_.record_failure(trial.hyperpartition_id)) {
    events_.push_back({trial.trial_id, "arm_auto_disabled", trial.hyperpartition_id});
  }
}

bool RunEngine::recover_interrupted() {
  if (info_.status != RunStatus::running) return false;
  transition(RunStatus::paused, "recovered", now_iso8601());
  return true;
}

void RunEngine::fail(const std::string& reason) {
  if (info_.status == RunStatus::failed) return;
  transition(RunStatus::failed, reason, now_iso8601());
}

RunEngine RunEngine::replay(const std::vector<json>& records, std::shared_ptr<const Dataset> dataset,
                            RecordSink sink) {
  RunEngine engine;
  engine.dataset_ = std::move(dataset);
  bool created = false;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& r = records[i];
    const auto kind = r.at("kind").get<std::string>();
    const std::string ts = r.value("ts", std::string());
    auto corrupt = [&](const std::string& what) {
      return Error(ErrorCode::corrupt_log, "record " + std::to_string(i + 1) + ": " + what,
                   json{{"line", i + 1}});
    };
    try {
      if (kind == "run_created") {
        if (created) throw corrupt("duplicate run_created");
        const json& run = r.at("run");
        auto& info = engine.info_;
        info.id = run.at("id").get<std::string>();
        info.dataset_id = run.at("dataset_id").get<std::string>();
        info.seed = run.at("seed").get<std::uint64_t>();
        info.metric = run.at("metric").get<std::string>();
        info.settings = run_settings_from_json(run.at("settings"));
        info.budget = budget_from_json(run.at("budget"));
        info.space = space_from_json(run.at("space"));
        info.created_at = ts;
        engine.bandit_ = Bandit(info.settings.bandit);
        engine.sync_arms();
        created = true;
      } else if (!created) {
        throw corrupt("record before run_created");
      } else if (kind == "command") {
        const ControlCommand cmd = command_from_json(r.at("command"));
        const SearchSpace next =
            cmd.deltas.empty() ? engine.info_.space : apply_deltas(engine.info_.space, cmd.deltas);
        engine.apply_command_effects(cmd, next);
        if (r.contains("space_version") &&
            r.at("space_version").get<int>() != engine.info_.space_version) {
          throw corrupt("space version mismatch");
        }
      } else if (kind == "status_change") {
        engine.info_.status = run_status_from(r.at("to").get<std::string>());
      } else if (kind == "trial") {
        Trial t = trial_from_json(r.at("trial"));
        if (t.trial_id != engine.latest_trial_id() + 1) throw corrupt("trial ids not contiguous");
        if (!engine.info_.space.find_hyperpartition(t.hyperpartition_id)) {
          throw corrupt("trial references unknown hyperpartition");
        }
        t.created_at = ts;
        engine.apply_trial(t);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::corrupt_log) throw;
      throw Error(ErrorCode::corrupt_log,
                  "record " + std::to_string(i + 1) + ": " + std::string(e.what()),
                  json{{"line", i + 1}});
    } catch (const json::exception& e) {
      throw corrupt(e.what());
    }
    engine.info_.updated_at = ts;
    engine.next_seq_ = r.at("seq").get<long>() + 1;
  }
  engine.sink_ = std::move(sink);
  return engine;
}

bool RunEngine::same_state(const RunEngine& other) const {
  return info_ == other.info_ && trials_ == other.trials_ && bandit_ == other.bandit_ &&
         tuners_ == other.tuners_ && events_ == other.events_ && next_seq_ == other.next_seq_;
}

}  // namespace steer

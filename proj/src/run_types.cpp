#include "steer/run_types.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "steer/error.hpp"

namespace steer {

using nlohmann::json;

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::created: return "created";
    case RunStatus::running: return "running";
    case RunStatus::paused: return "paused";
    case RunStatus::finished: return "finished";
    case RunStatus::failed: return "failed";
  }
  return "";
}

RunStatus run_status_from(std::string_view name) {
  for (auto s : {RunStatus::created, RunStatus::running, RunStatus::paused, RunStatus::finished,
                 RunStatus::failed}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::invalid_request, "unknown run status '" + std::string(name) + "'");
}

bool Budget::exhausted() const {
  if (max_trials && consumed_trials >= *max_trials) return true;
  if (max_wall_clock_s && consumed_wall_clock_s >= *max_wall_clock_s) return true;
  return false;
}

void Budget::extend(const BudgetIncrement& inc) {
  if (inc.trials) {
    max_trials = (max_trials ? *max_trials : consumed_trials) + *inc.trials;
  }
  if (inc.wall_clock_s) {
    max_wall_clock_s =
        (max_wall_clock_s ? *max_wall_clock_s : consumed_wall_clock_s) + *inc.wall_clock_s;
  }
}

int folds_for_metric(const std::string& metric) {
  const std::string prefix = "f1_cv";
  if (metric.rfind(prefix, 0) == 0 && metric.size() > prefix.size() && metric.size() <= 8) {
    const auto digits = metric.substr(prefix.size());
    if (digits.find_first_not_of("0123456789") == std::string::npos) {
      const int k = std::stoi(digits);
      if (k >= 2) return k;
    }
  }
  throw Error(ErrorCode::unknown_metric, "unsupported metric '" + metric + "' (expected f1_cv<k>)");
}

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::start: return "start";
    case CommandKind::pause: return "pause";
    case CommandKind::resume: return "resume";
    case CommandKind::stop: return "stop";
    case CommandKind::reconfigure: return "reconfigure";
  }
  return "";
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

namespace {

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::invalid_request, std::string("bad type for field '") + key + "'");
  }
}

template <typename T>
T field(const json& j, const char* key) {
  auto v = optional_field<T>(j, key);
  if (!v) throw Error(ErrorCode::invalid_request, std::string("missing field '") + key + "'");
  return *v;
}

}  // namespace

json to_json(const Budget& b) {
  json j = {{"consumed_trials", b.consumed_trials},
            {"consumed_wall_clock_s", b.consumed_wall_clock_s},
            {"max_trials", nullptr},
            {"max_wall_clock_s", nullptr}};
  if (b.max_trials) j["max_trials"] = *b.max_trials;
  if (b.max_wall_clock_s) j["max_wall_clock_s"] = *b.max_wall_clock_s;
  return j;
}

Budget budget_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_budget, "budget must be an object");
  Budget b;
  b.max_trials = optional_field<long>(j, "max_trials");
  b.max_wall_clock_s = optional_field<double>(j, "max_wall_clock_s");
  b.consumed_trials = optional_field<long>(j, "consumed_trials").value_or(0);
  b.consumed_wall_clock_s = optional_field<double>(j, "consumed_wall_clock_s").value_or(0.0);
  return b;
}

json to_json(const BudgetIncrement& inc) {
  json j = json::object();
  if (inc.trials) j["trials"] = *inc.trials;
  if (inc.wall_clock_s) j["wall_clock_s"] = *inc.wall_clock_s;
  return j;
}

BudgetIncrement budget_increment_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_budget, "extend_budget must be an object");
  BudgetIncrement inc;
  inc.trials = optional_field<long>(j, "trials");
  inc.wall_clock_s = optional_field<double>(j, "wall_clock_s");
  if (!inc.trials && !inc.wall_clock_s) {
    throw Error(ErrorCode::invalid_budget, "extend_budget needs trials or wall_clock_s");
  }
  if ((inc.trials && *inc.trials < 0) || (inc.wall_clock_s && *inc.wall_clock_s < 0)) {
    throw Error(ErrorCode::invalid_budget, "budget increments must be non-negative");
  }
  return inc;
}

json to_json(const RunSettings& s) {
  return {{"bandit_k", s.bandit.k},
          {"bandit_c", s.bandit.c},
          {"max_consecutive_failures", s.bandit.max_consecutive_failures},
          {"r_min", s.tuner.r_min},
          {"n_candidates", s.tuner.n_candidates},
          {"xi", s.tuner.xi},
          {"cv_folds", s.cv_folds}};
}

RunSettings run_settings_from_json(const json& j) {
  RunSettings s;
  if (j.is_null()) return s;
  if (!j.is_object()) throw Error(ErrorCode::invalid_request, "settings must be an object");
  s.bandit.k = optional_field<int>(j, "bandit_k").value_or(s.bandit.k);
  s.bandit.c = optional_field<double>(j, "bandit_c").value_or(s.bandit.c);
  s.bandit.max_consecutive_failures =
      optional_field<int>(j, "max_consecutive_failures").value_or(s.bandit.max_consecutive_failures);
  s.tuner.r_min = optional_field<int>(j, "r_min").value_or(s.tuner.r_min);
  s.tuner.n_candidates = optional_field<int>(j, "n_candidates").value_or(s.tuner.n_candidates);
  s.tuner.xi = optional_field<double>(j, "xi").value_or(s.tuner.xi);
  s.cv_folds = optional_field<int>(j, "cv_folds").value_or(s.cv_folds);
  if (s.bandit.k < 1 || s.bandit.c < 0 || s.tuner.r_min < 0 || s.tuner.n_candidates < 1 ||
      s.cv_folds < 2 || s.bandit.max_consecutive_failures < 1) {
    throw Error(ErrorCode::invalid_request, "settings out of range");
  }
  return s;
}

json to_json(const Trial& t) {
  json j = {{"trial_id", t.trial_id},
            {"run_id", t.run_id},
            {"algorithm", t.algorithm},
            {"hyperpartition_id", t.hyperpartition_id},
            {"config", t.config},
            {"status", t.ok ? "ok" : "error"},
            {"fold_scores", t.fold_scores},
            {"elapsed_s", t.elapsed_s},
            {"created_at", t.created_at},
            {"space_version", t.space_version},
            {"used_gp", t.used_gp}};
  if (t.ok) {
    j["score"] = t.score;
  } else {
    j["score"] = nullptr;
    j["error"] = t.error;
  }
  return j;
}

Trial trial_from_json(const json& j) {
  Trial t;
  t.trial_id = field<long>(j, "trial_id");
  t.run_id = optional_field<std::string>(j, "run_id").value_or("");
  t.algorithm = field<std::string>(j, "algorithm");
  t.hyperpartition_id = field<std::string>(j, "hyperpartition_id");
  t.config = field<Config>(j, "config");
  const auto status = field<std::string>(j, "status");
  if (status != "ok" && status != "error") {
    throw Error(ErrorCode::invalid_request, "trial status must be ok or error");
  }
  t.ok = status == "ok";
  if (t.ok) {
    t.score = field<double>(j, "score");
  } else {
    t.error = optional_field<std::string>(j, "error").value_or("");
  }
  t.fold_scores = optional_field<std::vector<double>>(j, "fold_scores").value_or(std::vector<double>{});
  t.elapsed_s = optional_field<double>(j, "elapsed_s").value_or(0.0);
  t.created_at = optional_field<std::string>(j, "created_at").value_or("");
  t.space_version = optional_field<int>(j, "space_version").value_or(0);
  t.used_gp = optional_field<bool>(j, "used_gp").value_or(false);
  return t;
}

json to_json(const ControlCommand& cmd) {
  json j = {{"kind", to_string(cmd.kind)}};
  if (!cmd.deltas.empty()) {
    json ds = json::array();
    for (const auto& d : cmd.deltas) ds.push_back(to_json(d));
    j["deltas"] = ds;
  }
  if (cmd.extend_budget) j["extend_budget"] = to_json(*cmd.extend_budget);
  return j;
}

ControlCommand command_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_request, "command must be a JSON object");
  ControlCommand cmd;
  const auto kind = field<std::string>(j, "kind");
  bool known = false;
  for (auto k : {CommandKind::start, CommandKind::pause, CommandKind::resume, CommandKind::stop,
                 CommandKind::reconfigure}) {
    if (to_string(k) == kind) {
      cmd.kind = k;
      known = true;
    }
  }
  if (!known) throw Error(ErrorCode::invalid_request, "unknown command kind '" + kind + "'");
  if (j.contains("deltas")) {
    const auto& ds = j.at("deltas");
    if (!ds.is_array()) throw Error(ErrorCode::invalid_request, "deltas must be an array");
    for (const auto& d : ds) cmd.deltas.push_back(delta_from_json(d));
  }
  if (j.contains("extend_budget") && !j.at("extend_budget").is_null()) {
    cmd.extend_budget = budget_increment_from_json(j.at("extend_budget"));
  }
  if (cmd.kind == CommandKind::reconfigure && cmd.deltas.empty()) {
    throw Error(ErrorCode::invalid_request, "reconfigure needs at least one delta");
  }
  if (cmd.kind != CommandKind::reconfigure && !cmd.deltas.empty()) {
    throw Error(ErrorCode::invalid_request, "only reconfigure carries deltas");
  }
  return cmd;
}

}  // namespace steer

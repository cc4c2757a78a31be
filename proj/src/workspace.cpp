#include "steer/workspace.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "steer/error.hpp"

namespace steer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view bytes) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw Error(ErrorCode::io_error, "write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string run_id_for(long n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run-%06ld", n);
  return buf;
}

long run_number(const std::string& id) {
  if (id.rfind("run-", 0) != 0) return 0;
  try {
    return std::stol(id.substr(4));
  } catch (...) {
    return 0;
  }
}

}  // namespace

std::string RunSnapshot::status() const {
  if (pausing && info.status == RunStatus::running) return "pausing";
  return std::string(to_string(info.status));
}

json RunSnapshot::descriptor() const {
  json j = to_json(info);
  j["status"] = status();
  j["latest_trial_id"] = static_cast<long>(trials.size());
  std::optional<double> best;
  long errors = 0;
  for (const auto& t : trials) {
    if (!t.ok) {
      ++errors;
      continue;
    }
    if (!best || t.score > *best) best = t.score;
  }
  j["best_score"] = best ? json(*best) : json(nullptr);
  j["n_errors"] = errors;
  json ev = json::array();
  for (const auto& e : events) {
    ev.push_back({{"trial_id", e.trial_id}, {"kind", e.kind}, {"hyperpartition_id", e.hyperpartition_id}});
  }
  j["events"] = ev;
  return j;
}

RunController::RunController(RunEngine engine, std::unique_ptr<LogWriter> writer)
    : id_(engine.info().id), engine_(std::move(engine)), writer_(std::move(writer)) {
  LogWriter* w = writer_.get();
  engine_.set_sink([w](const json& record) { w->append(record); });
  std::lock_guard lk(engine_mutex_);
  publish();
}

RunController::~RunController() { shutdown(); }

std::shared_ptr<const RunSnapshot> RunController::snapshot() const {
  std::lock_guard lk(snap_mutex_);
  return snap_;
}

// Caller holds engine_mutex_.
void RunController::publish() {
  auto s = std::make_shared<RunSnapshot>();
  s->info = engine_.info();
  s->trials = engine_.trials();
  s->events = engine_.events();
  s->pausing = pause_requested_.load();
  std::lock_guard lk(snap_mutex_);
  snap_ = std::move(s);
}

// Caller holds engine_mutex_.
void RunController::launch_worker() {
  if (worker_active_ || engine_.info().status != RunStatus::running) return;
  if (thread_.joinable()) thread_.join();
  worker_active_ = true;
  thread_ = std::thread([this] { worker(); });
}

void RunController::worker() {
  std::unique_lock lk(engine_mutex_);
  for (;;) {
    cv_.wait(lk, [&] { return waiting_.load() == 0; });
    if (pause_requested_.exchange(false)) {
      if (engine_.info().status == RunStatus::running) {
        ControlCommand pause;
        pause.kind = CommandKind::pause;
        engine_.handle_command(pause);
      }
      publish();
      break;
    }
    if (!engine_.can_step()) break;
    try {
      engine_.step();
    } catch (const Error& e) {
      // no_active_arm already moved the run to paused.
      if (e.code() != ErrorCode::no_active_arm) engine_.fail(e.what());
      publish();
      break;
    } catch (const std::exception& e) {
      engine_.fail(e.what());
      publish();
      break;
    }
    publish();
    // Give queued commands a chance at this trial boundary.
    if (waiting_.load() > 0) {
      lk.unlock();
      std::this_thread::yield();
      lk.lock();
    }
  }
  worker_active_ = false;
  publish();
  cv_.notify_all();
}

std::shared_ptr<const RunSnapshot> RunController::command(const ControlCommand& cmd) {
  if (cmd.kind == CommandKind::pause && !cmd.extend_budget) {
    auto snap = snapshot();
    if (snap->info.status == RunStatus::running) {
      pause_requested_ = true;
      std::unique_lock lk(engine_mutex_, std::try_to_lock);
      if (lk.owns_lock()) {
        // Worker is between trials or already gone; settle the pause now.
        if (!worker_active_ && pause_requested_.exchange(false) &&
            engine_.info().status == RunStatus::running) {
          engine_.handle_command(cmd);
        }
        publish();
        return snapshot();
      }
      auto s = std::make_shared<RunSnapshot>(*snap);
      s->pausing = true;
      {
        std::lock_guard sl(snap_mutex_);
        if (snap_->info.status == RunStatus::running) snap_ = s;
      }
      return snapshot();
    }
  }

  ++waiting_;
  std::unique_lock lk(engine_mutex_);
  --waiting_;
  cv_.notify_all();
  try {
    engine_.handle_command(cmd);
  } catch (...) {
    publish();
    throw;
  }
  if (engine_.info().status != RunStatus::running) pause_requested_ = false;
  publish();
  launch_worker();
  return snapshot();
}

void RunController::shutdown() {
  {
    std::unique_lock lk(engine_mutex_);
    if (worker_active_) pause_requested_ = true;
    cv_.notify_all();
  }
  if (thread_.joinable()) thread_.join();
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "datasets", ec);
  fs::create_directories(root_ / "runs", ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create data dir " + root_.string() + ": " + ec.message());
  const fs::path lock = root_ / ".lock";
  lock_fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT, 0644);
  if (lock_fd_ < 0) throw Error(ErrorCode::io_error, "cannot open " + lock.string());
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw Error(ErrorCode::io_error,
                "data dir " + root_.string() + " is in use by another process (use --server)");
  }
  load();
}

Workspace::~Workspace() {
  shutdown();
  runs_.clear();
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

void Workspace::load() {
  std::vector<fs::path> csvs, logs;
  for (const auto& e : fs::directory_iterator(root_ / "datasets")) {
    if (e.path().extension() == ".csv") csvs.push_back(e.path());
  }
  for (const auto& e : fs::directory_iterator(root_ / "runs")) {
    if (e.path().extension() == ".ndjson") logs.push_back(e.path());
  }
  std::sort(csvs.begin(), csvs.end());
  std::sort(logs.begin(), logs.end());

  for (const auto& p : csvs) {
    try {
      json meta = json::object();
      fs::path mp = p;
      mp.replace_extension(".json");
      if (fs::exists(mp)) meta = json::parse(read_file(mp));
      std::optional<std::string> positive;
      if (meta.contains("positive_class")) positive = meta["positive_class"].get<std::string>();
      auto ds = std::make_shared<Dataset>(
          load_csv(read_file(p), meta.value("name", p.stem().string()), positive));
      datasets_[ds->id] = std::move(ds);
    } catch (const std::exception& e) {
      warnings_.push_back("skipping dataset " + p.string() + ": " + e.what());
    }
  }

  for (const auto& p : logs) {
    try {
      ParsedLog parsed = read_log_file(p);
      for (const auto& w : parsed.warnings) warnings_.push_back(p.filename().string() + ": " + w);
      if (parsed.records.empty()) {
        warnings_.push_back("skipping empty log " + p.string());
        continue;
      }
      std::shared_ptr<const Dataset> ds;
      const std::string ds_id = parsed.records.front().at("run").at("dataset_id").get<std::string>();
      if (auto it = datasets_.find(ds_id); it != datasets_.end()) ds = it->second;
      RunEngine engine = RunEngine::replay(parsed.records, ds);
      auto writer = std::make_unique<LogWriter>(p, parsed.valid_bytes);
      LogWriter* w = writer.get();
      engine.set_sink([w](const json& r) { w->append(r); });
      if (engine.recover_interrupted()) {
        warnings_.push_back(engine.info().id + " was interrupted; recovered as paused");
      }
      const std::string id = engine.info().id;
      next_run_ = std::max(next_run_, run_number(id) + 1);
      runs_[id] = std::make_shared<RunController>(std::move(engine), std::move(writer));
    } catch (const std::exception& e) {
      warnings_.push_back("skipping run log " + p.string() + ": " + e.what());
    }
  }
}

json Workspace::add_dataset(std::string_view csv, const std::string& name,
                            const std::optional<std::string>& positive_class) {
  Dataset parsed = load_csv(csv, name, positive_class);
  std::lock_guard lk(mutex_);
  if (auto it = datasets_.find(parsed.id); it != datasets_.end()) return describe(*it->second);
  const fs::path base = root_ / "datasets" / parsed.id;
  json meta = {{"name", parsed.name},
               {"positive_class", parsed.classes[static_cast<std::size_t>(parsed.positive_class)]}};
  write_file(base.string() + ".csv", csv);
  write_file(base.string() + ".json", meta.dump(2) + "\n");
  auto ds = std::make_shared<Dataset>(std::move(parsed));
  datasets_[ds->id] = ds;
  return describe(*ds);
}

json Workspace::list_datasets() const {
  std::lock_guard lk(mutex_);
  json out = json::array();
  for (const auto& [id, ds] : datasets_) out.push_back(describe(*ds));
  return out;
}

std::shared_ptr<const Dataset> Workspace::dataset(const std::string& id) const {
  std::lock_guard lk(mutex_);
  auto it = datasets_.find(id);
  if (it == datasets_.end()) {
    throw Error(ErrorCode::unknown_dataset, "unknown dataset '" + id + "'", json{{"dataset_id", id}});
  }
  return it->second;
}

std::shared_ptr<RunController> Workspace::create_run(const json& request) {
  if (!request.is_object()) throw Error(ErrorCode::invalid_request, "run request must be a JSON object");
  auto str = [&](const char* key) -> std::optional<std::string> {
    if (!request.contains(key) || request.at(key).is_null()) return std::nullopt;
    if (!request.at(key).is_string()) {
      throw Error(ErrorCode::invalid_request, std::string(key) + " must be a string");
    }
    return request.at(key).get<std::string>();
  };
  const auto ds_id = str("dataset_id");
  if (!ds_id) throw Error(ErrorCode::invalid_request, "dataset_id is required");
  auto ds = dataset(*ds_id);

  CreateRunParams params;
  if (request.contains("seed")) {
    const auto& s = request.at("seed");
    if (!s.is_number_integer()) throw Error(ErrorCode::invalid_request, "seed must be an integer");
    params.seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                         : static_cast<std::uint64_t>(s.get<std::int64_t>());
  }
  if (auto m = str("metric")) params.metric = *m;
  if (request.contains("budget")) {
    params.budget = budget_from_json(request.at("budget"));
  } else {
    params.budget.max_trials = 100;
  }
  if (request.contains("settings")) params.settings = run_settings_from_json(request.at("settings"));

  std::vector<SpaceDelta> deltas;
  if (request.contains("algorithms") && !request.at("algorithms").is_null()) {
    const auto& algos = request.at("algorithms");
    if (!algos.is_array()) throw Error(ErrorCode::invalid_request, "algorithms must be an array");
    std::set<std::string> keep;
    for (const auto& a : algos) {
      if (!a.is_string()) throw Error(ErrorCode::invalid_request, "algorithm names must be strings");
      const auto name = a.get<std::string>();
      if (!params.space.find_algorithm(name)) {
        throw Error(ErrorCode::unknown_target, "unknown algorithm '" + name + "'", json{{"target", name}});
      }
      keep.insert(name);
    }
    for (const auto& a : params.space.algorithms()) {
      if (!keep.count(a.name)) deltas.push_back({DeltaKind::disable_algorithm, a.name, {}, std::nullopt});
    }
  }
  if (request.contains("deltas")) {
    const auto& ds_json = request.at("deltas");
    if (!ds_json.is_array()) throw Error(ErrorCode::invalid_request, "deltas must be an array");
    for (const auto& d : ds_json) deltas.push_back(delta_from_json(d));
  }
  if (!deltas.empty()) params.space = apply_deltas(params.space, deltas);

  std::lock_guard lk(mutex_);
  params.run_id = run_id_for(next_run_);
  const fs::path log = root_ / "runs" / (params.run_id + ".ndjson");
  std::vector<json> pending;
  RunEngine engine = RunEngine::create(params, ds, [&](const json& r) { pending.push_back(r); });
  auto writer = std::make_unique<LogWriter>(log, 0);
  for (const auto& r : pending) writer->append(r);
  ++next_run_;
  auto ctl = std::make_shared<RunController>(std::move(engine), std::move(writer));
  runs_[params.run_id] = ctl;
  return ctl;
}

std::shared_ptr<RunController> Workspace::run(const std::string& id) const {
  std::lock_guard lk(mutex_);
  auto it = runs_.find(id);
  if (it == runs_.end()) throw Error(ErrorCode::unknown_run, "unknown run '" + id + "'", json{{"run_id", id}});
  return it->second;
}

std::vector<std::shared_ptr<RunController>> Workspace::runs() const {
  std::lock_guard lk(mutex_);
  std::vector<std::shared_ptr<RunController>> out;
  for (const auto& [id, r] : runs_) out.push_back(r);
  return out;
}

void Workspace::shutdown() {
  for (const auto& r : runs()) r->shutdown();
}

}  // namespace steer

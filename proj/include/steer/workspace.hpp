#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "steer/dataset.hpp"
#include "steer/orchestrator.hpp"
#include "steer/trial_log.hpp"

namespace steer {

/// Immutable view of a run published after every state change.
struct RunSnapshot {
  RunInfo info;
  std::vector<Trial> trials;
  std::vector<RunEvent> events;
  bool pausing = false;

  /// Lifecycle status, or "pausing" while a pause waits for the in-flight trial.
  std::string status() const;
  nlohmann::json descriptor() const;
};

/// Owns one RunEngine and the worker thread that steps it. Commands that
/// arrive mid-trial are applied at the next trial boundary; pause returns
/// immediately and lands once the in-flight trial is recorded.
class RunController {
 public:
  RunController(RunEngine engine, std::unique_ptr<LogWriter> writer);
  ~RunController();
  RunController(const RunController&) = delete;
  RunController& operator=(const RunController&) = delete;

  std::shared_ptr<const RunSnapshot> snapshot() const;
  const std::string& id() const { return id_; }
  const std::filesystem::path& log_path() const { return writer_->path(); }

  /// Returns the post-command snapshot; throws Error on rejection.
  std::shared_ptr<const RunSnapshot> command(const ControlCommand& cmd);

  /// Pauses a stepping run and joins the worker.
  void shutdown();

 private:
  void worker();
  void publish();
  void launch_worker();

  std::string id_;
  RunEngine engine_;
  std::unique_ptr<LogWriter> writer_;

  std::mutex engine_mutex_;
  std::condition_variable cv_;
  std::atomic<int> waiting_{0};
  std::atomic<bool> pause_requested_{false};
  bool worker_active_ = false;
  std::thread thread_;

  mutable std::mutex snap_mutex_;
  std::shared_ptr<const RunSnapshot> snap_;
};

/// Dataset store plus every run under one storage root:
///   <root>/datasets/<id>.csv, <root>/datasets/<id>.json, <root>/runs/<run>.ndjson
/// A lock file keeps two processes from sharing a root.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);
  ~Workspace();
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const std::filesystem::path& root() const { return root_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Idempotent: identical bytes map to the existing dataset.
  nlohmann::json add_dataset(std::string_view csv, const std::string& name,
                             const std::optional<std::string>& positive_class = std::nullopt);
  nlohmann::json list_datasets() const;
  std::shared_ptr<const Dataset> dataset(const std::string& id) const;

  /// Request fields: dataset_id, seed, metric, budget, algorithms, deltas, settings.
  std::shared_ptr<RunController> create_run(const nlohmann::json& request);
  std::shared_ptr<RunController> run(const std::string& id) const;
  std::vector<std::shared_ptr<RunController>> runs() const;

  /// Pauses every stepping run and flushes logs.
  void shutdown();

 private:
  void load();

  std::filesystem::path root_;
  int lock_fd_ = -1;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::map<std::string, std::shared_ptr<RunController>> runs_;
  long next_run_ = 1;
  std::vector<std::string> warnings_;
};

}  // namespace steer

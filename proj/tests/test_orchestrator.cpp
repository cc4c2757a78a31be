#include <gtest/gtest.h>

#include <unistd.h>

#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "steer/error.hpp"
#include "steer/orchestrator.hpp"
#include "steer/summarizer.hpp"
#include "steer/trial_log.hpp"

using namespace steer;
using nlohmann::json;

namespace {

std::shared_ptr<const Dataset> small_blobs() {
  static auto ds = std::make_shared<const Dataset>(make_blobs(60, 3, 4.0, 11));
  return ds;
}

struct Recorded {
  std::vector<json> records;
  RecordSink sink() {
    return [this](const json& r) { records.push_back(r); };
  }
  std::string ndjson() const {
    std::string out;
    for (const auto& r : records) out += r.dump() + "\n";
    return out;
  }
};

CreateRunParams params(long max_trials, std::uint64_t seed = 5, std::string metric = "f1_cv3") {
  CreateRunParams p;
  p.run_id = "run-000001";
  p.budget.max_trials = max_trials;
  p.seed = seed;
  p.metric = std::move(metric);
  return p;
}

ControlCommand cmd(CommandKind kind) {
  ControlCommand c;
  c.kind = kind;
  return c;
}

ControlCommand reconfigure(std::vector<SpaceDelta> deltas) {
  ControlCommand c;
  c.kind = CommandKind::reconfigure;
  c.deltas = std::move(deltas);
  return c;
}

SpaceDelta delta(DeltaKind kind, std::string target, std::string hp = {},
                 std::optional<Range> range = std::nullopt) {
  return {kind, std::move(target), std::move(hp), range};
}

void run_to_end(RunEngine& e) {
  while (e.can_step()) e.step();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::io_error;
}

}  // namespace

TEST(Create, DefaultSpaceHasFourteenArms) {
  Recorded log;
  auto e = RunEngine::create(params(10), small_blobs(), log.sink());
  EXPECT_EQ(e.bandit().arms().size(), 14u);
  EXPECT_EQ(e.info().status, RunStatus::created);
  ASSERT_EQ(log.records.size(), 1u);
  EXPECT_EQ(log.records[0]["kind"], "run_created");
  EXPECT_EQ(log.records[0]["seq"], 1);
}

TEST(Create, Rejections) {
  auto p = params(10);
  p.budget.max_trials.reset();
  EXPECT_EQ(code_of([&] { RunEngine::create(p, small_blobs()); }), ErrorCode::invalid_budget);
  EXPECT_EQ(code_of([&] { RunEngine::create(params(10), nullptr); }), ErrorCode::unknown_dataset);
  EXPECT_EQ(code_of([&] { RunEngine::create(params(10, 1, "accuracy"), small_blobs()); }),
            ErrorCode::unknown_metric);
  auto q = params(10);
  for (const auto& a : q.space.algorithms()) q.space.set_algorithm_enabled(a.name, false);
  EXPECT_EQ(code_of([&] { RunEngine::create(q, small_blobs()); }),
            ErrorCode::no_enabled_hyperpartition);
}

TEST(Step, FirstTrialAndLifecycle) {
  auto e = RunEngine::create(params(3), small_blobs());
  EXPECT_EQ(code_of([&] { e.step(); }), ErrorCode::invalid_transition);
  e.handle_command(cmd(CommandKind::start));
  EXPECT_EQ(e.info().status, RunStatus::running);
  EXPECT_EQ(e.step().trial_id, 1);
  run_to_end(e);
  EXPECT_EQ(e.trials().size(), 3u);
  EXPECT_EQ(e.info().status, RunStatus::finished);
  EXPECT_EQ(code_of([&] { e.handle_command(cmd(CommandKind::resume)); }),
            ErrorCode::invalid_transition);
}

TEST(Step, SingleHyperpartitionAlwaysChosen) {
  auto p = params(8);
  for (const auto& hp : p.space.hyperpartitions()) {
    if (hp.id != "KNN:weights=distance,metric=manhattan") p.space.set_hyperpartition_enabled(hp.id, false);
  }
  auto e = RunEngine::create(p, small_blobs());
  e.handle_command(cmd(CommandKind::start));
  run_to_end(e);
  for (const auto& t : e.trials()) EXPECT_EQ(t.hyperpartition_id, "KNN:weights=distance,metric=manhattan");
}

TEST(Step, UntriedArmsCoveredFirst) {
  auto e = RunEngine::create(params(14), small_blobs());
  e.handle_command(cmd(CommandKind::start));
  run_to_end(e);
  std::set<std::string> seen;
  for (const auto& t : e.trials()) seen.insert(t.hyperpartition_id);
  EXPECT_EQ(seen.size(), 14u);
}

TEST(Determinism, EqualSeedsEqualTrials) {
  auto run = [](std::uint64_t seed) {
    auto e = RunEngine::create(params(30, seed), small_blobs());
    e.handle_command(cmd(CommandKind::start));
    run_to_end(e);
    return e.trials();
  };
  const auto a = run(9), b = run(9), c = run(10);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].hyperpartition_id, b[i].hyperpartition_id);
    EXPECT_EQ(a[i].config, b[i].config);
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_EQ(a[i].fold_scores, b[i].fold_scores);
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].config != c[i].config;
  EXPECT_TRUE(differs);
}

TEST(Commands, PauseResumeKeepsNumbering) {
  auto e = RunEngine::create(params(20), small_blobs());
  e.handle_command(cmd(CommandKind::start));
  for (int i = 0; i < 7; ++i) e.step();
  e.handle_command(cmd(CommandKind::pause));
  EXPECT_FALSE(e.can_step());
  EXPECT_EQ(code_of([&] { e.handle_command(cmd(CommandKind::pause)); }),
            ErrorCode::invalid_transition);
  e.handle_command(cmd(CommandKind::resume));
  EXPECT_EQ(e.step().trial_id, 8);
  run_to_end(e);
  for (std::size_t i = 0; i < e.trials().size(); ++i) {
    EXPECT_EQ(e.trials()[i].trial_id, static_cast<long>(i + 1));
  }
}

TEST(Commands, ReconfigureToSingleAlgorithmAndRange) {
  auto e = RunEngine::create(params(40), small_blobs());
  e.handle_command(cmd(CommandKind::start));
  for (int i = 0; i < 15; ++i) e.step();
  e.handle_command(cmd(CommandKind::pause));
  std::vector<SpaceDelta> ds;
  for (const auto& a : e.info().space.algorithms()) {
    if (a.name != "ExtraTrees") ds.push_back(delta(DeltaKind::disable_algorithm, a.name));
  }
  ds.push_back(delta(DeltaKind::set_range, "ExtraTrees", "max_features", Range{0.7, 1.0}));
  e.handle_command(reconfigure(ds));
  EXPECT_EQ(e.info().space_version, 1);
  e.handle_command(cmd(CommandKind::resume));
  run_to_end(e);
  ASSERT_EQ(e.trials().size(), 40u);
  for (std::size_t i = 15; i < 40; ++i) {
    const auto& t = e.trials()[i];
    EXPECT_EQ(t.algorithm, "ExtraTrees");
    EXPECT_EQ(t.space_version, 1);
    EXPECT_GE(t.config.at("max_features"), 0.7);
    EXPECT_LE(t.config.at("max_features"), 1.0);
    EXPECT_TRUE(contains(*e.info().space.find_hyperpartition(t.hyperpartition_id), e.info().space, t.config));
  }
}

TEST(Commands, RejectedCommandIsAtomic) {
  Recorded log;
  auto e = RunEngine::create(params(10), small_blobs(), log.sink());
  e.handle_command(cmd(CommandKind::start));
  e.step();
  const SearchSpace before = e.info().space;
  const auto n_records = log.records.size();
  const auto c = reconfigure({delta(DeltaKind::disable_algorithm, "KNN"),
                              delta(DeltaKind::disable_algorithm, "NoSuchAlgo")});
  EXPECT_EQ(code_of([&] { e.handle_command(c); }), ErrorCode::unknown_target);
  EXPECT_EQ(e.info().space, before);
  EXPECT_EQ(e.info().space_version, 0);
  EXPECT_EQ(log.records.size(), n_records);
  EXPECT_EQ(code_of([&] {
              e.handle_command(reconfigure(
                  {delta(DeltaKind::set_range, "ExtraTrees", "max_features", Range{0.9, 0.2})}));
            }),
            ErrorCode::empty_range);
  EXPECT_EQ(e.info().space, before);
}

TEST(Commands, DisableEverythingRejected) {
  auto e = RunEngine::create(params(10), small_blobs());
  std::vector<SpaceDelta> ds;
  for (const auto& a : e.info().space.algorithms()) ds.push_back(delta(DeltaKind::disable_algorithm, a.name));
  EXPECT_EQ(code_of([&] { e.handle_command(reconfigure(ds)); }), ErrorCode::no_enabled_hyperpartition);
}

TEST(Commands, StopIsTerminal) {
  auto e = RunEngine::create(params(10), small_blobs());
  e.handle_command(cmd(CommandKind::stop));
  EXPECT_EQ(e.info().status, RunStatus::finished);
  for (auto k : {CommandKind::start, CommandKind::pause, CommandKind::resume, CommandKind::stop}) {
    EXPECT_EQ(code_of([&] { e.handle_command(cmd(k)); }), ErrorCode::invalid_transition);
  }
}

TEST(Budget, ExtendAfterExhaustion) {
  auto e = RunEngine::create(params(3), small_blobs());
  e.handle_command(cmd(CommandKind::start));
  run_to_end(e);
  EXPECT_EQ(e.info().status, RunStatus::finished);

  auto f = RunEngine::create(params(3), small_blobs());
  f.handle_command(cmd(CommandKind::start));
  f.step();
  f.step();
  f.handle_command(cmd(CommandKind::pause));
  auto resume = cmd(CommandKind::resume);
  resume.extend_budget = BudgetIncrement{4, std::nullopt};
  f.handle_command(resume);
  EXPECT_EQ(*f.info().budget.max_trials, 7);
  run_to_end(f);
  EXPECT_EQ(f.trials().size(), 7u);
}

TEST(Budget, NeverExceededUnderRandomCommands) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 4; ++rep) {
    auto e = RunEngine::create(params(12 + rep, rep), small_blobs());
    e.handle_command(cmd(CommandKind::start));
    for (int i = 0; i < 60; ++i) {
      const auto pick = rng() % 6;
      try {
        if (pick < 3) {
          if (e.can_step()) e.step();
        } else if (pick == 3) {
          e.handle_command(cmd(CommandKind::pause));
        } else if (pick == 4) {
          auto r = cmd(CommandKind::resume);
          if (rng() % 2) r.extend_budget = BudgetIncrement{static_cast<long>(rng() % 3), std::nullopt};
          e.handle_command(r);
        } else {
          const auto& algos = e.info().space.algorithms();
          const auto& a = algos[rng() % algos.size()];
          e.handle_command(reconfigure({delta(
              rng() % 2 ? DeltaKind::disable_algorithm : DeltaKind::enable_algorithm, a.name)}));
        }
      } catch (const Error&) {
      }
      ASSERT_LE(e.info().budget.consumed_trials, *e.info().budget.max_trials);
      ASSERT_EQ(e.info().budget.consumed_trials, static_cast<long>(e.trials().size()));
    }
  }
}

TEST(Failures, AutoDisableAndNoActiveArmPauses) {
  // Constant features make every GaussianNB fold fail on zero variance.
  auto p = params(10);
  for (const auto& hp : p.space.hyperpartitions()) {
    if (hp.id != "GaussianNB:") p.space.set_hyperpartition_enabled(hp.id, false);
  }
  std::string csv = "f,g,label\n";
  for (int i = 0; i < 12; ++i) csv += std::string("1,2,") + (i % 2 ? "a" : "b") + "\n";
  auto ds = std::make_shared<const Dataset>(load_csv(csv, "constant"));
  auto e = RunEngine::create(p, ds);
  e.handle_command(cmd(CommandKind::start));
  for (int i = 0; i < 3; ++i) EXPECT_FALSE(e.step().ok);
  ASSERT_EQ(e.events().size(), 1u);
  EXPECT_EQ(e.events()[0].kind, "arm_auto_disabled");
  EXPECT_EQ(code_of([&] { e.step(); }), ErrorCode::no_active_arm);
  EXPECT_EQ(e.info().status, RunStatus::paused);
  EXPECT_EQ(e.trials().size(), 3u);
  EXPECT_EQ(code_of([&] { e.handle_command(cmd(CommandKind::resume)); }), ErrorCode::no_active_arm);
  e.handle_command(reconfigure({delta(DeltaKind::enable_hyperpartition, "GaussianNB:")}));
  e.handle_command(cmd(CommandKind::resume));
  EXPECT_EQ(e.info().status, RunStatus::running);
  EXPECT_FALSE(e.step().ok);
}

TEST(Replay, EquivalentAtSeveralLengths) {
  for (long n : {0L, 1L, 17L, 250L}) {
    Recorded log;
    auto live = RunEngine::create(params(std::max(n, 1L), 3), small_blobs(), log.sink());
    if (n > 0) {
      live.handle_command(cmd(CommandKind::start));
      run_to_end(live);
    }
    ASSERT_EQ(live.trials().size(), static_cast<std::size_t>(n));
    const auto parsed = parse_log(log.ndjson());
    const auto replayed = RunEngine::replay(parsed.records, small_blobs());
    EXPECT_TRUE(live.same_state(replayed)) << "n=" << n;
    EXPECT_EQ(full_summary(live.trials(), live.info().space).dump(),
              full_summary(replayed.trials(), replayed.info().space).dump())
        << "n=" << n;
  }
}

TEST(Replay, EmptyRunIsCreated) {
  Recorded log;
  auto live = RunEngine::create(params(5), small_blobs(), log.sink());
  const auto r = RunEngine::replay(log.records);
  EXPECT_EQ(r.info().status, RunStatus::created);
  EXPECT_TRUE(r.trials().empty());
  EXPECT_EQ(r.next_seq(), 2);
}

TEST(Replay, ContinuesSeamlessly) {
  Recorded a;
  auto live = RunEngine::create(params(20, 8), small_blobs(), a.sink());
  live.handle_command(cmd(CommandKind::start));
  for (int i = 0; i < 9; ++i) live.step();
  Recorded b;
  b.records = a.records;
  auto resumed = RunEngine::replay(b.records, small_blobs(), b.sink());
  run_to_end(live);
  run_to_end(resumed);
  ASSERT_EQ(live.trials().size(), resumed.trials().size());
  for (std::size_t i = 0; i < live.trials().size(); ++i) {
    EXPECT_EQ(live.trials()[i].config, resumed.trials()[i].config);
    EXPECT_EQ(live.trials()[i].score, resumed.trials()[i].score);
  }
  EXPECT_EQ(a.records.size(), b.records.size());
}

TEST(Replay, TornTailDropped) {
  Recorded log;
  auto live = RunEngine::create(params(50), small_blobs(), log.sink());
  live.handle_command(cmd(CommandKind::start));
  run_to_end(live);
  // Cut the final trial record mid-line (the finished transition goes with it).
  std::vector<json> kept(log.records.begin(), log.records.end() - 2);
  std::string text;
  for (const auto& r : kept) text += r.dump() + "\n";
  const std::string last = log.records[log.records.size() - 2].dump();
  text += last.substr(0, last.size() / 2);
  const auto parsed = parse_log(text);
  EXPECT_TRUE(parsed.dropped_torn_tail);
  EXPECT_EQ(parsed.warnings.size(), 1u);
  EXPECT_EQ(parsed.valid_bytes, text.size() - last.size() / 2);
  const auto r = RunEngine::replay(parsed.records);
  EXPECT_EQ(r.trials().size(), 49u);
  EXPECT_EQ(r.info().status, RunStatus::running);
}

TEST(Replay, CorruptLineCitesLine) {
  Recorded log;
  auto live = RunEngine::create(params(5), small_blobs(), log.sink());
  live.handle_command(cmd(CommandKind::start));
  run_to_end(live);
  std::istringstream in(log.ndjson());
  std::string text, line;
  for (int i = 1; std::getline(in, line); ++i) text += (i == 4 ? std::string("{not json") : line) + "\n";
  try {
    parse_log(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::corrupt_log);
    EXPECT_EQ(e.detail().at("line"), 4);
  }
  // Out-of-order seq is also corruption.
  auto recs = log.records;
  std::swap(recs[2], recs[3]);
  std::string swapped;
  for (const auto& r : recs) swapped += r.dump() + "\n";
  EXPECT_EQ(code_of([&] { parse_log(swapped); }), ErrorCode::corrupt_log);
}

TEST(Replay, RecoverInterrupted) {
  Recorded log;
  auto live = RunEngine::create(params(10), small_blobs(), log.sink());
  live.handle_command(cmd(CommandKind::start));
  live.step();
  auto r = RunEngine::replay(log.records, small_blobs());
  EXPECT_TRUE(r.recover_interrupted());
  EXPECT_EQ(r.info().status, RunStatus::paused);
  EXPECT_FALSE(r.recover_interrupted());
}

TEST(Log, RecordFieldNames) {
  Recorded log;
  auto live = RunEngine::create(params(2), small_blobs(), log.sink());
  live.handle_command(cmd(CommandKind::start));
  run_to_end(live);
  std::set<std::string> kinds;
  long seq = 0;
  for (const auto& r : log.records) {
    EXPECT_EQ(r.at("seq").get<long>(), seq + 1);
    seq = r.at("seq").get<long>();
    EXPECT_TRUE(r.contains("ts"));
    kinds.insert(r.at("kind").get<std::string>());
    if (r.at("kind") == "trial") {
      const auto& t = r.at("trial");
      for (const char* key : {"trial_id", "run_id", "algorithm", "hyperpartition_id", "config",
                              "score", "status", "fold_scores", "elapsed_s", "created_at",
                              "space_version"}) {
        EXPECT_TRUE(t.contains(key)) << key;
      }
      EXPECT_EQ(t.at("fold_scores").size(), 3u);
    }
  }
  EXPECT_EQ(kinds, (std::set<std::string>{"run_created", "command", "status_change", "trial"}));
}

TEST(Log, WriterTruncatesTornTail) {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / ("steer-log-" + std::to_string(::getpid()) + ".ndjson");
  {
    std::ofstream out(path);
    out << R"({"seq":1,"kind":"run_created","ts":"x"})" << "\n" << R"({"seq":2,"ki)";
  }
  const auto parsed = read_log_file(path);
  ASSERT_TRUE(parsed.dropped_torn_tail);
  {
    LogWriter w(path, parsed.valid_bytes);
    w.append(json{{"seq", 2}, {"kind", "command"}, {"ts", "y"}});
  }
  const auto again = read_log_file(path);
  EXPECT_FALSE(again.dropped_torn_tail);
  EXPECT_EQ(again.records.size(), 2u);
  fs::remove(path);
}

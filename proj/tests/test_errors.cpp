#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <chrono>
#include <set>
#include <thread>

#include "steer/api.hpp"
#include "steer/cli.hpp"
#include "steer/error.hpp"
#include "steer/http_server.hpp"
#include "steer/orchestrator.hpp"
#include "steer/trial_log.hpp"
#include "steer/workspace.hpp"
#include "support.hpp"

using namespace steer;
using nlohmann::json;

namespace {

int expected_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_request: return 400;
    case ErrorCode::unknown_dataset:
    case ErrorCode::unknown_run:
    case ErrorCode::not_found: return 404;
    case ErrorCode::invalid_transition:
    case ErrorCode::no_active_arm: return 409;
    case ErrorCode::corrupt_log:
    case ErrorCode::io_error: return 500;
    default: return 422;
  }
}

class Rejections : public ::testing::Test {
 protected:
  void SetUp() override {
    ws_ = std::make_unique<Workspace>(dir_.path());
    api_ = std::make_unique<Api>(*ws_);
    const auto ds = make_blobs(40, 2, 4.0, 1);
    ds_ = call("POST", "/datasets", to_csv(ds)).body["id"];
    run_ = call("POST", "/runs", json{{"dataset_id", ds_}, {"metric", "f1_cv3"}, {"budget", {{"max_trials", 5}}}}.dump())
               .body["id"];
  }
  void TearDown() override { ws_->shutdown(); }

  ApiResponse call(const std::string& method, const std::string& path, const std::string& body = "",
                   std::map<std::string, std::string> query = {}) {
    return api_->handle({method, path, std::move(query), body});
  }

  // Records the code the API reported and checks status/body consistency.
  void via_api(const ApiResponse& r, ErrorCode expected) {
    ASSERT_GE(r.status, 400) << r.text();
    const std::string code = r.body.at("code");
    EXPECT_EQ(code, code_name(expected)) << r.text();
    EXPECT_EQ(r.status, expected_status(expected)) << code;
    EXPECT_EQ(r.body.at("status"), r.status);
    EXPECT_TRUE(r.body.at("message").is_string());
    EXPECT_TRUE(r.body.contains("detail"));
    seen_.insert(code);
  }

  void via_library(const std::function<void()>& f, ErrorCode expected) {
    try {
      f();
      ADD_FAILURE() << "expected " << code_name(expected);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), expected) << e.what();
      EXPECT_EQ(http_status(e.code()), expected_status(expected));
      const json body = error_body(e);
      EXPECT_EQ(body["status"], expected_status(expected));
      seen_.insert(std::string(code_name(e.code())));
    }
  }

  json reconfigure(json delta) { return json{{"kind", "reconfigure"}, {"deltas", json::array({delta})}}; }

  steer::testing::TempDir dir_;
  std::unique_ptr<Workspace> ws_;
  std::unique_ptr<Api> api_;
  std::string ds_, run_;
  std::set<std::string> seen_;
};

}  // namespace

TEST_F(Rejections, EveryCodeHasARealPath) {
  const std::string cmds = "/runs/" + run_ + "/commands";

  via_api(call("POST", cmds, reconfigure({{"kind", "disable_algorithm"}, {"target", "Nope"}}).dump()),
          ErrorCode::unknown_target);
  via_api(call("POST", cmds,
               reconfigure({{"kind", "set_range"}, {"target", "ExtraTrees"}, {"hyperparameter", "max_features"},
                            {"range", {0.9, 0.2}}})
                   .dump()),
          ErrorCode::empty_range);
  json all_off = {{"kind", "reconfigure"}, {"deltas", json::array()}};
  for (const char* a : {"KNN", "DecisionTree", "RandomForest", "ExtraTrees", "SGDLogistic", "GaussianNB"}) {
    all_off["deltas"].push_back({{"kind", "disable_algorithm"}, {"target", a}});
  }
  via_api(call("POST", cmds, all_off.dump()), ErrorCode::no_enabled_hyperpartition);
  via_api(call("POST", cmds, json{{"kind", "resume"}}.dump()), ErrorCode::invalid_transition);
  via_api(call("POST", "/runs", json{{"dataset_id", ds_}, {"budget", {{"max_trials", 0}}}}.dump()),
          ErrorCode::invalid_budget);
  via_api(call("POST", "/datasets", "a,label\n1,x\n,y\n"), ErrorCode::invalid_csv);
  via_api(call("POST", "/runs", json{{"dataset_id", "ds-none"}}.dump()), ErrorCode::unknown_dataset);
  via_api(call("GET", "/runs/run-424242"), ErrorCode::unknown_run);
  via_api(call("GET", "/runs/" + run_ + "/summary/hyperpartitions", "", {{"algorithm", "Nope"}}),
          ErrorCode::unknown_name);
  via_api(call("POST", "/runs", json{{"dataset_id", ds_}, {"metric", "auc"}}.dump()), ErrorCode::unknown_metric);
  via_api(call("POST", cmds, "{"), ErrorCode::invalid_request);
  via_api(call("GET", "/nothing/here"), ErrorCode::not_found);

  // Codes raised below the API surface.
  auto ds = std::make_shared<const Dataset>(make_blobs(40, 2, 4.0, 1));
  via_library(
      [&] {
        CreateRunParams p;
        p.budget.max_trials = 3;
        p.space.set_range_override("ExtraTrees:criterion=gini", "max_features", {0.5, 2.0});
        RunEngine::create(p, ds);
      },
      ErrorCode::range_out_of_bounds);
  via_library(
      [&] {
        CreateRunParams p;
        p.budget.max_trials = 3;
        p.space = SearchSpace({{"Dup", {}, {}}, {"Dup", {}, {}}});
        RunEngine::create(p, ds);
      },
      ErrorCode::invalid_spec);
  via_library(
      [&] {
        const auto space = default_space();
        contains(*space.find_hyperpartition("GaussianNB:"), space, Config{{"n_neighbors", 3}});
      },
      ErrorCode::config_mismatch);
  via_library(
      [&] {
        Bandit b;
        b.add_arm("a", false);
        (void)b.select();
      },
      ErrorCode::no_active_arm);
  via_library([&] { parse_log("{\"seq\":1,\"kind\":\"run_created\",\"ts\":\"x\"}\nnot json\n{}\n"); },
              ErrorCode::corrupt_log);
  via_library(
      [&] {
        HttpServer a(*api_);
        const int port = a.bind({"127.0.0.1", 0});
        HttpServer b(*api_);
        b.bind({"127.0.0.1", port});
      },
      ErrorCode::io_error);

  std::set<std::string> all;
  for (auto c : kAllErrorCodes) all.insert(std::string(code_name(c)));
  EXPECT_EQ(seen_, all);
}

TEST_F(Rejections, NoActiveArmOverHttpStatus) {
  // A run whose only hyperpartition auto-disables answers resume with 409.
  std::string csv = "f,g,label\n";
  for (int i = 0; i < 12; ++i) csv += std::string("1,2,") + (i % 2 ? "a" : "b") + "\n";
  const std::string ds = call("POST", "/datasets", csv).body["id"];
  const std::string run = call("POST", "/runs",
                               json{{"dataset_id", ds},
                                    {"metric", "f1_cv3"},
                                    {"algorithms", {"GaussianNB"}},
                                    {"budget", {{"max_trials", 10}}}}
                                   .dump())
                              .body["id"];
  call("POST", "/runs/" + run + "/commands", json{{"kind", "start"}}.dump());
  for (int i = 0; i < 500; ++i) {
    if (call("GET", "/runs/" + run).body["status"] == "paused") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  const auto r = call("GET", "/runs/" + run);
  EXPECT_EQ(r.body["status"], "paused");
  EXPECT_EQ(r.body["n_errors"], 3);
  via_api(call("POST", "/runs/" + run + "/commands", json{{"kind", "resume"}}.dump()), ErrorCode::no_active_arm);
}

TEST_F(Rejections, CorruptLogOnDiskIsReported) {
  ws_->shutdown();
  ws_.reset();
  std::ofstream(dir_.path() / "runs" / "run-000009.ndjson") << "{\"seq\":1,\"kind\":\"bogus\",\"ts\":\"x\"}\n";
  ws_ = std::make_unique<Workspace>(dir_.path());
  bool warned = false;
  for (const auto& w : ws_->warnings()) warned = warned || w.find("run-000009") != std::string::npos;
  EXPECT_TRUE(warned);
  EXPECT_EQ(call("GET", "/runs/run-000009").status, 404);
}

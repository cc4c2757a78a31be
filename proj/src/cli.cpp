#include "steer/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "steer/dataset.hpp"
#include "steer/http_server.hpp"

namespace steer {

using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted = true; }

class LocalClient : public Client {
 public:
  explicit LocalClient(const std::string& dir) : ws_(dir), api_(ws_) {
    for (const auto& w : ws_.warnings()) std::cerr << "warning: " << w << "\n";
  }
  ~LocalClient() override { ws_.shutdown(); }
  ApiResponse call(const ApiRequest& r) override { return api_.handle(r); }
  double poll_interval() const override { return 0.05; }

 private:
  Workspace ws_;
  Api api_;
};

class HttpClient : public Client {
 public:
  explicit HttpClient(std::string base) : base_(std::move(base)) {}

  ApiResponse call(const ApiRequest& r) override {
    httplib::Client cli(base_);
    cli.set_read_timeout(600, 0);
    cli.set_connection_timeout(5, 0);
    httplib::Params params(r.query.begin(), r.query.end());
    const std::string path = httplib::append_query_params(r.path, params);
    httplib::Result res = r.method == "POST"
                              ? cli.Post(path, r.body, r.body.empty() || r.body[0] == '{' ? "application/json" : "text/csv")
                              : cli.Get(path);
    if (!res) {
      throw Error(ErrorCode::io_error, "cannot reach server " + base_ + ": " + httplib::to_string(res.error()));
    }
    ApiResponse out;
    out.status = res->status;
    out.content_type = res->get_header_value("Content-Type");
    if (out.content_type.rfind("application/json", 0) == 0) {
      out.content_type = "application/json";
      try {
        out.body = json::parse(res->body);
      } catch (const json::exception&) {
        throw Error(ErrorCode::io_error, "server sent malformed JSON");
      }
    } else {
      out.raw = res->body;
    }
    return out;
  }
  double poll_interval() const override { return 0.2; }

 private:
  std::string base_;
};

ErrorCode code_from_name(const std::string& name) {
  for (auto c : kAllErrorCodes) {
    if (code_name(c) == name) return c;
  }
  return ErrorCode::io_error;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt_score(const json& v) {
  if (v.is_null()) return "-";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << v.get<double>();
  return ss.str();
}

std::string fmt_pct(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(0) << v * 100 << "%";
  return ss.str();
}

std::string sparkline(const json& counts) {
  static const char* levels[] = {" ", "▁", "▂", "▃", "▄", "▅", "▆", "▇", "█"};
  long peak = 0;
  for (const auto& c : counts) peak = std::max(peak, c.get<long>());
  std::string out;
  for (const auto& c : counts) {
    const long v = c.get<long>();
    int idx = peak == 0 || v == 0 ? 0 : static_cast<int>(1 + (v * 7) / peak);
    out += levels[std::min(idx, 8)];
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool is_active(const std::string& status) { return status == "running" || status == "pausing"; }

struct Context {
  Context(std::ostream& o, std::ostream& e) : out(o), err(e) {}
  std::ostream& out;
  std::ostream& err;
  bool json_out = false;
  std::string data_dir;
  std::string server;
  std::unique_ptr<Client> client;

  Client& api() {
    if (!client) client = server.empty() ? make_local_client(data_dir) : make_http_client(server);
    return *client;
  }
  bool local() const { return server.empty(); }

  json get(const std::string& path, std::map<std::string, std::string> query = {}) {
    return expect_ok(api().call({"GET", path, std::move(query), ""}));
  }
  json post(const std::string& path, const std::string& body, std::map<std::string, std::string> query = {}) {
    return expect_ok(api().call({"POST", path, std::move(query), body}));
  }

  /// Polls until the run leaves running; an interrupt pauses it.
  json wait_run(const std::string& id) {
    for (;;) {
      json run = get("/runs/" + id);
      if (!is_active(run.at("status").get<std::string>())) return run;
      if (g_interrupted) {
        post("/runs/" + id + "/commands", json{{"kind", "pause"}}.dump());
        while (is_active(run.at("status").get<std::string>())) {
          std::this_thread::sleep_for(std::chrono::duration<double>(api().poll_interval()));
          run = get("/runs/" + id);
        }
        throw Error(ErrorCode::io_error, "interrupted; " + id + " paused");
      }
      std::this_thread::sleep_for(std::chrono::duration<double>(api().poll_interval()));
    }
  }
};

void print_run_line(Context& cx, const json& run) {
  cx.out << run.at("id").get<std::string>() << "  " << run.at("status").get<std::string>() << "  trials "
         << run.at("latest_trial_id").get<long>();
  if (run.at("budget").contains("max_trials")) cx.out << "/" << run.at("budget").at("max_trials").get<long>();
  cx.out << "  best " << fmt_score(run.at("best_score")) << "\n";
  for (const auto& e : run.at("events")) {
    cx.out << "  trial " << e.at("trial_id").get<long>() << ": " << e.at("kind").get<std::string>() << " "
           << e.at("hyperpartition_id").get<std::string>() << "\n";
  }
}

void render_overview(Context& cx, const json& run, const json& summary) {
  print_run_line(cx, run);
  cx.out << "coverage  algorithms " << fmt_pct(summary.at("algorithm_coverage").get<double>())
         << "  hyperpartitions " << fmt_pct(summary.at("hyperpartition_coverage").get<double>()) << "\n";
  cx.out << "scores    [" << sparkline(summary.at("histogram")) << "]  0.0 .. 1.0  ok "
         << summary.at("n_ok").get<long>() << "  errors " << summary.at("n_errors").get<long>() << "\n";
  const auto& top = summary.at("top_models");
  if (!top.empty()) cx.out << "top models\n";
  for (const auto& m : top) {
    cx.out << "  " << std::setw(2) << m.at("rank").get<int>() << ". #" << std::left << std::setw(5)
           << m.at("trial_id").get<long>() << std::right << " " << fmt_score(m.at("score")) << "  "
           << m.at("hyperpartition_id").get<std::string>() << "\n";
  }
  cx.out.flush();
}

std::string command_body(const std::string& kind, const std::vector<std::string>& deltas,
                         std::optional<long> extend_trials, std::optional<double> extend_seconds) {
  json cmd = {{"kind", kind}};
  if (!deltas.empty()) {
    json list = json::array();
    for (const auto& d : deltas) {
      json parsed;
      try {
        parsed = json::parse(d);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_request, "--delta is not valid JSON: " + std::string(e.what()));
      }
      if (parsed.is_array()) {
        for (auto& x : parsed) list.push_back(x);
      } else {
        list.push_back(parsed);
      }
    }
    cmd["deltas"] = list;
  }
  if (extend_trials || extend_seconds) {
    json inc = json::object();
    if (extend_trials) inc["trials"] = *extend_trials;
    if (extend_seconds) inc["wall_clock_s"] = *extend_seconds;
    cmd["extend_budget"] = inc;
  }
  return cmd.dump();
}

struct RepeatResult {
  std::string run_id;
  std::uint64_t seed = 0;
  long trials = 0;
  json best;
};

}  // namespace

std::unique_ptr<Client> make_local_client(const std::string& data_dir) {
  return std::make_unique<LocalClient>(data_dir);
}

std::unique_ptr<Client> make_http_client(const std::string& base_url) {
  std::string base = base_url;
  if (base.find("://") == std::string::npos) base = "http://" + base;
  return std::make_unique<HttpClient>(base);
}

json expect_ok(const ApiResponse& r) {
  if (r.status >= 200 && r.status < 300) {
    if (r.content_type != "application/json") return r.raw;
    return r.body;
  }
  if (r.body.is_object() && r.body.contains("code")) {
    throw Error(code_from_name(r.body.at("code").get<std::string>()), r.body.value("message", std::string()),
                r.body.value("detail", json(nullptr)));
  }
  throw Error(ErrorCode::io_error, "HTTP " + std::to_string(r.status));
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context cx{out, err};
  cx.data_dir = env_or("STEER_DATA_DIR", "steer-data");
  cx.server = env_or("STEER_SERVER", "");

  CLI::App app{"steer: steerable AutoML search"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", cx.json_out, "Machine-readable JSON output");
  app.add_option("--data-dir", cx.data_dir, "Storage root for local mode (env STEER_DATA_DIR)");
  app.add_option("--server", cx.server, "Talk to a running server, e.g. http://127.0.0.1:8080 (env STEER_SERVER)");

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Manage datasets");
  dataset->require_subcommand(1);
  std::string csv_path, ds_name, ds_positive;
  auto* ds_add = dataset->add_subcommand("add", "Ingest a CSV (last column is the label)");
  ds_add->add_option("csv", csv_path, "CSV file")->required();
  ds_add->add_option("--name", ds_name, "Display name");
  ds_add->add_option("--positive", ds_positive, "Positive class label for binary F1");
  auto* ds_ls = dataset->add_subcommand("ls", "List datasets");
  std::size_t synth_n = 200, synth_d = 5;
  double synth_sep = 4.0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* ds_synth = dataset->add_subcommand("synth", "Write a two-Gaussian-blob CSV");
  ds_synth->add_option("--n", synth_n, "Rows")->capture_default_str();
  ds_synth->add_option("--d", synth_d, "Features")->capture_default_str();
  ds_synth->add_option("--separation", synth_sep, "Centre distance in standard deviations")->capture_default_str();
  ds_synth->add_option("--seed", synth_seed, "Seed")->capture_default_str();
  ds_synth->add_option("--out", synth_out, "Output file (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "Create and control runs");
  run->require_subcommand(1);
  std::string run_dataset, run_algorithms, run_metric = "f1_cv10", run_id, export_format = "jsonl", export_out;
  std::optional<long> budget_trials;
  std::optional<double> budget_seconds;
  std::uint64_t run_seed = 0;
  std::vector<std::string> deltas;
  std::optional<long> extend_trials;
  std::optional<double> extend_seconds;
  bool wait = false, once = false;
  double interval = 1.0;

  auto* r_start = run->add_subcommand("start", "Create a run and start it");
  r_start->add_option("--dataset", run_dataset, "Dataset id")->required();
  r_start->add_option("--budget-trials", budget_trials, "Trial budget (default 100)");
  r_start->add_option("--budget-seconds", budget_seconds, "Wall-clock budget in seconds");
  r_start->add_option("--seed", run_seed, "Run seed")->capture_default_str();
  r_start->add_option("--algorithms", run_algorithms, "Comma-separated algorithms to keep enabled");
  r_start->add_option("--metric", run_metric, "f1_cv<k>")->capture_default_str();
  r_start->add_option("--delta", deltas, "Initial space delta (JSON object or array); repeatable")->allow_extra_args(false);
  r_start->add_flag("--wait", wait, "With --server, block until the run stops");

  auto* r_ls = run->add_subcommand("ls", "List runs");
  auto* r_watch = run->add_subcommand("watch", "Render a refreshing overview");
  r_watch->add_option("id", run_id)->required();
  r_watch->add_option("--interval", interval, "Refresh seconds")->capture_default_str();
  r_watch->add_flag("--once", once, "Render once and exit");

  auto* r_pause = run->add_subcommand("pause", "Pause after the in-flight trial");
  r_pause->add_option("id", run_id)->required();
  auto* r_resume = run->add_subcommand("resume", "Resume a paused run");
  r_resume->add_option("id", run_id)->required();
  r_resume->add_option("--extend-trials", extend_trials, "Add trials to the budget");
  r_resume->add_option("--extend-seconds", extend_seconds, "Add seconds to the budget");
  r_resume->add_flag("--wait", wait, "With --server, block until the run stops");
  auto* r_stop = run->add_subcommand("stop", "Finish a run");
  r_stop->add_option("id", run_id)->required();
  auto* r_reconf = run->add_subcommand("reconfigure", "Apply search-space deltas");
  r_reconf->add_option("id", run_id)->required();
  r_reconf->add_option("--delta", deltas, "Space delta (JSON object or array); repeatable")->required()->allow_extra_args(false);
  r_reconf->add_option("--extend-trials", extend_trials, "Add trials to the budget");
  r_reconf->add_option("--extend-seconds", extend_seconds, "Add seconds to the budget");
  auto* r_export = run->add_subcommand("export", "Dump the trial log");
  r_export->add_option("id", run_id)->required();
  r_export->add_option("--format", export_format, "jsonl or csv")
      ->check(CLI::IsMember({"jsonl", "csv"}))
      ->capture_default_str();
  r_export->add_option("--out", export_out, "Output file (default stdout)");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Multi-run experiments");
  experiment->require_subcommand(1);
  int rep_n = 20, rep_parallel = 1;
  std::uint64_t seed_base = 0;
  std::string thresholds = "0.80,0.85,0.90,0.95";
  auto* repeat = experiment->add_subcommand("repeat", "Run N independent searches with seeds S..S+N-1");
  repeat->add_option("--n", rep_n, "Number of runs")->check(CLI::PositiveNumber)->capture_default_str();
  repeat->add_option("--dataset", run_dataset, "Dataset id")->required();
  repeat->add_option("--budget-trials", budget_trials, "Trial budget per run (default 100)");
  repeat->add_option("--seed-base", seed_base, "First seed")->capture_default_str();
  repeat->add_option("--algorithms", run_algorithms, "Comma-separated algorithms to keep enabled");
  repeat->add_option("--metric", run_metric, "f1_cv<k>")->capture_default_str();
  repeat->add_option("--thresholds", thresholds, "Comma-separated score thresholds")->capture_default_str();
  repeat->add_option("--parallel", rep_parallel, "Concurrent runs")->check(CLI::PositiveNumber)->capture_default_str();

  // serve
  std::string listen = env_or("STEER_LISTEN", "127.0.0.1:8080");
  auto* serve = app.add_subcommand("serve", "Start the HTTP API server");
  serve->add_option("--listen", listen, "host:port (env STEER_LISTEN)")->capture_default_str();

  std::vector<std::string> argv_store;
  argv_store.push_back("steer");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) {
      err << "run with --help for usage\n";
    }
    return 2;
  }

  g_interrupted = false;
  struct sigaction sa {}, previous {};
  sa.sa_handler = on_sigint;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, &previous);
  struct Restore {
    struct sigaction prev;
    ~Restore() { sigaction(SIGINT, &prev, nullptr); }
  } restore{previous};

  auto run_request = [&](std::uint64_t seed) {
    json req = {{"dataset_id", run_dataset}, {"seed", seed}, {"metric", run_metric}};
    json budget = json::object();
    if (budget_trials) budget["max_trials"] = *budget_trials;
    if (budget_seconds) budget["max_wall_clock_s"] = *budget_seconds;
    if (budget.empty()) budget["max_trials"] = 100;
    req["budget"] = budget;
    if (!run_algorithms.empty()) req["algorithms"] = split_list(run_algorithms);
    return req;
  };

  try {
    if (ds_add->parsed()) {
      std::map<std::string, std::string> q;
      q["name"] = ds_name.empty() ? std::filesystem::path(csv_path).stem().string() : ds_name;
      if (!ds_positive.empty()) q["positive"] = ds_positive;
      json d = cx.post("/datasets", read_input(csv_path), q);
      if (cx.json_out) {
        out << d.dump(2) << "\n";
      } else {
        out << d.at("id").get<std::string>() << "  n=" << d.at("n") << "  d=" << d.at("d")
            << "  classes=" << d.at("classes").dump() << "  positive=" << d.at("positive_class").get<std::string>()
            << "\n";
      }
    } else if (ds_ls->parsed()) {
      json list = cx.get("/datasets").at("datasets");
      if (cx.json_out) {
        out << list.dump(2) << "\n";
      } else {
        out << std::left << std::setw(22) << "ID" << std::setw(20) << "NAME" << std::setw(8) << "N"
            << std::setw(6) << "D" << "CLASSES\n";
        for (const auto& d : list) {
          out << std::setw(22) << d.at("id").get<std::string>() << std::setw(20) << d.at("name").get<std::string>()
              << std::setw(8) << d.at("n").get<long>() << std::setw(6) << d.at("d").get<long>()
              << d.at("classes").dump() << "\n";
        }
        out << std::right;
      }
    } else if (ds_synth->parsed()) {
      if (synth_n < 4 || synth_d < 1) throw Error(ErrorCode::invalid_request, "need --n >= 4 and --d >= 1");
      const std::string csv = to_csv(make_blobs(synth_n, synth_d, synth_sep, synth_seed));
      if (synth_out.empty()) {
        out << csv;
      } else {
        std::ofstream f(synth_out, std::ios::binary);
        if (!(f << csv)) throw Error(ErrorCode::io_error, "cannot write " + synth_out);
        if (!cx.json_out) out << synth_out << "\n";
      }
      if (cx.json_out && !synth_out.empty()) out << json{{"path", synth_out}, {"n", synth_n}, {"d", synth_d}}.dump() << "\n";
    } else if (r_start->parsed() || r_resume->parsed()) {
      std::string id = run_id;
      if (r_start->parsed()) {
        if (!deltas.empty()) {
          json req = run_request(run_seed);
          req["deltas"] = json::parse(command_body("reconfigure", deltas, std::nullopt, std::nullopt)).at("deltas");
          id = cx.post("/runs", req.dump()).at("id").get<std::string>();
        } else {
          id = cx.post("/runs", run_request(run_seed).dump()).at("id").get<std::string>();
        }
        if (!cx.json_out) out << id << std::endl;
        cx.post("/runs/" + id + "/commands", command_body("start", {}, std::nullopt, std::nullopt));
      } else {
        json res = cx.post("/runs/" + id + "/commands", command_body("resume", {}, extend_trials, extend_seconds));
        if (!cx.json_out) out << id << "  " << res.at("status").get<std::string>() << std::endl;
      }
      json final_run = (cx.local() || wait) ? cx.wait_run(id) : cx.get("/runs/" + id);
      if (cx.json_out) {
        out << final_run.dump(2) << "\n";
      } else {
        print_run_line(cx, final_run);
      }
    } else if (r_ls->parsed()) {
      json runs = cx.get("/runs").at("runs");
      if (cx.json_out) {
        out << runs.dump(2) << "\n";
      } else {
        for (const auto& r : runs) print_run_line(cx, r);
      }
    } else if (r_watch->parsed()) {
      for (;;) {
        json r = cx.get("/runs/" + run_id);
        json summary = cx.get("/runs/" + run_id + "/summary", {{"top_k", "5"}});
        if (cx.json_out) {
          out << json{{"run", r}, {"summary", summary}}.dump() << std::endl;
        } else {
          render_overview(cx, r, summary);
        }
        if (once || !is_active(r.at("status").get<std::string>()) || g_interrupted) break;
        if (!cx.json_out) out << "\n";
        std::this_thread::sleep_for(std::chrono::duration<double>(std::max(0.01, interval)));
      }
    } else if (r_pause->parsed() || r_stop->parsed() || r_reconf->parsed()) {
      const std::string kind = r_pause->parsed() ? "pause" : r_stop->parsed() ? "stop" : "reconfigure";
      json res = cx.post("/runs/" + run_id + "/commands", command_body(kind, deltas, extend_trials, extend_seconds));
      if (cx.json_out) {
        out << res.dump(2) << "\n";
      } else {
        out << run_id << "  " << res.at("status").get<std::string>();
        if (kind == "reconfigure") out << "  space_version " << res.at("run").at("space_version").get<int>();
        out << "\n";
      }
    } else if (r_export->parsed()) {
      std::string payload;
      if (export_format == "jsonl") {
        payload = cx.get("/runs/" + run_id + "/log").get<std::string>();
      } else {
        json trials = cx.get("/runs/" + run_id + "/trials", {{"since", "0"}}).at("trials");
        std::set<std::string> names;
        for (const auto& t : trials) {
          for (const auto& [k, v] : t.at("config").items()) names.insert(k);
        }
        std::ostringstream ss;
        ss << "trial_id,algorithm,hyperpartition_id,status,score,elapsed_s,space_version";
        for (const auto& n : names) ss << "," << csv_field(n);
        ss << "\n";
        ss << std::setprecision(17);
        for (const auto& t : trials) {
          ss << t.at("trial_id").get<long>() << "," << csv_field(t.at("algorithm").get<std::string>()) << ","
             << csv_field(t.at("hyperpartition_id").get<std::string>()) << "," << t.at("status").get<std::string>()
             << ",";
          if (!t.at("score").is_null()) ss << t.at("score").get<double>();
          ss << "," << t.at("elapsed_s").get<double>() << "," << t.at("space_version").get<int>();
          for (const auto& n : names) {
            ss << ",";
            if (t.at("config").contains(n)) ss << t.at("config").at(n).get<double>();
          }
          ss << "\n";
        }
        payload = ss.str();
      }
      if (export_out.empty()) {
        out << payload;
      } else {
        std::ofstream f(export_out, std::ios::binary);
        if (!(f << payload)) throw Error(ErrorCode::io_error, "cannot write " + export_out);
      }
    } else if (repeat->parsed()) {
      std::vector<double> cuts;
      for (const auto& t : split_list(thresholds)) {
        try {
          cuts.push_back(std::stod(t));
        } catch (...) {
          throw Error(ErrorCode::invalid_request, "bad threshold '" + t + "'");
        }
      }
      std::vector<RepeatResult> results(static_cast<std::size_t>(rep_n));
      std::mutex m;
      std::optional<Error> failure;
      std::atomic<int> next{0};
      cx.api();
      auto worker = [&] {
        std::unique_ptr<Client> own;
        Client* client = cx.client.get();
        if (!cx.local()) {
          own = make_http_client(cx.server);
          client = own.get();
        }
        for (int i = next++; i < rep_n; i = next++) {
          try {
            {
              std::lock_guard lk(m);
              if (failure) return;
            }
            const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(i);
            auto call = [&](const std::string& method, const std::string& path, const std::string& body) {
              return expect_ok(client->call({method, path, {}, body}));
            };
            const std::string id = call("POST", "/runs", run_request(seed).dump()).at("id").get<std::string>();
            call("POST", "/runs/" + id + "/commands", json{{"kind", "start"}}.dump());
            json r;
            for (;;) {
              r = call("GET", "/runs/" + id, "");
              if (!is_active(r.at("status").get<std::string>())) break;
              if (g_interrupted) {
                call("POST", "/runs/" + id + "/commands", json{{"kind", "pause"}}.dump());
                throw Error(ErrorCode::io_error, "interrupted");
              }
              std::this_thread::sleep_for(std::chrono::duration<double>(client->poll_interval()));
            }
            results[static_cast<std::size_t>(i)] = {id, seed, r.at("latest_trial_id").get<long>(), r.at("best_score")};
          } catch (const Error& e) {
            std::lock_guard lk(m);
            if (!failure) failure = e;
            return;
          }
        }
      };
      std::vector<std::thread> pool;
      for (int p = 0; p < std::min(rep_parallel, rep_n); ++p) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      if (failure) throw *failure;

      std::vector<double> bests;
      for (const auto& r : results) {
        if (!r.best.is_null()) bests.push_back(r.best.get<double>());
      }
      std::vector<double> sorted = bests;
      std::sort(sorted.begin(), sorted.end());
      auto median = [&]() -> json {
        if (sorted.empty()) return nullptr;
        const std::size_t h = sorted.size() / 2;
        return sorted.size() % 2 ? sorted[h] : (sorted[h - 1] + sorted[h]) / 2;
      };
      json table = json::array();
      for (double c : cuts) {
        const long count = std::count_if(bests.begin(), bests.end(), [&](double b) { return b > c; });
        table.push_back({{"threshold", c}, {"runs_over", count}, {"n", rep_n}});
      }
      if (cx.json_out) {
        json runs = json::array();
        for (const auto& r : results) {
          runs.push_back({{"run_id", r.run_id}, {"seed", r.seed}, {"trials", r.trials}, {"best_score", r.best}});
        }
        json dist = {{"min", sorted.empty() ? json(nullptr) : json(sorted.front())},
                     {"median", median()},
                     {"max", sorted.empty() ? json(nullptr) : json(sorted.back())}};
        out << json{{"runs", runs}, {"best_scores", dist}, {"thresholds", table}}.dump(2) << "\n";
      } else {
        out << std::left << std::setw(12) << "RUN" << std::setw(8) << "SEED" << std::setw(8) << "TRIALS"
            << "BEST\n";
        for (const auto& r : results) {
          out << std::setw(12) << r.run_id << std::setw(8) << r.seed << std::setw(8) << r.trials
              << fmt_score(r.best) << "\n";
        }
        out << std::right << "\nbest score over " << rep_n << " runs: min "
            << fmt_score(sorted.empty() ? json(nullptr) : json(sorted.front())) << "  median " << fmt_score(median())
            << "  max " << fmt_score(sorted.empty() ? json(nullptr) : json(sorted.back())) << "\n\n";
        out << "THRESHOLD  RUNS OVER\n";
        for (const auto& row : table) {
          out << std::fixed << std::setprecision(2) << row.at("threshold").get<double>() << "       "
              << row.at("runs_over").get<long>() << "/" << rep_n << "\n";
        }
        out.unsetf(std::ios::fixed);
      }
    } else if (serve->parsed()) {
      const ListenAddress addr = parse_listen(listen);
      Workspace ws(cx.data_dir);
      for (const auto& w : ws.warnings()) err << "warning: " << w << "\n";
      Api api(ws);
      HttpServer server(api);
      const int port = server.bind(addr);
      server.start();
      out << "listening on " << addr.host << ":" << port << "  data " << cx.data_dir << std::endl;
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      err << "shutting down: pausing runs\n";
      server.stop();
      ws.shutdown();
    }
  } catch (const Error& e) {
    err << "error [" << code_name(e.code()) << "]: " << e.what() << "\n";
    if (!e.detail().is_null()) err << "  detail: " << e.detail().dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace steer

#include "steer/api.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "steer/summarizer.hpp"

namespace steer {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::invalid_request, std::string("malformed JSON body: ") + e.what());
  }
}

std::optional<std::string> param(const ApiRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

std::string required(const ApiRequest& r, const std::string& key) {
  auto v = param(r, key);
  if (!v || v->empty()) throw Error(ErrorCode::invalid_request, "query parameter '" + key + "' is required");
  return *v;
}

long int_param(const ApiRequest& r, const std::string& key, long fallback, long min_value) {
  auto v = param(r, key);
  if (!v) return fallback;
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(*v, &used);
  } catch (...) {
    used = 0;
  }
  if (used == 0 || used != v->size() || out < min_value) {
    throw Error(ErrorCode::invalid_request, "query parameter '" + key + "' must be an integer >= " +
                                                std::to_string(min_value));
  }
  return out;
}

ApiResponse ok(json body, int status = 200) {
  ApiResponse r;
  r.status = status;
  r.body = std::move(body);
  return r;
}

[[noreturn]] void not_found(const ApiRequest& r) {
  throw Error(ErrorCode::not_found, "no route for " + r.method + " " + r.path,
              json{{"method", r.method}, {"path", r.path}});
}

}  // namespace

json error_body(const Error& e) {
  return {{"status", http_status(e.code())},
          {"code", code_name(e.code())},
          {"message", e.what()},
          {"detail", e.detail()}};
}

ApiResponse Api::handle(const ApiRequest& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    return ok(error_body(e), http_status(e.code()));
  } catch (const json::exception& e) {
    Error err(ErrorCode::invalid_request, e.what());
    return ok(error_body(err), http_status(err.code()));
  }
}

ApiResponse Api::route(const ApiRequest& r) {
  const auto parts = split_path(r.path);
  const bool get = r.method == "GET";
  const bool post = r.method == "POST";
  const std::size_t n = parts.size();

  if (n == 1 && parts[0] == "health" && get) return ok({{"ok", true}});

  if (n >= 1 && parts[0] == "datasets") {
    if (n == 1 && get) return ok({{"datasets", ws_.list_datasets()}});
    if (n == 1 && post) {
      std::optional<std::string> positive = param(r, "positive");
      return ok(ws_.add_dataset(r.body, param(r, "name").value_or(""), positive), 201);
    }
    if (n == 2 && get) return ok(describe(*ws_.dataset(parts[1])));
    not_found(r);
  }

  if (n == 0 || parts[0] != "runs") not_found(r);
  if (n == 1 && get) {
    json runs = json::array();
    for (const auto& c : ws_.runs()) runs.push_back(c->snapshot()->descriptor());
    return ok({{"runs", runs}});
  }
  if (n == 1 && post) return ok(ws_.create_run(parse_body(r.body))->snapshot()->descriptor(), 201);

  auto ctl = ws_.run(parts[1]);
  if (n == 2 && get) return ok(ctl->snapshot()->descriptor());
  const std::string& leaf = parts[2];

  if (n == 3 && leaf == "commands" && post) {
    json body = parse_body(r.body);
    if (body.is_object() && body.contains("delta") && !body.contains("deltas")) {
      body["deltas"] = body["delta"];
      body.erase("delta");
    }
    auto snap = ctl->command(command_from_json(body));
    return ok({{"status", snap->status()}, {"run", snap->descriptor()}});
  }
  if (n == 3 && leaf == "log" && get) {
    std::ifstream in(ctl->log_path(), std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read log for " + ctl->id());
    std::ostringstream ss;
    ss << in.rdbuf();
    ApiResponse resp;
    resp.raw = ss.str();
    resp.content_type = "application/x-ndjson";
    return resp;
  }
  if (!get) not_found(r);

  const auto snap = ctl->snapshot();
  if (n == 3 && leaf == "trials") {
    const long since = int_param(r, "since", 0, 0);
    json trials = json::array();
    for (const auto& t : snap->trials) {
      if (t.trial_id > since) trials.push_back(to_json(t));
    }
    return ok({{"trials", trials}, {"latest_trial_id", static_cast<long>(snap->trials.size())}});
  }
  if (n == 3 && leaf == "space") {
    json hps = json::array();
    for (const auto& hp : snap->info.space.hyperpartitions()) {
      json h = to_json(hp);
      h["enabled"] = snap->info.space.effectively_enabled(hp.id);
      hps.push_back(std::move(h));
    }
    return ok({{"space_version", snap->info.space_version},
               {"space", to_json(snap->info.space)},
               {"hyperpartitions", hps}});
  }
  if (leaf != "summary") not_found(r);
  const auto& trials = snap->trials;
  const auto& space = snap->info.space;
  if (n == 3) return ok(to_json(overview(trials, space, static_cast<int>(int_param(r, "top_k", 10, 1)))));
  if (n != 4) not_found(r);
  const std::string& view = parts[3];
  if (view == "algorithms") {
    json out = json::array();
    for (const auto& s : algorithm_summaries(trials, space)) out.push_back(to_json(s));
    return ok({{"algorithms", out}});
  }
  if (view == "hyperpartitions") {
    const auto algo = required(r, "algorithm");
    json out = json::array();
    for (const auto& s : hyperpartition_summaries(trials, space, algo)) out.push_back(to_json(s));
    return ok({{"algorithm", algo}, {"hyperpartitions", out}});
  }
  if (view == "scatter") {
    return ok(to_json(scatter(trials, space, required(r, "scope"), required(r, "hyperparameter"))));
  }
  if (view == "focus") return ok(to_json(focus_filter(trials, space, static_cast<int>(int_param(r, "top_k", 10, 1)))));
  if (view == "full") return ok(full_summary(trials, space, static_cast<int>(int_param(r, "top_k", 10, 1))));
  not_found(r);
}

}  // namespace steer

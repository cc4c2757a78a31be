#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "steer/error.hpp"
#include "steer/workspace.hpp"

namespace steer {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  // Non-JSON payloads (log export) set raw and content_type.
  std::string raw;
  std::string content_type = "application/json";

  std::string text() const { return content_type == "application/json" ? body.dump() : raw; }
};

/// {"status", "code", "message", "detail"}
nlohmann::json error_body(const Error& e);

/// Transport-independent router over a Workspace. Thread-safe.
class Api {
 public:
  explicit Api(Workspace& workspace) : ws_(workspace) {}

  ApiResponse handle(const ApiRequest& request);

 private:
  ApiResponse route(const ApiRequest& request);
  Workspace& ws_;
};

}  // namespace steer

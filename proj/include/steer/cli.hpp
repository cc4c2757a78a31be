#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "steer/api.hpp"

namespace steer {

/// Transport a CLI verb talks through: an embedded workspace or a remote server.
class Client {
 public:
  virtual ~Client() = default;
  virtual ApiResponse call(const ApiRequest& request) = 0;
  /// Seconds between status polls while waiting on a run.
  virtual double poll_interval() const = 0;
};

std::unique_ptr<Client> make_local_client(const std::string& data_dir);
std::unique_ptr<Client> make_http_client(const std::string& base_url);

/// Throws the Error carried by a non-2xx response.
nlohmann::json expect_ok(const ApiResponse& response);

/// Entry point; returns the process exit code (0 ok, 1 runtime error, 2 usage).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace steer

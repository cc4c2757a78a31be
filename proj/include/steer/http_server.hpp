#pragma once

#include <memory>
#include <string>
#include <thread>

#include "steer/api.hpp"

namespace httplib {
class Server;
}

namespace steer {

struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Parses "host:port", ":port" or "port"; throws Error(invalid_request).
ListenAddress parse_listen(const std::string& spec);

/// HTTP/1.1 transport for Api.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();

  /// Binds the socket; port 0 picks a free port. Returns the bound port.
  /// Throws Error(io_error) when the address is unavailable.
  int bind(const ListenAddress& address);
  /// Serves until stop(); blocking.
  void serve();
  /// serve() on a background thread.
  void start();
  void stop();

 private:
  Api& api_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace steer

#include "steer/http_server.hpp"

#include <httplib.h>

namespace steer {

ListenAddress parse_listen(const std::string& spec) {
  ListenAddress a;
  std::string port = spec;
  if (auto colon = spec.rfind(':'); colon != std::string::npos) {
    if (colon > 0) a.host = spec.substr(0, colon);
    port = spec.substr(colon + 1);
  }
  std::size_t used = 0;
  try {
    a.port = std::stoi(port, &used);
  } catch (...) {
    used = 0;
  }
  if (used == 0 || used != port.size() || a.port < 0 || a.port > 65535) {
    throw Error(ErrorCode::invalid_request, "bad listen address '" + spec + "' (want host:port)");
  }
  return a;
}

HttpServer::HttpServer(Api& api) : api_(api), server_(std::make_unique<httplib::Server>()) {
  // The library default adds SO_REUSEPORT, which lets a second server share
  // an occupied port instead of failing.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.body = req.body;
    const ApiResponse out = api_.handle(r);
    res.status = out.status;
    res.set_content(out.text(), out.content_type);
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Put(".*", handler);
  server_->Delete(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const ListenAddress& address) {
  int port = address.port;
  if (port == 0) {
    port = server_->bind_to_any_port(address.host);
    if (port < 0) port = 0;
  } else if (!server_->bind_to_port(address.host, port)) {
    port = 0;
  }
  if (port == 0) {
    throw Error(ErrorCode::io_error,
                "cannot listen on " + address.host + ":" + std::to_string(address.port) +
                    " (address in use or unavailable)");
  }
  return port;
}

void HttpServer::serve() { server_->listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { serve(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace steer

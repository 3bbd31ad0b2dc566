#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <thread>

#include "hexmem/app/config.hpp"
#include "hexmem/app/session_service.hpp"

namespace httplib {
class Server;
}

namespace hexmem::app {

// JSON over HTTP:
//   POST /sessions                {"method": "rule2", "client": {...}}
//   POST /sessions/{id}/recall    {"clicks": [3, 8, ...]}
//   GET  /sessions/{id}/summary
//   GET  /healthz
// Errors carry {"error": {"code": ..., "message": ...}} with status 400
// (protocol violation), 404 (unknown session), 409 (finished session) or
// 503 (rl requested without a policy).
void register_routes(httplib::Server& server, SessionService& service);

class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws ConfigError
  // when binding fails.
  int bind(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void run();
  // Serves on a background thread.
  void start();
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

// Loads resources, restores logged sessions and serves until SIGINT or
// SIGTERM.
void serve(const AppConfig& config, std::ostream& log);

}  // namespace hexmem::app

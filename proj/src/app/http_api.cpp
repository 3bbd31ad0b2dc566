#include "hexmem/app/http_api.hpp"

#include <pthread.h>

#include <csignal>
#include <ostream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hexmem/errors.hpp"

namespace hexmem::app {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), kJson);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw ServiceError(400, "bad_request", "request body must be a JSON object");
  }
  return body;
}

// Runs `fn` and maps library failures onto API errors.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    send_error(res, e.status(), e.code(), e.what());
  } catch (const ProtocolError& e) {
    send_error(res, 400, "protocol_error", e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "bad_request", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal_error", e.what());
  }
}

}  // namespace

void register_routes(httplib::Server& server, SessionService& service) {
  server.Get("/healthz", [&service](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"},
                         {"sessions", service.session_count()},
                         {"policy_loaded", service.has_policy()}}
                        .dump(),
                    kJson);
  });

  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const auto method = body.find("method");
      if (method == body.end() || !method->is_string()) {
        throw ServiceError(400, "bad_request", "body needs a string field \"method\"");
      }
      std::optional<std::string> client;
      if (auto it = body.find("client"); it != body.end() && !it->is_null()) client = it->dump();
      const CreatedSession created = service.create_session(method->get<std::string>(), client);
      res.status = 201;
      res.set_content(json(created).dump(), kJson);
    });
  });

  server.Post(R"(/sessions/([0-9A-Za-z_-]+)/recall)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const json body = parse_body(req);
                  const auto clicks = body.find("clicks");
                  if (clicks == body.end() || !clicks->is_array()) {
                    throw ServiceError(400, "bad_request", "body needs an array field \"clicks\"");
                  }
                  std::vector<CellIndex> cells;
                  for (const auto& c : *clicks) {
                    if (!c.is_number_integer()) {
                      throw ServiceError(400, "bad_request", "clicks must be cell indices");
                    }
                    cells.push_back(c.get<CellIndex>());
                  }
                  // Any score the client sends along is ignored.
                  const RecallResult result = service.submit_recall(req.matches[1], cells);
                  res.set_content(json(result).dump(), kJson);
                });
              });

  server.Get(R"(/sessions/([0-9A-Za-z_-]+)/summary)",
             [&service](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 res.set_content(json(service.summary(req.matches[1])).dump(), kJson);
               });
             });

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "http_error",
                 httplib::status_message(res.status));
    }
  });
}

HttpServer::HttpServer(SessionService& service) : server_(std::make_unique<httplib::Server>()) {
  register_routes(*server_, service);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw ConfigError("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::stop() {
  if (server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void serve(const AppConfig& config, std::ostream& log) {
  ServiceOptions options;
  options.data_dir = config.data_dir;
  options.controller = config.controller;
  options.reward = config.reward;
  options.trials = config.trials;

  log << "loading resources" << std::endl;
  SessionService service(load_resources(config), options);
  log << "restored " << service.session_count() << " sessions from " << config.data_dir.string()
      << (service.has_policy() ? "" : "; rl method disabled (no policy)") << std::endl;

  // Signals are taken synchronously by a watcher thread instead of a handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  HttpServer server(service);
  const int port = server.bind(config.host, config.port);
  log << "listening on " << config.host << ":" << port << std::endl;
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  // Wakes the watcher if the server ended on its own.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  log << "stopped" << std::endl;
}

}  // namespace hexmem::app

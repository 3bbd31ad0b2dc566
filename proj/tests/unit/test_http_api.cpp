#include <doctest.h>

#include <filesystem>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hexmem/app/http_api.hpp"

using namespace hexmem;
using namespace hexmem::app;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ServiceResources resources(bool with_policy) {
  static const auto model = std::make_shared<const DifficultyModel>();
  static const auto db =
      std::make_shared<const TaskDatabase>(TaskDatabase::build(*model, {1000, 5, 0.25}));
  return {model, db,
          with_policy ? std::make_shared<const rl::PolicyParams>(rl::PolicyParams::initialize(3))
                      : nullptr};
}

struct LiveServer {
  explicit LiveServer(bool with_policy = true)
      : dir(fs::temp_directory_path() / ("hexmem_http_" + std::to_string(with_policy))),
        service((fs::remove_all(dir), resources(with_policy)), [&] {
          ServiceOptions o;
          o.data_dir = dir;
          o.seed = 4;
          return o;
        }()),
        server(service),
        port(server.bind("127.0.0.1", 0)),
        client("127.0.0.1", port) {
    server.start();
  }

  json post(const std::string& path, const std::string& body, int expected_status) {
    auto res = client.Post(path, body, "application/json");
    REQUIRE(res);
    CHECK(res->status == expected_status);
    CHECK(res->get_header_value("Content-Type") == "application/json");
    return json::parse(res->body);
  }

  json get(const std::string& path, int expected_status) {
    auto res = client.Get(path);
    REQUIRE(res);
    CHECK(res->status == expected_status);
    return json::parse(res->body);
  }

  fs::path dir;
  SessionService service;
  HttpServer server;
  int port;
  httplib::Client client;
};

std::string error_code(const json& body) { return body.at("error").at("code").get<std::string>(); }

}  // namespace

TEST_CASE("health check") {
  LiveServer live;
  const json h = live.get("/healthz", 200);
  CHECK(h["status"] == "ok");
  CHECK(h["policy_loaded"] == true);
}

TEST_CASE("full session over HTTP") {
  LiveServer live;
  const json created = live.post("/sessions", R"({"method":"rule2","client":{"ua":"test"}})", 201);
  const std::string id = created["session_id"];
  CHECK(created["method"] == "rule2");
  CHECK(created["layout"]["offset"] == "odd-r");
  CHECK(created["layout"]["rows"] == 6);
  CHECK(created["trial"]["memorize_ms"] == 2000);
  CHECK(created["trial"]["trial"] == 1);
  CHECK(std::abs(created["trial"]["difficulty"].get<double>() - 0.5) <= 0.01);

  json trial = created["trial"];
  for (int t = 1; t <= 20; ++t) {
    json body{{"clicks", trial["targets"]}, {"score", 0.0}};  // client score is ignored
    const json r = live.post("/sessions/" + id + "/recall", body.dump(), 200);
    CHECK(r["trial"] == t);
    CHECK(r["score"] == 1.0);
    for (const auto& f : r["correct_flags"]) CHECK(f == true);
    if (t < 20) {
      CHECK(r["finished"] == false);
      CHECK(r["summary"].is_null());
      trial = r["next"];
    } else {
      CHECK(r["finished"] == true);
      CHECK(r["next"].is_null());
      CHECK(r["summary"]["win_rate"] == 1.0);
    }
  }
  const json sum = live.get("/sessions/" + id + "/summary", 200);
  CHECK(sum["completed_trials"] == 20);
  CHECK(sum["mean_score"] == 1.0);
  CHECK(sum["difficulties"].size() == 20);
  CHECK(sum["decline_defined"] == false);
  CHECK(sum["decline"].is_null());

  const json again =
      live.post("/sessions/" + id + "/recall", json{{"clicks", trial["targets"]}}.dump(), 409);
  CHECK(error_code(again) == "session_finished");
}

TEST_CASE("error responses") {
  LiveServer live;
  CHECK(error_code(live.post("/sessions", R"({"method":"rule9"})", 400)) == "unknown_method");
  CHECK(error_code(live.post("/sessions", R"({})", 400)) == "bad_request");
  CHECK(error_code(live.post("/sessions", "not json", 400)) == "bad_request");
  CHECK(error_code(live.post("/sessions/abc/recall", R"({"clicks":[1,2,3,4]})", 404)) ==
        "unknown_session");
  CHECK(error_code(live.get("/sessions/abc/summary", 404)) == "unknown_session");

  const json created = live.post("/sessions", R"({"method":"rule1"})", 201);
  const std::string path = "/sessions/" + created["session_id"].get<std::string>() + "/recall";
  auto targets = created["trial"]["targets"];
  json short_clicks = targets;
  short_clicks.erase(short_clicks.size() - 1);
  CHECK(error_code(live.post(path, json{{"clicks", short_clicks}}.dump(), 400)) ==
        "wrong_click_count");
  json dup = targets;
  dup[1] = dup[0];
  CHECK(error_code(live.post(path, json{{"clicks", dup}}.dump(), 400)) == "duplicate_click");
  CHECK(error_code(live.post(path, R"({"clicks":"1,2"})", 400)) == "bad_request");
  CHECK(error_code(live.post(path, R"({"clicks":[1.5]})", 400)) == "bad_request");

  auto res = live.client.Get("/nowhere");
  REQUIRE(res);
  CHECK(res->status == 404);
}

TEST_CASE("rl sessions need a policy") {
  LiveServer live(false);
  CHECK(error_code(live.post("/sessions", R"({"method":"rl"})", 503)) == "policy_unavailable");
  CHECK(live.get("/healthz", 200)["policy_loaded"] == false);
}

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "a2l/backend/http.hpp"
#include "a2l/backend/mock.hpp"
#include "support.hpp"

using namespace a2l;
using namespace a2l::backend;
using a2l::testing::kind_of;
using nlohmann::json;

namespace {

MockEntry says(std::string text, std::string match = {}) {
  MockEntry e;
  e.match = std::move(match);
  e.response = std::move(text);
  return e;
}

MockEntry fails(ErrorKind k) {
  MockEntry e;
  e.failure = MockFailure{k, "scripted"};
  return e;
}

ChatRequest ask(const std::string& text) {
  ChatRequest r;
  r.messages = {Message::user(text)};
  return r;
}

// Loopback server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  LocalServer() {
    port_ = svr.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
  }
  void start() {
    thread_ = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~LocalServer() {
    svr.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  httplib::Server svr;

 private:
  int port_ = 0;
  std::thread thread_;
};

std::string chat_reply(const std::string& text) {
  return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}, {"finish_reason", "stop"}}}},
              {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}}
      .dump();
}

}  // namespace

TEST_CASE("mock routes by match and consumes entries in order") {
  auto m = make_mock({says("first", "alpha"), says("second", "alpha"), says("any")});
  CHECK(m.client->complete(ask("alpha one")).text == "first");
  CHECK(m.client->complete(ask("beta")).text == "any");
  CHECK(m.client->complete(ask("alpha two")).text == "second");
  CHECK(kind_of([&] { m.client->complete(ask("alpha three")); }) == ErrorKind::ScriptExhausted);
  CHECK(m.transport->calls() == 3);
}

TEST_CASE("repeating entries and latency") {
  auto e = says("again");
  e.repeat = true;
  e.latency_s = 1.5;
  auto m = make_mock({e});
  for (int i = 0; i < 4; ++i) CHECK(m.client->complete(ask("x")).text == "again");
  CHECK(m.clock->now() == doctest::Approx(6.0));
}

TEST_CASE("mock scripts load from JSON") {
  const auto script = MockTransport::parse_script(R"({"entries": [
    {"match": "a", "response": "r", "latency_s": 0.5, "repeat": true},
    {"failure": "rate_limited", "message": "slow down"},
    {"logprob_per_token": -2.0}
  ]})");
  REQUIRE(script.size() == 3);
  CHECK(script[0].repeat);
  CHECK(script[1].failure->kind == ErrorKind::RateLimited);
  CHECK(*script[2].logprob_per_token == -2.0);
  CHECK(MockTransport::parse_script(R"([{"response": "bare"}])").size() == 1);
}

TEST_CASE("transient failures are retried with exponential backoff") {
  auto m = make_mock({fails(ErrorKind::ServerError), fails(ErrorKind::Timeout), says("ok")});
  const auto r = m.client->complete(ask("x"));
  CHECK(r.text == "ok");
  CHECK(r.attempts == 3);
  CHECK(m.client->backoff_history() == std::vector<double>{1.0, 2.0});
  CHECK(m.clock->total_slept() == doctest::Approx(3.0));
}

TEST_CASE("retries stop at max_retries") {
  BackendConfig cfg;
  cfg.max_retries = 2;
  auto m = make_mock({fails(ErrorKind::RateLimited), fails(ErrorKind::RateLimited), fails(ErrorKind::RateLimited),
                      says("never")},
                     cfg);
  CHECK(kind_of([&] { m.client->complete(ask("x")); }) == ErrorKind::RateLimited);
  CHECK(m.transport->calls() == 3);
}

TEST_CASE("permanent failures are not retried") {
  auto m = make_mock({fails(ErrorKind::Unauthorized), says("never")});
  CHECK(kind_of([&] { m.client->complete(ask("x")); }) == ErrorKind::Unauthorized);
  CHECK(m.transport->calls() == 1);
}

TEST_CASE("backoff is capped") {
  BackendConfig cfg;
  cfg.backoff_base_s = 2.0;
  cfg.backoff_max_s = 10.0;
  CHECK(backoff_delay(cfg, 0) == 2.0);
  CHECK(backoff_delay(cfg, 2) == 8.0);
  CHECK(backoff_delay(cfg, 3) == 10.0);
  CHECK(backoff_delay(cfg, 30) == 10.0);
}

TEST_CASE("rate limiter holds a sliding one-minute window") {
  auto clock = std::make_shared<VirtualClock>();
  RateLimiter rl(2, clock);
  rl.acquire();
  clock->advance(10);
  rl.acquire();
  rl.acquire();
  rl.acquire();
  const auto issued = rl.issued();
  REQUIRE(issued.size() == 4);
  CHECK(issued[0] == 0.0);
  CHECK(issued[1] == 10.0);
  CHECK(issued[2] == doctest::Approx(60.0));
  CHECK(issued[3] == doctest::Approx(70.0));
}

TEST_CASE("capabilities are enforced before sending") {
  BackendConfig cfg;
  cfg.caps.images = false;
  auto m = make_mock({says("x")}, cfg);
  ChatRequest r;
  r.messages = {Message{Role::User, {TextPart{"look"}, ImagePart{"a.jpg"}}}};
  CHECK(kind_of([&] { m.client->complete(r); }) == ErrorKind::CapabilityMissing);
  CHECK(kind_of([&] { m.client->score_completion({Message::user("p")}, "c"); }) == ErrorKind::CapabilityMissing);
  CHECK(m.transport->calls() == 0);
}

TEST_CASE("request validation") {
  auto m = make_mock({says("x")});
  ChatRequest r = ask("x");
  r.top_p = 0.0;
  CHECK(kind_of([&] { m.client->complete(r); }) == ErrorKind::Precondition);
  CHECK(kind_of([&] { m.client->complete(ChatRequest{}); }) == ErrorKind::Precondition);
}

TEST_CASE("mock scoring") {
  BackendConfig cfg;
  cfg.caps.logprobs = true;
  MockEntry e;
  e.logprobs = {-1.0, -2.0, -3.0};
  auto m = make_mock({e}, cfg);
  const auto s = m.client->score_completion({Message::user("p")}, "a b c");
  CHECK(s.mean == doctest::Approx(-2.0));
}

TEST_CASE("virtual clock timestamps") {
  VirtualClock c;
  CHECK(c.wall_timestamp() == "2025-01-01T00:00:00Z");
  c.advance(3661.4);
  CHECK(c.wall_timestamp() == "2025-01-01T01:01:01Z");
  CHECK(format_utc(0) == "1970-01-01T00:00:00Z");
}

TEST_CASE("chat wire mapping") {
  ChatRequest r;
  r.model = "m";
  r.temperature = 0.5;
  r.top_p = 0.95;
  r.seed = 3;
  r.messages = {Message{Role::User, {TextPart{"hi"}, ImagePart{"https://x/y.jpg"}}}};
  const auto body = ChatWire::request_body(r);
  CHECK(body["model"] == "m");
  CHECK(body["temperature"] == 0.5);
  CHECK(body["top_p"] == 0.95);
  CHECK(body["seed"] == 3);
  CHECK(body["messages"][0]["content"][0]["text"] == "hi");
  CHECK(body["messages"][0]["content"][1]["image_url"]["url"] == "https://x/y.jpg");

  const auto resp = ChatWire::parse_response(chat_reply("[[0, 0, 0, 1]]"));
  CHECK(resp.text == "[[0, 0, 0, 1]]");
  CHECK(resp.usage.prompt == 12);
  CHECK(kind_of([] { ChatWire::parse_response("{\"choices\": []}"); }) == ErrorKind::ProtocolError);
  CHECK(kind_of([] { ChatWire::parse_response("<html>"); }) == ErrorKind::ProtocolError);
}

TEST_CASE("local images become data URLs") {
  const auto dir = a2l::testing::scratch_dir("backend_image");
  {
    std::ofstream f(dir / "o.png", std::ios::binary);
    f << "PNG";
  }
  CHECK(image_url_for((dir / "o.png").string()) == "data:image/png;base64,UE5H");
  CHECK(image_url_for("data:image/jpeg;base64,AA==") == "data:image/jpeg;base64,AA==");
}

TEST_CASE("completions scoring keeps only completion tokens") {
  const std::vector<Message> prompt{Message::user("Q")};
  const auto rendered = CompletionsWire::render_prompt(prompt);
  CHECK(rendered == "user: Q\n\nassistant: ");
  const auto n = rendered.size();
  const json body = {{"choices",
                      {{{"text", rendered + "[[1"},
                        {"logprobs",
                         {{"tokens", {"user", ":", "[[", "1"}},
                          {"token_logprobs", {nullptr, -0.1, -0.5, -1.5}},
                          {"text_offset", {0, 4, n, n + 2}}}}}}}};
  const auto s = CompletionsWire::parse_score(body.dump(), n);
  CHECK(s.tokens == std::vector<std::string>{"[[", "1"});
  CHECK(s.logprobs == std::vector<double>{-0.5, -1.5});
  const auto sb = CompletionsWire::score_body({"m", prompt, "[[1"});
  CHECK(sb["echo"] == true);
  CHECK(sb["max_tokens"] == 0);
}

TEST_CASE("status classification") {
  CHECK(classify_status(401) == ErrorKind::Unauthorized);
  CHECK(classify_status(403) == ErrorKind::Unauthorized);
  CHECK(classify_status(408) == ErrorKind::Timeout);
  CHECK(classify_status(429) == ErrorKind::RateLimited);
  CHECK(classify_status(503) == ErrorKind::ServerError);
  CHECK(classify_status(400) == ErrorKind::ProtocolError);
}

TEST_CASE("http transport against a loopback server") {
  LocalServer server;
  std::atomic<int> calls{0};
  std::string seen_auth;
  json seen_body;
  server.svr.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++calls;
    seen_auth = req.get_header_value("Authorization");
    seen_body = json::parse(req.body);
    if (n <= 2) {
      res.status = 503;
      res.set_content("busy", "text/plain");
      return;
    }
    res.set_content(chat_reply("hello"), "application/json");
  });
  server.svr.Post("/unauthorized", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  server.svr.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  server.svr.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    res.set_content(chat_reply("late"), "application/json");
  });
  server.start();

  ::setenv("A2L_TEST_KEY", "sekret", 1);
  BackendConfig cfg;
  cfg.endpoint = server.url("/v1/chat/completions");
  cfg.model = "served";
  cfg.api_key_env = "A2L_TEST_KEY";
  auto clock = std::make_shared<VirtualClock>();
  BackendClient client(cfg, std::make_shared<HttpTransport>(cfg), clock);
  const auto r = client.complete(ask("ping"));
  CHECK(r.text == "hello");
  CHECK(r.attempts == 3);
  CHECK(calls == 3);
  CHECK(seen_auth == "Bearer sekret");
  CHECK(seen_body["model"] == "served");
  CHECK(client.backoff_history() == std::vector<double>{1.0, 2.0});

  auto transport_for = [&](const std::string& path, double timeout = 5.0) {
    BackendConfig c = cfg;
    c.endpoint = server.url(path);
    c.timeout_s = timeout;
    return HttpTransport(c);
  };
  CHECK(kind_of([&] { transport_for("/unauthorized").send(ask("x")); }) == ErrorKind::Unauthorized);
  CHECK(kind_of([&] { transport_for("/garbage").send(ask("x")); }) == ErrorKind::ProtocolError);
  CHECK(kind_of([&] { transport_for("/slow", 0.2).send(ask("x")); }) == ErrorKind::Timeout);
}

TEST_CASE("http transport without credentials sends no Authorization header") {
  LocalServer server;
  std::string seen_auth = "unset";
  server.svr.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    res.set_content(json{{"choices", {{{"text", "done"}}}}}.dump(), "application/json");
  });
  server.start();
  ::unsetenv("A2L_TEST_NO_KEY");
  BackendConfig cfg;
  cfg.endpoint = server.url("/v1/completions");
  cfg.family = EndpointFamily::Completions;
  cfg.api_key_env = "A2L_TEST_NO_KEY";
  HttpTransport t(cfg);
  CHECK(t.send(ask("x")).text == "done");
  CHECK(seen_auth.empty());
}

TEST_CASE("unreachable endpoint") {
  BackendConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  cfg.timeout_s = 1.0;
  HttpTransport t(cfg);
  const auto k = kind_of([&] { t.send(ask("x")); });
  CHECK(is_transient(k));
  CHECK(kind_of([] { HttpTransport(BackendConfig{}); }) == ErrorKind::ConfigError);
}

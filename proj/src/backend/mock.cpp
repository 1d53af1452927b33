#include "a2l/backend/mock.hpp"

#include <sstream>

#include <json.hpp>

#include "a2l/core/dataset_io.hpp"

namespace a2l::backend {

using nlohmann::json;

namespace {

ErrorKind failure_kind(const std::string& name) {
  if (name == "timeout") return ErrorKind::Timeout;
  if (name == "rate_limited") return ErrorKind::RateLimited;
  if (name == "server_error") return ErrorKind::ServerError;
  if (name == "unauthorized") return ErrorKind::Unauthorized;
  if (name == "protocol") return ErrorKind::ProtocolError;
  throw Error(ErrorKind::ConfigError, "mock script: unknown failure '" + name + "'");
}

std::string score_text(const ScoreRequest& req) {
  std::string out;
  for (const auto& m : req.prompt) out += m.text() + "\n";
  return out + req.completion;
}

}  // namespace

std::vector<std::string> mock_tokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

MockTransport::MockTransport(std::vector<MockEntry> script, std::shared_ptr<Clock> clock)
    : script_(std::move(script)), consumed_(script_.size(), false), clock_(std::move(clock)) {
  if (script_.empty()) throw Error(ErrorKind::Precondition, "mock script is empty");
}

std::vector<MockEntry> MockTransport::parse_script(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("mock script: ") + e.what());
  }
  const json& entries = j.is_object() ? j.at("entries") : j;
  if (!entries.is_array()) throw Error(ErrorKind::ConfigError, "mock script: entries must be an array");
  std::vector<MockEntry> out;
  for (const auto& e : entries) {
    MockEntry m;
    m.match = e.value("match", std::string());
    m.response = e.value("response", std::string());
    if (e.contains("failure")) {
      m.failure = MockFailure{failure_kind(e.at("failure").get<std::string>()),
                              e.value("message", std::string("scripted failure"))};
    }
    if (e.contains("logprobs")) m.logprobs = e.at("logprobs").get<std::vector<double>>();
    if (e.contains("logprob_per_token")) m.logprob_per_token = e.at("logprob_per_token").get<double>();
    m.latency_s = e.value("latency_s", 0.0);
    m.repeat = e.value("repeat", false);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<MockEntry> MockTransport::load_script(const std::filesystem::path& path) {
  return parse_script(read_text_file(path));
}

std::size_t MockTransport::pick(const std::string& text) {
  for (std::size_t i = 0; i < script_.size(); ++i) {
    if (consumed_[i]) continue;
    if (!script_[i].match.empty() && text.find(script_[i].match) == std::string::npos) continue;
    if (!script_[i].repeat) consumed_[i] = true;
    return i;
  }
  throw Error(ErrorKind::ScriptExhausted,
              "no scripted response left for request #" + std::to_string(transcript_.size() + 1));
}

ChatResponse MockTransport::send(const ChatRequest& req) {
  std::lock_guard lock(mu_);
  const std::string text = req.flattened_text();
  const std::size_t idx = pick(text);
  const MockEntry& e = script_[idx];
  if (clock_) clock_->sleep_for(e.latency_s);

  TranscriptEntry t;
  t.kind = TranscriptEntry::Kind::Chat;
  t.chat = req;
  t.entry_index = idx;
  t.failed = e.failure.has_value();
  t.response = e.failure ? e.failure->message : e.response;
  transcript_.push_back(t);
  if (e.failure) throw Error(e.failure->kind, e.failure->message);

  ChatResponse r;
  r.text = e.response;
  r.finish_reason = "stop";
  r.usage.prompt = static_cast<int>(mock_tokens(text).size());
  r.usage.completion = static_cast<int>(mock_tokens(e.response).size());
  if (req.want_logprobs) {
    if (!e.logprobs.empty()) r.logprobs = e.logprobs;
    else if (e.logprob_per_token) {
      r.logprobs = std::vector<double>(mock_tokens(e.response).size(), *e.logprob_per_token);
    }
  }
  return r;
}

ScoreResponse MockTransport::score(const ScoreRequest& req) {
  std::lock_guard lock(mu_);
  const std::size_t idx = pick(score_text(req));
  const MockEntry& e = script_[idx];
  if (clock_) clock_->sleep_for(e.latency_s);

  TranscriptEntry t;
  t.kind = TranscriptEntry::Kind::Score;
  t.score = req;
  t.entry_index = idx;
  t.failed = e.failure.has_value();
  transcript_.push_back(t);
  if (e.failure) throw Error(e.failure->kind, e.failure->message);

  ScoreResponse r;
  r.tokens = mock_tokens(req.completion);
  if (!e.logprobs.empty()) r.logprobs = e.logprobs;
  else if (e.logprob_per_token) r.logprobs.assign(r.tokens.size(), *e.logprob_per_token);
  return r;
}

std::vector<TranscriptEntry> MockTransport::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

std::size_t MockTransport::calls() const {
  std::lock_guard lock(mu_);
  return transcript_.size();
}

MockBackend make_mock(std::vector<MockEntry> script, BackendConfig cfg,
                      std::shared_ptr<VirtualClock> clock) {
  MockBackend b;
  b.clock = clock ? std::move(clock) : std::make_shared<VirtualClock>();
  b.transport = std::make_shared<MockTransport>(std::move(script), b.clock);
  if (cfg.model.empty()) cfg.model = "mock";
  b.client = std::make_shared<BackendClient>(cfg, b.transport, b.clock);
  return b;
}

}  // namespace a2l::backend

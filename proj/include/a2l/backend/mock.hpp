#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "a2l/backend/client.hpp"

namespace a2l::backend {

struct MockFailure {
  ErrorKind kind = ErrorKind::ServerError;
  std::string message = "scripted failure";
};

struct MockEntry {
  /// Substring that must occur in the request text; empty matches anything.
  std::string match;
  std::string response;
  std::optional<MockFailure> failure;
  /// Scripted per-token log-probabilities (score calls, or chat with want_logprobs).
  std::vector<double> logprobs;
  /// Alternative to `logprobs`: this value for every mock token of the completion.
  std::optional<double> logprob_per_token;
  /// Virtual latency charged to the clock when this entry answers.
  double latency_s = 0.0;
  /// Repeating entries are never consumed.
  bool repeat = false;
};

struct TranscriptEntry {
  enum class Kind { Chat, Score } kind = Kind::Chat;
  ChatRequest chat;
  ScoreRequest score;
  std::size_t entry_index = 0;
  std::string response;
  bool failed = false;
};

/// Deterministic scripted transport. Each call is answered by the first
/// not-yet-consumed entry (in script order) whose match string occurs in the
/// request text; ScriptExhausted when none does.
class MockTransport final : public Transport {
 public:
  explicit MockTransport(std::vector<MockEntry> script, std::shared_ptr<Clock> clock = nullptr);

  /// Loads {"entries": [...]} (or a bare array) from a JSON file.
  static std::vector<MockEntry> load_script(const std::filesystem::path& path);
  static std::vector<MockEntry> parse_script(const std::string& json_text);

  ChatResponse send(const ChatRequest& req) override;
  ScoreResponse score(const ScoreRequest& req) override;

  std::vector<TranscriptEntry> transcript() const;
  std::size_t calls() const;

 private:
  std::size_t pick(const std::string& text);

  std::vector<MockEntry> script_;
  std::vector<bool> consumed_;
  std::shared_ptr<Clock> clock_;
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> transcript_;
};

/// Convenience: mock transport + client sharing a virtual clock.
struct MockBackend {
  std::shared_ptr<VirtualClock> clock;
  std::shared_ptr<MockTransport> transport;
  std::shared_ptr<BackendClient> client;
};

MockBackend make_mock(std::vector<MockEntry> script, BackendConfig cfg = {},
                      std::shared_ptr<VirtualClock> clock = nullptr);

/// Mock tokenizer: whitespace-separated pieces of `text`.
std::vector<std::string> mock_tokens(const std::string& text);

}  // namespace a2l::backend

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace a2l::backend {

enum class Role { System, User, Assistant };

std::string to_string(Role r);

struct TextPart {
  std::string text;
  friend bool operator==(const TextPart&, const TextPart&) = default;
};

/// Image attachment by locator: local path, http(s) URL, or data: URL.
struct ImagePart {
  std::string locator;
  friend bool operator==(const ImagePart&, const ImagePart&) = default;
};

using Part = std::variant<TextPart, ImagePart>;

struct Message {
  Role role = Role::User;
  std::vector<Part> parts;

  static Message user(std::string text);
  static Message assistant(std::string text);
  static Message system(std::string text);

  /// All text parts joined with '\n'.
  std::string text() const;
  std::size_t image_count() const;
  friend bool operator==(const Message&, const Message&) = default;
};

struct ChatRequest {
  std::string model;
  std::vector<Message> messages;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 1024;
  bool want_logprobs = false;
  std::optional<std::uint64_t> seed;

  /// Throws Precondition unless there is a message and parameters are in range.
  void validate() const;
  /// Text of every message, joined; used by mocks for routing.
  std::string flattened_text() const;
};

struct TokenUsage {
  int prompt = 0;
  int completion = 0;
};

struct ChatResponse {
  std::string text;
  std::string finish_reason;
  TokenUsage usage;
  std::optional<std::vector<double>> logprobs;
  /// Transport attempts spent, including the successful one.
  int attempts = 1;
};

/// Forced-completion scoring: log-probabilities of `completion` given `prompt`.
struct ScoreRequest {
  std::string model;
  std::vector<Message> prompt;
  std::string completion;
};

struct ScoreResponse {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;
};

struct CompletionScore {
  std::vector<double> logprobs;
  double mean = 0.0;
};

struct Capabilities {
  bool images = true;
  bool logprobs = false;
};

}  // namespace a2l::backend

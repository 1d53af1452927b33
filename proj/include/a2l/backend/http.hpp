#pragma once

#include <string>

#include <json.hpp>

#include "a2l/backend/client.hpp"

namespace a2l::backend {

/// Request/response mapping for chat-completions style endpoints
/// (role/content arrays with text and image_url parts).
struct ChatWire {
  static nlohmann::json request_body(const ChatRequest& req);
  static ChatResponse parse_response(const std::string& body);
};

/// Mapping for legacy completions endpoints. Messages are flattened into a
/// single prompt; forced-completion scoring uses echo + logprobs and keeps the
/// tokens whose text offset lies inside the completion.
struct CompletionsWire {
  static std::string render_prompt(const std::vector<Message>& messages);
  static nlohmann::json request_body(const ChatRequest& req);
  static ChatResponse parse_response(const std::string& body);
  static nlohmann::json score_body(const ScoreRequest& req);
  static ScoreResponse parse_score(const std::string& body, std::size_t prompt_chars);
};

/// Resolves an image locator into something the endpoint can fetch: URLs and
/// data: URLs pass through, readable local files become base64 data URLs.
std::string image_url_for(const std::string& locator);

/// HTTP(S) transport over cpp-httplib. Credentials come only from the
/// environment variable named in the config.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(BackendConfig cfg);

  ChatResponse send(const ChatRequest& req) override;
  ScoreResponse score(const ScoreRequest& req) override;

 private:
  std::string post(const nlohmann::json& body);

  BackendConfig cfg_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

/// Maps an HTTP status to the error kind raised for it.
ErrorKind classify_status(int status);

}  // namespace a2l::backend

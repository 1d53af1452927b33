#include "a2l/backend/http.hpp"

#include <cstdlib>
#include <filesystem>

#include <httplib.h>

#include "a2l/core/dataset_io.hpp"

namespace a2l::backend {

using nlohmann::json;

namespace {

constexpr std::size_t kExcerpt = 200;

std::string excerpt(const std::string& body) {
  return body.size() <= kExcerpt ? body : body.substr(0, kExcerpt) + "...";
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception&) {
    throw Error(ErrorKind::ProtocolError, "response is not JSON: " + excerpt(body));
  }
}

const json& first_choice(const json& j, const std::string& body) {
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw Error(ErrorKind::ProtocolError, "response has no choices: " + excerpt(body));
  }
  return j["choices"][0];
}

void read_usage(const json& j, TokenUsage& usage) {
  if (!j.contains("usage") || !j["usage"].is_object()) return;
  usage.prompt = j["usage"].value("prompt_tokens", 0);
  usage.completion = j["usage"].value("completion_tokens", 0);
}

std::string mime_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/jpeg";
}

}  // namespace

ErrorKind classify_status(int status) {
  if (status == 401 || status == 403) return ErrorKind::Unauthorized;
  if (status == 408) return ErrorKind::Timeout;
  if (status == 429) return ErrorKind::RateLimited;
  if (status >= 500) return ErrorKind::ServerError;
  return ErrorKind::ProtocolError;
}

std::string image_url_for(const std::string& locator) {
  if (locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0 ||
      locator.rfind("data:", 0) == 0) {
    return locator;
  }
  std::error_code ec;
  if (std::filesystem::is_regular_file(locator, ec)) {
    const std::string bytes = read_text_file(locator);
    return "data:" + mime_for(locator) + ";base64," + httplib::detail::base64_encode(bytes);
  }
  return locator;
}

json ChatWire::request_body(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    json content = json::array();
    for (const auto& p : m.parts) {
      if (const auto* t = std::get_if<TextPart>(&p)) {
        content.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        const auto& img = std::get<ImagePart>(p);
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", image_url_for(img.locator)}}}});
      }
    }
    messages.push_back({{"role", to_string(m.role)}, {"content", content}});
  }
  json body = {{"model", req.model},
               {"messages", messages},
               {"temperature", req.temperature},
               {"top_p", req.top_p},
               {"max_tokens", req.max_tokens}};
  if (req.want_logprobs) body["logprobs"] = true;
  if (req.seed) body["seed"] = *req.seed;
  return body;
}

ChatResponse ChatWire::parse_response(const std::string& body) {
  const json j = parse_body(body);
  const json& choice = first_choice(j, body);
  if (!choice.contains("message") || !choice["message"].contains("content") ||
      !choice["message"]["content"].is_string()) {
    throw Error(ErrorKind::ProtocolError, "choice has no text content: " + excerpt(body));
  }
  ChatResponse r;
  r.text = choice["message"]["content"].get<std::string>();
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    r.finish_reason = choice["finish_reason"].get<std::string>();
  }
  read_usage(j, r.usage);
  if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
      choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
    std::vector<double> lp;
    for (const auto& t : choice["logprobs"]["content"]) lp.push_back(t.at("logprob").get<double>());
    r.logprobs = std::move(lp);
  }
  return r;
}

std::string CompletionsWire::render_prompt(const std::vector<Message>& messages) {
  std::string out;
  for (const auto& m : messages) {
    if (m.image_count() > 0) {
      throw Error(ErrorKind::CapabilityMissing, "completions endpoints take text only");
    }
    out += to_string(m.role) + ": " + m.text() + "\n\n";
  }
  return out + "assistant: ";
}

json CompletionsWire::request_body(const ChatRequest& req) {
  json body = {{"model", req.model},
               {"prompt", render_prompt(req.messages)},
               {"temperature", req.temperature},
               {"top_p", req.top_p},
               {"max_tokens", req.max_tokens}};
  if (req.want_logprobs) body["logprobs"] = 1;
  if (req.seed) body["seed"] = *req.seed;
  return body;
}

ChatResponse CompletionsWire::parse_response(const std::string& body) {
  const json j = parse_body(body);
  const json& choice = first_choice(j, body);
  if (!choice.contains("text") || !choice["text"].is_string()) {
    throw Error(ErrorKind::ProtocolError, "choice has no text: " + excerpt(body));
  }
  ChatResponse r;
  r.text = choice["text"].get<std::string>();
  if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
    r.finish_reason = choice["finish_reason"].get<std::string>();
  }
  read_usage(j, r.usage);
  if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
      choice["logprobs"].contains("token_logprobs")) {
    std::vector<double> lp;
    for (const auto& v : choice["logprobs"]["token_logprobs"]) {
      if (v.is_number()) lp.push_back(v.get<double>());
    }
    r.logprobs = std::move(lp);
  }
  return r;
}

json CompletionsWire::score_body(const ScoreRequest& req) {
  return {{"model", req.model},
          {"prompt", render_prompt(req.prompt) + req.completion},
          {"max_tokens", 0},
          {"echo", true},
          {"logprobs", 0}};
}

ScoreResponse CompletionsWire::parse_score(const std::string& body, std::size_t prompt_chars) {
  const json j = parse_body(body);
  const json& choice = first_choice(j, body);
  if (!choice.contains("logprobs") || !choice["logprobs"].is_object()) {
    throw Error(ErrorKind::ProtocolError, "score response has no logprobs: " + excerpt(body));
  }
  const json& lp = choice["logprobs"];
  if (!lp.contains("tokens") || !lp.contains("token_logprobs") || !lp.contains("text_offset")) {
    throw Error(ErrorKind::ProtocolError, "score response lacks tokens/offsets: " + excerpt(body));
  }
  const auto& tokens = lp["tokens"];
  const auto& values = lp["token_logprobs"];
  const auto& offsets = lp["text_offset"];
  if (tokens.size() != values.size() || tokens.size() != offsets.size()) {
    throw Error(ErrorKind::ProtocolError, "score arrays differ in length");
  }
  ScoreResponse r;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (offsets[i].get<std::size_t>() < prompt_chars) continue;
    if (!values[i].is_number()) continue;
    r.tokens.push_back(tokens[i].get<std::string>());
    r.logprobs.push_back(values[i].get<double>());
  }
  return r;
}

HttpTransport::HttpTransport(BackendConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme = cfg_.endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorKind::ConfigError, "endpoint must be a URL: '" + cfg_.endpoint + "'");
  }
  const auto slash = cfg_.endpoint.find('/', scheme + 3);
  origin_ = cfg_.endpoint.substr(0, slash);
  if (slash != std::string::npos) {
    path_ = cfg_.endpoint.substr(slash);
  } else {
    path_ = cfg_.family == EndpointFamily::Chat ? "/v1/chat/completions" : "/v1/completions";
  }
}

std::string HttpTransport::post(const json& body) {
  httplib::Client cli(origin_);
  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write) {
      throw Error(ErrorKind::Timeout, origin_ + ": " + httplib::to_string(err));
    }
    throw Error(ErrorKind::ServerError, origin_ + ": " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw Error(classify_status(res->status),
                "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
  }
  return res->body;
}

ChatResponse HttpTransport::send(const ChatRequest& req) {
  if (cfg_.family == EndpointFamily::Chat) return ChatWire::parse_response(post(ChatWire::request_body(req)));
  return CompletionsWire::parse_response(post(CompletionsWire::request_body(req)));
}

ScoreResponse HttpTransport::score(const ScoreRequest& req) {
  if (cfg_.family != EndpointFamily::Completions) {
    throw Error(ErrorKind::CapabilityMissing,
                "forced-completion scoring needs a completions endpoint (echo + logprobs)");
  }
  const std::size_t prompt_chars = CompletionsWire::render_prompt(req.prompt).size();
  return CompletionsWire::parse_score(post(CompletionsWire::score_body(req)), prompt_chars);
}

}  // namespace a2l::backend

#include "a2l/backend/chat.hpp"

#include "a2l/errors.hpp"

namespace a2l::backend {

std::string to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Message Message::user(std::string text) { return {Role::User, {TextPart{std::move(text)}}}; }
Message Message::assistant(std::string text) {
  return {Role::Assistant, {TextPart{std::move(text)}}};
}
Message Message::system(std::string text) { return {Role::System, {TextPart{std::move(text)}}}; }

std::string Message::text() const {
  std::string out;
  bool first = true;
  for (const auto& p : parts) {
    if (const auto* t = std::get_if<TextPart>(&p)) {
      if (!first) out += '\n';
      out += t->text;
      first = false;
    }
  }
  return out;
}

std::size_t Message::image_count() const {
  std::size_t n = 0;
  for (const auto& p : parts) n += std::holds_alternative<ImagePart>(p) ? 1 : 0;
  return n;
}

void ChatRequest::validate() const {
  if (messages.empty()) throw Error(ErrorKind::Precondition, "chat request has no messages");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorKind::Precondition, "temperature out of [0, 2]");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorKind::Precondition, "top_p out of (0, 1]");
  if (max_tokens <= 0) throw Error(ErrorKind::Precondition, "max_tokens must be positive");
}

std::string ChatRequest::flattened_text() const {
  std::string out;
  for (const auto& m : messages) {
    out += m.text();
    out += '\n';
  }
  return out;
}

}  // namespace a2l::backend

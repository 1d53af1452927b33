#include "a2l/config/flat_config.hpp"

#include <charconv>
#include <set>

#include "a2l/core/dataset_io.hpp"
#include "a2l/errors.hpp"

namespace a2l::config {

const std::string& Value::as_string() const {
  if (!is_string()) throw Error(ErrorKind::ConfigError, "expected a string, got " + to_text());
  return std::get<std::string>(data);
}

double Value::as_number() const {
  if (!is_number()) throw Error(ErrorKind::ConfigError, "expected a number, got " + to_text());
  return std::get<double>(data);
}

bool Value::as_bool() const {
  if (!is_bool()) throw Error(ErrorKind::ConfigError, "expected true/false, got " + to_text());
  return std::get<bool>(data);
}

const Value::Array& Value::as_array() const {
  if (!is_array()) throw Error(ErrorKind::ConfigError, "expected an array, got " + to_text());
  return std::get<Array>(data);
}

namespace {

std::string number_text(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

class Parser {
 public:
  Parser(std::string_view text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::ConfigError, origin_ + ":" + std::to_string(line_) + ": " + what);
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  char get() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_inline_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) get();
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') get();
    }
  }

  // Whitespace, newlines and comments.
  void skip_all_space() {
    for (;;) {
      skip_inline_space();
      if (peek() == '#') {
        skip_comment();
        continue;
      }
      if (peek() == '\n') {
        get();
        continue;
      }
      break;
    }
  }

  void expect_line_end() {
    skip_inline_space();
    skip_comment();
    if (!eof() && peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
  }

  std::string parse_key(char stop) {
    std::string key;
    while (!eof() && peek() != stop && peek() != '\n') {
      const char c = get();
      if (c == '"') {
        while (!eof() && peek() != '"') key += get();
        if (eof()) fail("unterminated quoted key");
        get();
        continue;
      }
      key += c;
    }
    // trim
    const auto b = key.find_first_not_of(" \t");
    const auto e = key.find_last_not_of(" \t");
    if (b == std::string::npos) fail("empty key");
    return key.substr(b, e - b + 1);
  }

  Value parse_value(bool bare_strings) {
    skip_inline_space();
    if (eof()) fail("missing value");
    const char c = peek();
    if (c == '"') return Value{parse_basic_string()};
    if (c == '\'') return Value{parse_literal_string()};
    if (c == '[') return parse_array(bare_strings);
    std::string token;
    while (!eof() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n') token += get();
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
      token.pop_back();
    }
    if (token == "true") return Value{true};
    if (token == "false") return Value{false};
    std::string_view num = token;
    if (!num.empty() && num.front() == '+') num.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (!num.empty() && ec == std::errc() && ptr == num.data() + num.size()) return Value{v};
    if (bare_strings && !token.empty()) return Value{token};
    fail("cannot parse value '" + token + "'");
  }

  std::string parse_basic_string() {
    get();  // opening quote
    std::string out;
    while (!eof() && peek() != '"') {
      char c = get();
      if (c == '\n') fail("newline in string");
      if (c == '\\') {
        if (eof()) fail("dangling escape");
        const char e = get();
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (eof()) fail("unterminated string");
    get();
    return out;
  }

  std::string parse_literal_string() {
    get();
    std::string out;
    while (!eof() && peek() != '\'') {
      if (peek() == '\n') fail("newline in string");
      out += get();
    }
    if (eof()) fail("unterminated string");
    get();
    return out;
  }

  Value parse_array(bool bare_strings) {
    get();  // '['
    Value::Array items;
    for (;;) {
      skip_all_space();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        get();
        break;
      }
      items.push_back(parse_value(bare_strings));
      skip_all_space();
      if (peek() == ',') {
        get();
        continue;
      }
      if (peek() == ']') {
        get();
        break;
      }
      fail("expected ',' or ']' in array");
    }
    return Value{std::move(items)};
  }

  std::string_view text_;
  std::string origin_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

std::string Value::to_text() const {
  if (is_string()) return as_string();
  if (is_number()) return number_text(std::get<double>(data));
  if (is_bool()) return std::get<bool>(data) ? "true" : "false";
  std::string out = "[";
  const auto& arr = std::get<Array>(data);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (i) out += ", ";
    out += arr[i].is_string() ? quote(arr[i].as_string()) : arr[i].to_text();
  }
  return out + "]";
}

FlatConfig FlatConfig::parse(std::string_view text, const std::string& origin) {
  Parser p(text, origin);
  FlatConfig cfg;
  cfg.origin_ = origin;
  std::string prefix;
  for (;;) {
    p.skip_all_space();
    if (p.eof()) break;
    if (p.peek() == '[') {
      p.get();
      prefix = p.parse_key(']');
      if (p.peek() != ']') p.fail("unterminated section header");
      p.get();
      p.expect_line_end();
      continue;
    }
    const std::string key = p.parse_key('=');
    if (p.peek() != '=') p.fail("expected '=' after key '" + key + "'");
    p.get();
    Value v = p.parse_value(false);
    p.expect_line_end();
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (cfg.values_.count(full)) p.fail("duplicate key '" + full + "'");
    cfg.values_[full] = std::move(v);
  }
  return cfg;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

const Value& FlatConfig::at(const std::string& key) const {
  const auto* v = find(key);
  if (!v) throw Error(ErrorKind::ConfigError, origin_ + ": missing key '" + key + "'");
  return *v;
}

const Value* FlatConfig::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? v->as_string() : fallback;
}

double FlatConfig::get_number(const std::string& key, double fallback) const {
  const auto* v = find(key);
  return v ? v->as_number() : fallback;
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  return v ? v->as_bool() : fallback;
}

std::vector<std::string> FlatConfig::children(const std::string& prefix) const {
  std::set<std::string> names;
  const std::string lead = prefix + ".";
  for (const auto& [k, _] : values_) {
    if (k.compare(0, lead.size(), lead) != 0) continue;
    const auto rest = k.substr(lead.size());
    names.insert(rest.substr(0, rest.find('.')));
  }
  return {names.begin(), names.end()};
}

Value parse_value_text(std::string_view text) {
  try {
    Parser p(text, "<value>");
    Value v = p.parse_value(true);
    p.expect_line_end();
    if (!p.eof()) return Value{std::string(text)};
    return v;
  } catch (const Error&) {
    return Value{std::string(text)};
  }
}

}  // namespace a2l::config

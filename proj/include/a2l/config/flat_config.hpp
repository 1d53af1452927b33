#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace a2l::config {

/// A value in a flat config file: string, number, bool, or array of values.
struct Value {
  using Array = std::vector<Value>;
  std::variant<std::string, double, bool, Array> data;

  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }

  const std::string& as_string() const;
  double as_number() const;
  bool as_bool() const;
  const Array& as_array() const;

  /// Text form usable as a flag/env value ("0.5", "true", "abc", "[1, 2]").
  std::string to_text() const;

  friend bool operator==(const Value&, const Value&) = default;
};

/// Parsed `key = value` document. Section headers `[a.b]` prefix the keys that
/// follow them, so `[objects.carrot]` + `pos = [...]` yields "objects.carrot.pos".
/// Supported values: "basic" and 'literal' strings, numbers, true/false, and
/// (possibly nested, possibly multi-line) arrays. Comments start with '#'.
class FlatConfig {
 public:
  static FlatConfig parse(std::string_view text, const std::string& origin = "<string>");
  static FlatConfig load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const Value& at(const std::string& key) const;
  const Value* find(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Direct children of `prefix` ("objects" -> {"carrot", "plate"}), sorted.
  std::vector<std::string> children(const std::string& prefix) const;

  void set(const std::string& key, Value v) { values_[key] = std::move(v); }
  const std::map<std::string, Value>& values() const { return values_; }

 private:
  std::map<std::string, Value> values_;
  std::string origin_;
};

/// Parses a single scalar or array value written in config syntax. Bare words
/// that are not numbers/bools are taken as strings (used for flag overrides).
Value parse_value_text(std::string_view text);

}  // namespace a2l::config

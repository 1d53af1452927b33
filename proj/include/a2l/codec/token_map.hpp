#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace a2l::codec {

/// Bijection between the ten digits and reserved vocabulary tokens, used for
/// the actions-as-tokens variant.
class TokenMap {
 public:
  /// digit d -> "<unused{6133+d}>", token id 262035 + d.
  static TokenMap gemma3_default();

  /// Reads a "digit<TAB>token<TAB>token_id" table (header line and '#' comments
  /// allowed). Throws ConfigError unless all ten digits map to distinct tokens.
  static TokenMap load(const std::filesystem::path& path);
  static TokenMap parse(std::string_view table);

  std::string to_table() const;

  const std::string& token_for(int digit) const { return tokens_.at(static_cast<std::size_t>(digit)); }
  std::int64_t id_for(int digit) const { return ids_.at(static_cast<std::size_t>(digit)); }
  /// Digit for a token string, or -1.
  int digit_for(std::string_view token) const;

 private:
  TokenMap(std::array<std::string, 10> tokens, std::array<std::int64_t, 10> ids);

  std::array<std::string, 10> tokens_;
  std::array<std::int64_t, 10> ids_;
};

/// Replaces every ASCII digit by its token; everything else is copied verbatim.
std::string encode_at(std::string_view text, const TokenMap& map);

/// Replaces every token occurrence (leftmost, longest) by its digit; unknown
/// text passes through.
std::string decode_at(std::string_view text, const TokenMap& map);

}  // namespace a2l::codec

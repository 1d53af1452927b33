#include "a2l/codec/token_map.hpp"

#include <set>
#include <sstream>

#include "a2l/core/dataset_io.hpp"
#include "a2l/errors.hpp"

namespace a2l::codec {

TokenMap::TokenMap(std::array<std::string, 10> tokens, std::array<std::int64_t, 10> ids)
    : tokens_(std::move(tokens)), ids_(ids) {}

TokenMap TokenMap::gemma3_default() {
  constexpr int kFirstUnused = 6133;
  constexpr std::int64_t kFirstId = 262035;
  std::array<std::string, 10> tokens;
  std::array<std::int64_t, 10> ids{};
  for (int d = 0; d < 10; ++d) {
    tokens[d] = "<unused" + std::to_string(kFirstUnused + d) + ">";
    ids[d] = kFirstId + d;
  }
  return TokenMap(tokens, ids);
}

TokenMap TokenMap::parse(std::string_view table) {
  std::array<std::string, 10> tokens;
  std::array<std::int64_t, 10> ids{};
  std::array<bool, 10> seen{};
  std::istringstream in{std::string(table)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string digit, token, id;
    if (!(fields >> digit >> token >> id)) {
      throw Error(ErrorKind::ConfigError, "token map: bad line '" + line + "'");
    }
    if (digit == "digit") continue;  // header
    if (digit.size() != 1 || digit[0] < '0' || digit[0] > '9') {
      throw Error(ErrorKind::ConfigError, "token map: '" + digit + "' is not a digit");
    }
    const int d = digit[0] - '0';
    if (seen[d]) throw Error(ErrorKind::ConfigError, "token map: digit " + digit + " repeated");
    seen[d] = true;
    tokens[d] = token;
    try {
      ids[d] = std::stoll(id);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigError, "token map: bad token id '" + id + "'");
    }
  }
  std::set<std::string> distinct;
  for (int d = 0; d < 10; ++d) {
    if (!seen[d]) throw Error(ErrorKind::ConfigError, "token map: digit " + std::to_string(d) + " missing");
    if (tokens[d].empty() || tokens[d].find_first_of("0123456789") == 0) {
      throw Error(ErrorKind::ConfigError, "token map: token for " + std::to_string(d) + " must not start with a digit");
    }
    distinct.insert(tokens[d]);
  }
  if (distinct.size() != 10) throw Error(ErrorKind::ConfigError, "token map: tokens not distinct");
  return TokenMap(tokens, ids);
}

TokenMap TokenMap::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

std::string TokenMap::to_table() const {
  std::string out = "digit\ttoken\ttoken_id\n";
  for (int d = 9; d >= 0; --d) {
    out += std::to_string(d) + "\t" + tokens_[d] + "\t" + std::to_string(ids_[d]) + "\n";
  }
  return out;
}

int TokenMap::digit_for(std::string_view token) const {
  for (int d = 0; d < 10; ++d) {
    if (tokens_[d] == token) return d;
  }
  return -1;
}

std::string encode_at(std::string_view text, const TokenMap& map) {
  std::string out;
  out.reserve(text.size() * 4);
  for (const char c : text) {
    if (c >= '0' && c <= '9') out += map.token_for(c - '0');
    else out += c;
  }
  return out;
}

std::string decode_at(std::string_view text, const TokenMap& map) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    int best_digit = -1;
    std::size_t best_len = 0;
    for (int d = 0; d < 10; ++d) {
      const auto& tok = map.token_for(d);
      if (tok.size() > best_len && text.compare(i, tok.size(), tok) == 0) {
        best_digit = d;
        best_len = tok.size();
      }
    }
    if (best_digit >= 0) {
      out += static_cast<char>('0' + best_digit);
      i += best_len;
    } else {
      out += text[i++];
    }
  }
  return out;
}

}  // namespace a2l::codec

#include "a2l/codec/action_text.hpp"

#include <charconv>
#include <cmath>

#include "a2l/core/number_format.hpp"
#include "a2l/errors.hpp"

namespace a2l::codec {

namespace {

constexpr std::size_t npos = std::string_view::npos;
constexpr double kGripperSlack = 1e-6;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view token, std::size_t row, std::size_t field) {
  std::string_view t = trim(token);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  double v = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::NonNumeric, "row " + std::to_string(row) + " field " +
                                           std::to_string(field) + ": '" + std::string(trim(token)) +
                                           "'");
  }
  return v;
}

// Splits the inside of a bracket pair at top-level commas.
std::vector<std::string_view> split_top_level(std::string_view inner) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const char c = inner[i];
    if (c == '[') ++depth;
    else if (c == ']') --depth;
    else if (c == ',' && depth == 0) {
      parts.push_back(inner.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(inner.substr(start));
  // Python allows a trailing comma.
  if (parts.size() > 1 && trim(parts.back()).empty()) parts.pop_back();
  if (parts.size() == 1 && trim(parts.front()).empty()) parts.clear();
  return parts;
}

bool starts_with_list(std::string_view text, std::pair<std::size_t, std::size_t> span) {
  const auto inner = trim(text.substr(span.first + 1, span.second - span.first - 2));
  return !inner.empty() && inner.front() == '[';
}

}  // namespace

std::string serialize_chunk(const ActionChunk& chunk) {
  if (chunk.empty()) throw Error(ErrorKind::EmptyChunk, "cannot serialize an empty chunk");
  std::string out = "[";
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    if (i) out += ", ";
    out += format_action(chunk[i]);
  }
  out += "]";
  return out;
}

FenceStrip strip_code_fences(std::string_view text) {
  const auto open = text.find("```");
  if (open == npos) return {text, 0, false};
  auto body_start = text.find('\n', open + 3);
  if (body_start == npos) {
    // Single-line fence such as ```[[...]]```.
    body_start = open + 3;
  } else {
    ++body_start;
  }
  auto close = text.find("```", body_start);
  if (close == npos) close = text.size();
  return {text.substr(body_start, close - body_start), body_start, true};
}

std::pair<std::size_t, std::size_t> find_balanced_list(std::string_view text, std::size_t from) {
  for (auto open = text.find('[', from); open != npos; open = text.find('[', open + 1)) {
    int depth = 0;
    char quote = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
      const char c = text[i];
      if (quote) {
        if (c == '\\') ++i;
        else if (c == quote) quote = 0;
        continue;
      }
      if (c == '\'' || c == '"') quote = c;
      else if (c == '[') ++depth;
      else if (c == ']' && --depth == 0) return {open, i + 1};
    }
  }
  return {npos, npos};
}

Action action_from_row(const std::vector<double>& row, std::size_t row_index) {
  if (row.size() != 4) throw BadArityError(row_index, row.size());
  const double g = row[3];
  Gripper grip;
  if (std::abs(g - 1.0) <= kGripperSlack) grip = Gripper::Open;
  else if (std::abs(g) <= kGripperSlack) grip = Gripper::Closed;
  else {
    throw Error(ErrorKind::GripperNotBinary,
                "row " + std::to_string(row_index) + ": gripper " + std::to_string(g));
  }
  Action a{{row[0], row[1], row[2]}, grip};
  validate_action(a, "row " + std::to_string(row_index));
  return a;
}

ParsedChunk parse_chunk(std::string_view text) {
  const FenceStrip fence = strip_code_fences(text);
  const std::string_view body = fence.body;

  std::pair<std::size_t, std::size_t> chosen{npos, npos};
  std::pair<std::size_t, std::size_t> first_any{npos, npos};
  for (auto span = find_balanced_list(body); span.first != npos;
       span = find_balanced_list(body, span.second)) {
    if (first_any.first == npos) first_any = span;
    if (starts_with_list(body, span)) {
      chosen = span;
      break;
    }
  }
  if (chosen.first == npos) chosen = first_any;
  if (chosen.first == npos) throw Error(ErrorKind::NoListFound, "no bracketed list in output");

  ParsedChunk result;
  result.diagnostics.stripped_fences = fence.stripped;
  result.diagnostics.source_span = {fence.offset + chosen.first, fence.offset + chosen.second};

  const auto literal = body.substr(chosen.first, chosen.second - chosen.first);
  const auto rows = split_top_level(literal.substr(1, literal.size() - 2));
  if (rows.empty()) throw Error(ErrorKind::EmptyChunk, "model produced an empty list");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row_text = trim(rows[r]);
    if (row_text.size() < 2 || row_text.front() != '[' || row_text.back() != ']') {
      if (rows.size() == 4 && r == 0) {
        // A bare [dx, dy, dz, g] without the outer list.
        throw Error(ErrorKind::NoListFound, "expected a list of lists, got a flat list");
      }
      throw BadArityError(r, 1);
    }
    const auto fields = split_top_level(row_text.substr(1, row_text.size() - 2));
    if (fields.size() != 4) throw BadArityError(r, fields.size());
    std::vector<double> values;
    values.reserve(4);
    for (std::size_t f = 0; f < fields.size(); ++f) values.push_back(parse_number(fields[f], r, f));
    result.chunk.push_back(action_from_row(values, r));
  }
  return result;
}

}  // namespace a2l::codec

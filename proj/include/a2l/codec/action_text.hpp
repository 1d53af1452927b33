#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "a2l/core/types.hpp"

namespace a2l::codec {

struct ParseDiagnostics {
  bool stripped_fences = false;
  /// [first, second) offsets of the list literal within the original input.
  std::pair<std::size_t, std::size_t> source_span{0, 0};
};

struct ParsedChunk {
  ActionChunk chunk;
  ParseDiagnostics diagnostics;
};

/// Canonical "[[dx, dy, dz, g], ...]" text. Throws EmptyChunk on an empty chunk.
std::string serialize_chunk(const ActionChunk& chunk);

/// Extracts the first list-of-lists literal from model output. Code fences and
/// surrounding prose are tolerated; every row must hold exactly four numbers.
ParsedChunk parse_chunk(std::string_view text);

/// Shared row validation used by every path that turns numbers into actions:
/// gripper within 1e-6 of 0 or 1 is normalized, displacements must satisfy
/// the Action invariants.
Action action_from_row(const std::vector<double>& row, std::size_t row_index);

/// Removes a surrounding ``` fence (with optional language tag). Returns the
/// offset of the kept region within `text` and whether a fence was found.
struct FenceStrip {
  std::string_view body;
  std::size_t offset = 0;
  bool stripped = false;
};
FenceStrip strip_code_fences(std::string_view text);

/// Finds the first balanced [...] span starting at or after `from`, skipping
/// quoted strings. Returns npos-pair when none exists.
std::pair<std::size_t, std::size_t> find_balanced_list(std::string_view text,
                                                       std::size_t from = 0);

}  // namespace a2l::codec

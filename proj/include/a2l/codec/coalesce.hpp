#pragma once

#include <vector>

#include "a2l/core/types.hpp"

namespace a2l::codec {

struct CoalesceConfig {
  double axis_cap = 0.05;
  bool sign_conflict_enabled = true;
  /// Single-dimension threshold that accompanies the cap in the original data
  /// recipe. Recorded for provenance; the default boundary rule does not read it.
  double per_axis_note = 0.025;
  double partition_tolerance = 5e-4;

  void validate() const;
};

/// Merges consecutive micro-actions into larger ones. A new group starts before
/// action `a` when the gripper changes, when some axis would flip sign against a
/// nonzero running sum, or when some running sum would exceed `axis_cap`.
ActionChunk coalesce(const ActionChunk& raw, const CoalesceConfig& cfg = {});

/// Same as coalesce() but also returns the index of the first raw action of
/// each group.
struct CoalesceResult {
  ActionChunk chunk;
  std::vector<std::size_t> group_starts;
};
CoalesceResult coalesce_with_groups(const ActionChunk& raw, const CoalesceConfig& cfg = {});

}  // namespace a2l::codec

#include "a2l/codec/coalesce.hpp"

#include <cmath>

#include "a2l/errors.hpp"

namespace a2l::codec {

namespace {

// Slack on the cap comparison so sums that equal the cap up to rounding stay in one group.
constexpr double kCapSlack = 1e-12;

bool opposite_signs(double accumulated, double incoming) {
  return accumulated != 0.0 && incoming != 0.0 && std::signbit(accumulated) != std::signbit(incoming);
}

}  // namespace

void CoalesceConfig::validate() const {
  if (!(axis_cap > 0.0)) throw Error(ErrorKind::ConfigError, "axis_cap must be positive");
  if (!(per_axis_note > 0.0)) throw Error(ErrorKind::ConfigError, "per_axis_note must be positive");
  if (!(partition_tolerance >= 0.0)) {
    throw Error(ErrorKind::ConfigError, "partition_tolerance must be non-negative");
  }
}

CoalesceResult coalesce_with_groups(const ActionChunk& raw, const CoalesceConfig& cfg) {
  cfg.validate();
  CoalesceResult out;
  if (raw.empty()) return out;

  Action acc{};
  bool open_group = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Action& a = raw[i];
    validate_action(a, "coalesce input " + std::to_string(i));

    bool boundary = false;
    if (open_group) {
      if (a.gripper != acc.gripper) boundary = true;
      for (int d = 0; d < 3 && !boundary; ++d) {
        if (cfg.sign_conflict_enabled && opposite_signs(acc.delta[d], a.delta[d])) boundary = true;
        if (std::abs(acc.delta[d] + a.delta[d]) > cfg.axis_cap + kCapSlack) boundary = true;
      }
    }
    if (!open_group || boundary) {
      if (open_group) out.chunk.push_back(acc);
      acc = a;
      out.group_starts.push_back(i);
      open_group = true;
      continue;
    }
    for (int d = 0; d < 3; ++d) acc.delta[d] += a.delta[d];
  }
  out.chunk.push_back(acc);
  return out;
}

ActionChunk coalesce(const ActionChunk& raw, const CoalesceConfig& cfg) {
  return coalesce_with_groups(raw, cfg).chunk;
}

}  // namespace a2l::codec

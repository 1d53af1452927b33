#pragma once

#include <string>

#include "a2l/core/types.hpp"

namespace a2l {

/// Canonical text for a displacement component: three fractional digits, with
/// anything that rounds to zero written as "0.0".
std::string format_component(double v);

/// "1.0" or "0.0".
std::string format_gripper(Gripper g);

/// "[dx, dy, dz, g]" using the canonical component formatting.
std::string format_action(const Action& a);

/// Value the canonical text of `v` parses back to.
double quantize3(double v);

Action quantize3(const Action& a);
ActionChunk quantize3(const ActionChunk& c);

}  // namespace a2l

#include "a2l/core/types.hpp"

#include <cmath>
#include <set>

#include "a2l/errors.hpp"

namespace a2l {

void validate_action(const Action& a, const std::string& context) {
  static constexpr const char* kNames[] = {"dx", "dy", "dz"};
  const std::string where = context.empty() ? std::string() : context + ": ";
  for (int i = 0; i < 3; ++i) {
    const double v = a.delta[i];
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::InvariantViolation, where + kNames[i] + " is not finite");
    }
    if (std::abs(v) > kMaxStepDelta) {
      throw Error(ErrorKind::InvariantViolation,
                  where + kNames[i] + " = " + std::to_string(v) + " exceeds 0.10 m");
    }
  }
}

Action make_action(double dx, double dy, double dz, double gripper) {
  if (gripper != 0.0 && gripper != 1.0) {
    throw Error(ErrorKind::InvariantViolation,
                "gripper must be 0 or 1, got " + std::to_string(gripper));
  }
  Action a{{dx, dy, dz}, gripper == 1.0 ? Gripper::Open : Gripper::Closed};
  validate_action(a);
  return a;
}

ActionChunk RawTrajectory::actions() const {
  ActionChunk out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.action);
  return out;
}

void validate_raw(const RawTrajectory& t) {
  if (t.frames.empty()) {
    throw Error(ErrorKind::InvariantViolation, "trajectory " + t.id + ": frames is empty");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    const auto& f = t.frames[i];
    if (!seen.insert(f.obs).second) {
      throw Error(ErrorKind::InvariantViolation,
                  "trajectory " + t.id + ": duplicate obs '" + f.obs + "'");
    }
    validate_action(f.action, "trajectory " + t.id + " frame " + std::to_string(i));
  }
}

ActionChunk AnnotatedTrajectory::flattened() const {
  ActionChunk out;
  for (const auto& s : steps) out.insert(out.end(), s.chunk.begin(), s.chunk.end());
  return out;
}

void validate_annotated(const AnnotatedTrajectory& t) {
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    const std::string where = "trajectory " + t.id + " step " + std::to_string(i);
    if (s.index != i) throw Error(ErrorKind::InvariantViolation, where + ": index out of order");
    if (s.subtask.empty()) throw Error(ErrorKind::InvariantViolation, where + ": empty subtask");
    if (s.main_movements.empty()) {
      throw Error(ErrorKind::InvariantViolation, where + ": empty main_movements");
    }
    if (s.chunk.empty()) throw Error(ErrorKind::InvariantViolation, where + ": empty chunk");
    for (const auto& a : s.chunk) validate_action(a, where);
  }
}

std::size_t DatasetManifest::total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : counts) n += c;
  return n;
}

}  // namespace a2l

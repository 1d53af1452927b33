#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace a2l {

enum class Gripper : std::uint8_t { Closed = 0, Open = 1 };

inline double gripper_value(Gripper g) { return g == Gripper::Open ? 1.0 : 0.0; }

enum class Axis : int { X = 0, Y = 1, Z = 2 };

/// Largest single-step displacement accepted on any axis (meters).
inline constexpr double kMaxStepDelta = 0.10;

/// Relative end-effector command in the base frame: +x forward, +y left, +z up.
struct Action {
  std::array<double, 3> delta{};
  Gripper gripper = Gripper::Open;

  double dx() const { return delta[0]; }
  double dy() const { return delta[1]; }
  double dz() const { return delta[2]; }
  double operator[](Axis a) const { return delta[static_cast<int>(a)]; }

  friend bool operator==(const Action&, const Action&) = default;
};

using ActionChunk = std::vector<Action>;

/// Throws InvariantViolation unless every component is finite and within kMaxStepDelta.
void validate_action(const Action& a, const std::string& context = {});

/// Builds an action from a 4-vector whose last entry must already be exactly 0 or 1.
Action make_action(double dx, double dy, double dz, double gripper);

struct RawFrame {
  std::string obs;
  Action action;
  friend bool operator==(const RawFrame&, const RawFrame&) = default;
};

/// One teleoperation episode: observation/action pairs plus the main instruction.
struct RawTrajectory {
  std::string id;
  std::string instruction;
  std::vector<RawFrame> frames;

  ActionChunk actions() const;
  friend bool operator==(const RawTrajectory&, const RawTrajectory&) = default;
};

void validate_raw(const RawTrajectory& t);

struct AnnotatedStep {
  std::size_t index = 0;
  std::string subtask;
  std::string reasoning;
  std::string main_movements;
  std::string obs;
  ActionChunk chunk;      // native granularity; flattened steps reproduce the raw actions
  ActionChunk coalesced;  // training target after coalescing

  friend bool operator==(const AnnotatedStep&, const AnnotatedStep&) = default;
};

struct Provenance {
  std::string model;
  std::string prompt_version;
  std::string ts;
  int attempts = 1;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct AnnotatedTrajectory {
  std::string id;
  std::string instruction;
  std::vector<AnnotatedStep> steps;
  Provenance provenance;
  std::optional<std::string> terminal_obs;

  ActionChunk flattened() const;
  friend bool operator==(const AnnotatedTrajectory&, const AnnotatedTrajectory&) = default;
};

void validate_annotated(const AnnotatedTrajectory& t);

inline constexpr int kSchemaVersion = 1;

struct DatasetManifest {
  std::string dataset_id;
  std::map<std::string, std::size_t> counts;
  int schema_version = kSchemaVersion;
  std::string source;

  std::size_t total() const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

}  // namespace a2l

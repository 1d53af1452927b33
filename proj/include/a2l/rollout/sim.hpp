#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "a2l/core/types.hpp"

namespace a2l::rollout {

/// Positions are kept as integer micrometres so that integrating a chunk is
/// exact: final - initial equals the sum of the executed deltas bit for bit.
using Micro = std::int64_t;
using Point = std::array<Micro, 3>;

Micro to_micro(double meters);
double to_meters(Micro um);
Point to_point(const std::array<double, 3>& meters);
std::array<double, 3> to_meters(const Point& p);

struct Box {
  std::array<double, 3> lo{};
  std::array<double, 3> hi{};

  void validate(const std::string& what) const;
  bool contains(const Point& p) const;
};

struct SimObject {
  std::string name;
  Point pos{};
  Point initial{};
};

struct Region {
  std::string name;
  Box box;
};

struct EnvParams {
  double grasp_radius = 0.03;
  double contact_radius = 0.02;
  double lift_threshold = 0.05;
  /// Drop in end-effector distance that counts as moving toward an object.
  double approach_distance = 0.05;
};

/// Per-object episode statistics used by the scoring predicates.
struct ObjectStats {
  double initial_ee_distance = 0.0;
  double min_ee_distance = 0.0;
  double max_lift_while_held = 0.0;
  bool ever_held = false;
};

class SimEnv {
 public:
  SimEnv(Box workspace, std::array<double, 3> ee, Gripper gripper, std::vector<SimObject> objects,
         std::vector<Region> regions = {}, EnvParams params = {});

  const Point& ee() const { return ee_; }
  std::array<double, 3> ee_meters() const { return to_meters(ee_); }
  Gripper gripper() const { return gripper_; }
  const std::vector<SimObject>& objects() const { return objects_; }
  const std::vector<Region>& regions() const { return regions_; }
  const Box& workspace() const { return workspace_; }
  const EnvParams& params() const { return params_; }
  const std::vector<ObjectStats>& stats() const { return stats_; }
  std::optional<std::size_t> held() const { return held_; }

  /// Throws UnknownEntity for names not in the scene.
  std::size_t object_index(const std::string& name) const;
  const Region& region(const std::string& name) const;

  /// Integrates one (already filtered) action.
  void step(const Action& a);

  /// Scene descriptor handed to the backends in place of a camera image.
  std::string descriptor() const;

  nlohmann::ordered_json snapshot() const;
  static SimEnv from_snapshot(const nlohmann::json& j);

 private:
  void update_stats();

  Box workspace_;
  Point ee_{};
  Gripper gripper_;
  std::vector<SimObject> objects_;
  std::vector<Region> regions_;
  EnvParams params_;
  std::vector<ObjectStats> stats_;
  std::optional<std::size_t> held_;
  Point hold_offset_{};
};

double distance(const Point& a, const Point& b);

/// Clamps each displacement so the end-effector stays inside the workspace box,
/// simulating the chunk action by action on a copy of `env`. Grippers pass
/// through. Returned deltas are exact micrometre multiples.
ActionChunk safety_filter(const ActionChunk& chunk, const SimEnv& env);

/// Applies `chunk` to `env` action by action.
void execute(SimEnv& env, const ActionChunk& chunk);

}  // namespace a2l::rollout

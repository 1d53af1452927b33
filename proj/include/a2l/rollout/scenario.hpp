#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "a2l/config/flat_config.hpp"
#include "a2l/rollout/episode.hpp"
#include "a2l/rollout/sim.hpp"

namespace a2l::rollout {

/// A desk-scale task: instruction, scene layout, rubric id and seeds.
struct Scenario {
  std::string id;
  std::string instruction;
  std::string rubric;
  bool ood = false;
  std::vector<std::uint64_t> seeds{0};
  /// Half-width (meters) of the uniform x/y perturbation applied to object
  /// starting positions, drawn from the episode seed.
  double jitter = 0.0;
  Box workspace;
  std::array<double, 3> ee{};
  Gripper gripper = Gripper::Open;
  std::vector<std::pair<std::string, std::array<double, 3>>> objects;
  std::vector<Region> regions;
  EnvParams params;

  /// Builds the starting environment for one seed.
  SimEnv make_env(std::uint64_t seed) const;
};

Scenario parse_scenario(const config::FlatConfig& cfg, const std::string& fallback_id);
Scenario load_scenario(const std::filesystem::path& path);

/// Uniform double in [0, 1) from one 64-bit draw; explicit so results do not
/// depend on the standard library's distribution implementations.
double unit_draw(std::uint64_t bits);

}  // namespace a2l::rollout

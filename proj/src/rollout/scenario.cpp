#include "a2l/rollout/scenario.hpp"

#include <random>

namespace a2l::rollout {

namespace {

std::array<double, 3> triple(const config::FlatConfig& cfg, const std::string& key) {
  const auto* v = cfg.find(key);
  if (v == nullptr) throw Error(ErrorKind::ConfigError, "scenario is missing '" + key + "'");
  if (!v->is_array() || v->as_array().size() != 3) {
    throw Error(ErrorKind::ConfigError, "'" + key + "' must be a 3-element array");
  }
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& x = v->as_array()[k];
    if (!x.is_number()) throw Error(ErrorKind::ConfigError, "'" + key + "' must hold numbers");
    out[k] = x.as_number();
  }
  return out;
}

std::string required_string(const config::FlatConfig& cfg, const std::string& key) {
  const auto* v = cfg.find(key);
  if (v == nullptr || !v->is_string() || v->as_string().empty()) {
    throw Error(ErrorKind::ConfigError, "scenario needs a nonempty string '" + key + "'");
  }
  return v->as_string();
}

}  // namespace

double unit_draw(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

Scenario parse_scenario(const config::FlatConfig& cfg, const std::string& fallback_id) {
  Scenario s;
  s.id = cfg.get_string("id", fallback_id);
  s.instruction = required_string(cfg, "instruction");
  s.rubric = cfg.get_string("rubric", s.id);
  s.ood = cfg.get_bool("ood", false);
  if (const auto* seeds = cfg.find("seeds")) {
    if (!seeds->is_array() || seeds->as_array().empty()) {
      throw Error(ErrorKind::ConfigError, "'seeds' must be a nonempty array");
    }
    s.seeds.clear();
    for (const auto& x : seeds->as_array()) {
      if (!x.is_number() || x.as_number() < 0) {
        throw Error(ErrorKind::ConfigError, "'seeds' must hold non-negative integers");
      }
      s.seeds.push_back(static_cast<std::uint64_t>(x.as_number()));
    }
  }
  s.jitter = cfg.get_number("jitter", 0.0);
  if (s.jitter < 0) throw Error(ErrorKind::ConfigError, "'jitter' must be >= 0");
  s.workspace = Box{triple(cfg, "workspace.lo"), triple(cfg, "workspace.hi")};
  s.workspace.validate("workspace");
  s.ee = triple(cfg, "robot.ee");
  const std::string g = cfg.get_string("robot.gripper", "open");
  if (g != "open" && g != "closed") throw Error(ErrorKind::ConfigError, "robot.gripper must be open or closed");
  s.gripper = g == "open" ? Gripper::Open : Gripper::Closed;
  for (const auto& name : cfg.children("objects")) {
    s.objects.emplace_back(name, triple(cfg, "objects." + name + ".pos"));
  }
  if (s.objects.empty()) throw Error(ErrorKind::ConfigError, "scenario declares no objects");
  for (const auto& name : cfg.children("regions")) {
    Region r{name, Box{triple(cfg, "regions." + name + ".lo"), triple(cfg, "regions." + name + ".hi")}};
    r.box.validate("region " + name);
    s.regions.push_back(std::move(r));
  }
  s.params.grasp_radius = cfg.get_number("env.grasp_radius", s.params.grasp_radius);
  s.params.contact_radius = cfg.get_number("env.contact_radius", s.params.contact_radius);
  s.params.lift_threshold = cfg.get_number("env.lift_threshold", s.params.lift_threshold);
  s.params.approach_distance = cfg.get_number("env.approach_distance", s.params.approach_distance);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(config::FlatConfig::load(path), path.stem().string());
}

SimEnv Scenario::make_env(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<SimObject> objs;
  for (const auto& [name, pos] : objects) {
    auto p = pos;
    if (jitter > 0) {
      for (std::size_t k = 0; k < 2; ++k) p[k] += (2.0 * unit_draw(rng()) - 1.0) * jitter;
    }
    const Point pt = to_point(p);
    objs.push_back({name, pt, pt});
  }
  return SimEnv(workspace, ee, gripper, std::move(objs), regions, params);
}

}  // namespace a2l::rollout

#include "a2l/rollout/sim.hpp"

#include <algorithm>
#include <cmath>

#include "a2l/core/number_format.hpp"
#include "a2l/errors.hpp"

namespace a2l::rollout {

using nlohmann::json;
using nlohmann::ordered_json;

Micro to_micro(double meters) { return static_cast<Micro>(std::llround(meters * 1e6)); }
double to_meters(Micro um) { return static_cast<double>(um) / 1e6; }

Point to_point(const std::array<double, 3>& m) {
  return {to_micro(m[0]), to_micro(m[1]), to_micro(m[2])};
}

std::array<double, 3> to_meters(const Point& p) {
  return {to_meters(p[0]), to_meters(p[1]), to_meters(p[2])};
}

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = to_meters(a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)]);
    s += d * d;
  }
  return std::sqrt(s);
}

void Box::validate(const std::string& what) const {
  for (std::size_t k = 0; k < 3; ++k) {
    if (!(lo[k] < hi[k])) {
      throw Error(ErrorKind::ConfigError, what + ": lo must be below hi on every axis");
    }
  }
}

bool Box::contains(const Point& p) const {
  for (std::size_t k = 0; k < 3; ++k) {
    if (p[k] < to_micro(lo[k]) || p[k] > to_micro(hi[k])) return false;
  }
  return true;
}

SimEnv::SimEnv(Box workspace, std::array<double, 3> ee, Gripper gripper,
               std::vector<SimObject> objects, std::vector<Region> regions, EnvParams params)
    : workspace_(workspace),
      ee_(to_point(ee)),
      gripper_(gripper),
      objects_(std::move(objects)),
      regions_(std::move(regions)),
      params_(params) {
  workspace_.validate("workspace");
  if (!workspace_.contains(ee_)) {
    throw Error(ErrorKind::ConfigError, "initial end-effector lies outside the workspace");
  }
  for (const auto& r : regions_) r.box.validate("region " + r.name);
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (objects_[i].name == objects_[j].name) {
        throw Error(ErrorKind::ConfigError, "duplicate object '" + objects_[i].name + "'");
      }
    }
  }
  stats_.resize(objects_.size());
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const double d = distance(ee_, objects_[i].pos);
    stats_[i].initial_ee_distance = d;
    stats_[i].min_ee_distance = d;
  }
}

std::size_t SimEnv::object_index(const std::string& name) const {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].name == name) return i;
  }
  throw Error(ErrorKind::UnknownEntity, "no object named '" + name + "'");
}

const Region& SimEnv::region(const std::string& name) const {
  for (const auto& r : regions_) {
    if (r.name == name) return r;
  }
  throw Error(ErrorKind::UnknownEntity, "no region named '" + name + "'");
}

void SimEnv::step(const Action& a) {
  validate_action(a, "step");
  for (std::size_t k = 0; k < 3; ++k) ee_[k] += to_micro(a.delta[k]);

  if (a.gripper == Gripper::Closed && gripper_ == Gripper::Open) {
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const double d = distance(ee_, objects_[i].pos);
      if (d <= params_.grasp_radius + 1e-12 && (!best || d < best_d)) {
        best = i;
        best_d = d;
      }
    }
    if (best) {
      held_ = best;
      for (std::size_t k = 0; k < 3; ++k) hold_offset_[k] = objects_[*best].pos[k] - ee_[k];
      stats_[*best].ever_held = true;
    }
  } else if (a.gripper == Gripper::Open && gripper_ == Gripper::Closed) {
    held_.reset();
  }
  gripper_ = a.gripper;

  if (held_) {
    auto& o = objects_[*held_];
    for (std::size_t k = 0; k < 3; ++k) o.pos[k] = ee_[k] + hold_offset_[k];
  }
  update_stats();
}

void SimEnv::update_stats() {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    auto& s = stats_[i];
    s.min_ee_distance = std::min(s.min_ee_distance, distance(ee_, objects_[i].pos));
    if (held_ && *held_ == i) {
      s.max_lift_while_held =
          std::max(s.max_lift_while_held, to_meters(objects_[i].pos[2] - objects_[i].initial[2]));
    }
  }
}

namespace {

std::string point_text(const Point& p) {
  return "[" + format_component(to_meters(p[0])) + ", " + format_component(to_meters(p[1])) + ", " +
         format_component(to_meters(p[2])) + "]";
}

std::array<double, 3> triple(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::MalformedRecord, what + " must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string SimEnv::descriptor() const {
  std::string out = "{\"ee\": " + point_text(ee_) + ", \"gripper\": \"" +
                    (gripper_ == Gripper::Open ? "open" : "closed") + "\", \"held\": ";
  out += held_ ? "\"" + objects_[*held_].name + "\"" : std::string("null");
  out += ", \"objects\": {";
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + objects_[i].name + "\": " + point_text(objects_[i].pos);
  }
  return out + "}}";
}

ordered_json SimEnv::snapshot() const {
  ordered_json j;
  j["ee"] = ee_meters();
  j["gripper"] = gripper_ == Gripper::Open ? "open" : "closed";
  j["held"] = held_ ? json(objects_[*held_].name) : json(nullptr);
  j["hold_offset"] = to_meters(hold_offset_);
  j["workspace"] = {{"lo", workspace_.lo}, {"hi", workspace_.hi}};
  j["params"] = {{"grasp_radius", params_.grasp_radius},
                 {"contact_radius", params_.contact_radius},
                 {"lift_threshold", params_.lift_threshold},
                 {"approach_distance", params_.approach_distance}};
  ordered_json objs = ordered_json::array();
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto& o = objects_[i];
    const auto& s = stats_[i];
    objs.push_back({{"name", o.name},
                    {"pos", to_meters(o.pos)},
                    {"initial", to_meters(o.initial)},
                    {"initial_ee_distance", s.initial_ee_distance},
                    {"min_ee_distance", s.min_ee_distance},
                    {"max_lift_while_held", s.max_lift_while_held},
                    {"ever_held", s.ever_held}});
  }
  j["objects"] = std::move(objs);
  ordered_json regs = ordered_json::array();
  for (const auto& r : regions_) regs.push_back({{"name", r.name}, {"lo", r.box.lo}, {"hi", r.box.hi}});
  j["regions"] = std::move(regs);
  return j;
}

SimEnv SimEnv::from_snapshot(const json& j) {
  try {
    Box ws{triple(j.at("workspace").at("lo"), "workspace.lo"),
           triple(j.at("workspace").at("hi"), "workspace.hi")};
    EnvParams p;
    const auto& jp = j.at("params");
    p.grasp_radius = jp.at("grasp_radius").get<double>();
    p.contact_radius = jp.at("contact_radius").get<double>();
    p.lift_threshold = jp.at("lift_threshold").get<double>();
    p.approach_distance = jp.value("approach_distance", p.approach_distance);
    std::vector<SimObject> objs;
    for (const auto& o : j.at("objects")) {
      objs.push_back({o.at("name").get<std::string>(), to_point(triple(o.at("pos"), "pos")),
                      to_point(triple(o.at("initial"), "initial"))});
    }
    std::vector<Region> regs;
    for (const auto& r : j.at("regions")) {
      regs.push_back({r.at("name").get<std::string>(),
                      Box{triple(r.at("lo"), "region.lo"), triple(r.at("hi"), "region.hi")}});
    }
    const Gripper g = j.at("gripper").get<std::string>() == "open" ? Gripper::Open : Gripper::Closed;
    SimEnv env(ws, triple(j.at("ee"), "ee"), g, std::move(objs), std::move(regs), p);
    std::size_t i = 0;
    for (const auto& o : j.at("objects")) {
      auto& s = env.stats_[i++];
      s.initial_ee_distance = o.at("initial_ee_distance").get<double>();
      s.min_ee_distance = o.at("min_ee_distance").get<double>();
      s.max_lift_while_held = o.at("max_lift_while_held").get<double>();
      s.ever_held = o.at("ever_held").get<bool>();
    }
    if (!j.at("held").is_null()) {
      env.held_ = env.object_index(j.at("held").get<std::string>());
      env.hold_offset_ = to_point(triple(j.at("hold_offset"), "hold_offset"));
    }
    return env;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("bad environment snapshot: ") + e.what());
  }
}

ActionChunk safety_filter(const ActionChunk& chunk, const SimEnv& env) {
  SimEnv sim = env;
  const Point lo = to_point(env.workspace().lo);
  const Point hi = to_point(env.workspace().hi);
  ActionChunk out;
  out.reserve(chunk.size());
  for (const auto& a : chunk) {
    Action f = a;
    for (std::size_t k = 0; k < 3; ++k) {
      const Micro cur = sim.ee()[k];
      const Micro target = std::clamp(cur + to_micro(a.delta[k]), lo[k], hi[k]);
      f.delta[k] = to_meters(target - cur);
    }
    sim.step(f);
    out.push_back(f);
  }
  return out;
}

void execute(SimEnv& env, const ActionChunk& chunk) {
  for (const auto& a : chunk) env.step(a);
}

}  // namespace a2l::rollout

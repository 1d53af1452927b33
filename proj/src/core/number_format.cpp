#include "a2l/core/number_format.hpp"

#include <cstdio>
#include <cstdlib>

namespace a2l {

std::string format_component(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "0.000" || s == "-0.000") return "0.0";
  return s;
}

std::string format_gripper(Gripper g) { return g == Gripper::Open ? "1.0" : "0.0"; }

std::string format_action(const Action& a) {
  return "[" + format_component(a.dx()) + ", " + format_component(a.dy()) + ", " +
         format_component(a.dz()) + ", " + format_gripper(a.gripper) + "]";
}

double quantize3(double v) { return std::strtod(format_component(v).c_str(), nullptr); }

Action quantize3(const Action& a) {
  Action q = a;
  for (auto& d : q.delta) d = quantize3(d);
  return q;
}

ActionChunk quantize3(const ActionChunk& c) {
  ActionChunk out;
  out.reserve(c.size());
  for (const auto& a : c) out.push_back(quantize3(a));
  return out;
}

}  // namespace a2l

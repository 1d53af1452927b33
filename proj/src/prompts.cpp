#include "a2l/prompts.hpp"

#include <json.hpp>

#include "a2l/core/number_format.hpp"
#include "a2l/errors.hpp"
#include "a2l/prompts_generated.hpp"

namespace a2l::prompts {

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto it = slots.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string annotation_prompt(std::string_view trajectory_log_content) {
  return substitute(assets::k_annotation_v1,
                    {{"trajectory_log_content", std::string(trajectory_log_content)}});
}

std::string trajectory_log(const RawTrajectory& raw) {
  std::string lines;
  for (std::size_t t = 0; t < raw.frames.size(); ++t) {
    if (t) lines += '\n';
    lines += format_action(raw.frames[t].action);
  }
  return substitute(assets::k_trajectory_log_v1,
                    {{"main_instruction", raw.instruction}, {"action_lines", lines}});
}

std::string subtask_prompt(std::string_view main_task) {
  return substitute(assets::k_subtask_v1, {{"main_task", std::string(main_task)}});
}

std::string motion_plan_prompt(std::string_view subtask) {
  return substitute(assets::k_motion_plan_v1, {{"subtask", std::string(subtask)}});
}

std::string action_prompt(std::string_view subtask, std::string_view motion_plan) {
  return substitute(assets::k_action_v1, {{"subtask", std::string(subtask)},
                                          {"motion_plan", std::string(motion_plan)}});
}

std::string_view verifier_instructions() { return assets::k_verifier_v1; }
std::string_view verifier_output_format() { return assets::k_verifier_format_v1; }

std::string verifier_prompt(std::string_view subtask,
                            const std::optional<std::string>& next_subtask) {
  std::string out(assets::k_verifier_v1);
  out += "\n\nCurrent Subtask: ";
  out += subtask;
  out += "\nNext Subtask: ";
  out += next_subtask ? *next_subtask : std::string("None (final subtask)");
  out += "\n\n";
  out += assets::k_verifier_format_v1;
  return out;
}

std::string verdict_json(bool success, std::string_view confidence, std::string_view reasoning) {
  nlohmann::ordered_json j;
  j["success"] = success;
  j["confidence"] = std::string(confidence);
  j["reasoning"] = std::string(reasoning);
  return j.dump();
}

std::string render_subtask_list(const std::vector<std::string>& subtasks) {
  std::string out = "[";
  for (std::size_t i = 0; i < subtasks.size(); ++i) {
    if (i) out += ", ";
    out += '\'';
    for (char c : subtasks[i]) {
      if (c == '\'' || c == '\\') out += '\\';
      out += c;
    }
    out += '\'';
  }
  return out + "]";
}

std::string direction_prompt(std::string_view subtask, Axis axis) {
  static constexpr const char* names[] = {"x", "y", "z"};
  static constexpr const char* pos[] = {"forward", "left", "up"};
  static constexpr const char* neg[] = {"backward", "right", "down"};
  const auto k = static_cast<std::size_t>(axis);
  return std::string("During the sub-task '") + std::string(subtask) + "', does the end-effector move " +
         pos[k] + " (+d" + names[k] + ") or " + neg[k] + " (-d" + names[k] +
         ")? Answer with one word.";
}

std::string_view template_text(std::string_view name) {
  if (name == "annotation") return assets::k_annotation_v1;
  if (name == "trajectory_log") return assets::k_trajectory_log_v1;
  if (name == "subtask") return assets::k_subtask_v1;
  if (name == "motion_plan") return assets::k_motion_plan_v1;
  if (name == "action") return assets::k_action_v1;
  if (name == "verifier") return assets::k_verifier_v1;
  if (name == "verifier_format") return assets::k_verifier_format_v1;
  throw Error(ErrorKind::Precondition, "unknown template '" + std::string(name) + "'");
}

}  // namespace a2l::prompts

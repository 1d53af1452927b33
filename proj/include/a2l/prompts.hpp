#pragma once

#include <map>
#include <optional>
#include <vector>
#include <string>
#include <string_view>

#include "a2l/core/types.hpp"

namespace a2l::prompts {

inline constexpr std::string_view kAnnotationPromptVersion = "a1-v1";

/// Replaces "{name}" slots in one left-to-right pass; substituted text is never
/// rescanned, unknown slots are left as-is.
std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& slots);

/// Relabeling request body (coordinate-convention preamble, output schema, log).
std::string annotation_prompt(std::string_view trajectory_log_content);
/// Instruction plus one canonical action line per frame.
std::string trajectory_log(const RawTrajectory& raw);

std::string subtask_prompt(std::string_view main_task);
std::string motion_plan_prompt(std::string_view subtask);
std::string action_prompt(std::string_view subtask, std::string_view motion_plan);

std::string_view verifier_instructions();
std::string_view verifier_output_format();

/// Verifier user text: instructions, the current/next subtask lines, output format.
/// The two observations travel as image parts.
std::string verifier_prompt(std::string_view subtask, const std::optional<std::string>& next_subtask);

/// {"success": .., "confidence": .., "reasoning": ..} on one line.
std::string verdict_json(bool success, std::string_view confidence, std::string_view reasoning);

/// "['Move to Pot', 'Grasp Pot']" with backslash escapes for quotes.
std::string render_subtask_list(const std::vector<std::string>& subtasks);

/// Direction question used for the directional augmentation samples.
std::string direction_prompt(std::string_view subtask, Axis axis);

/// Raw template text, for golden tests.
std::string_view template_text(std::string_view name);

}  // namespace a2l::prompts

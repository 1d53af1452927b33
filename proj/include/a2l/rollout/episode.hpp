#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "a2l/backend/client.hpp"
#include "a2l/rollout/sim.hpp"

namespace a2l::rollout {

struct RolloutConfig {
  double subtask_temperature = 0.5;
  /// Used instead of subtask_temperature for out-of-distribution scenarios.
  double subtask_temperature_ood = 1.0;
  bool ood = false;
  double motion_temperature = 0.1;
  double action_temperature = 0.5;
  double verifier_temperature = 0.0;
  double top_p = 0.95;
  int max_tokens = 1024;
  int max_retries = 3;
  /// 0: N * (1 + max_retries).
  int max_cycles = 0;

  void validate() const;
  double planning_temperature() const { return ood ? subtask_temperature_ood : subtask_temperature; }
};

/// "['Move to Pot', 'Grasp Pot']" -> items. Throws ParseFailure when no list is
/// present, EmptyPlan for "[]".
std::vector<std::string> parse_subtask_list(std::string_view text);

std::vector<std::string> plan_subtasks(backend::BackendClient& policy, const std::string& obs,
                                       const std::string& instruction, const RolloutConfig& cfg);

std::string gen_motion_plan(backend::BackendClient& policy, const std::string& obs,
                            const std::string& subtask, const RolloutConfig& cfg);

struct GeneratedActions {
  ActionChunk chunk;
  std::string text;  // reply that parsed
  bool reprompted = false;
};

/// Throws ParseFailure when the reply still does not parse after one corrective reprompt.
GeneratedActions gen_actions(backend::BackendClient& policy, const std::string& obs,
                             const std::string& subtask, const std::string& motion_plan,
                             const RolloutConfig& cfg);

enum class Confidence { High, Medium, Low };
std::string to_string(Confidence c);

struct VerifierVerdict {
  bool success = false;
  Confidence confidence = Confidence::Low;
  std::string reasoning;
  bool parse_failed = false;
  friend bool operator==(const VerifierVerdict&, const VerifierVerdict&) = default;
};

/// Strict reading of {"success": bool, "confidence": High|Medium|Low, "reasoning": str};
/// a surrounding code fence is allowed. Throws VerdictParseFailure.
VerifierVerdict parse_verdict(std::string_view text);

/// Falls back to a Low-confidence failure (parse_failed set) when the reply is
/// malformed twice.
VerifierVerdict verify(backend::BackendClient& verifier, const std::string& obs_before,
                       const std::string& obs_after, const std::string& subtask,
                       const std::optional<std::string>& next_subtask, const RolloutConfig& cfg);

struct StageLatency {
  double motion_s = 0.0;
  double action_s = 0.0;
  double verify_s = 0.0;
  /// One inference cycle: motion-plan plus action generation.
  double cycle_s = 0.0;
};

struct CycleRecord {
  std::size_t subtask_index = 0;
  int attempt = 1;
  double t_start = 0.0;
  std::string motion_plan;
  std::string action_text;
  std::optional<ActionChunk> parsed;
  std::optional<ActionChunk> filtered;
  std::string parse_error;
  std::optional<VerifierVerdict> verdict;
  StageLatency latency;
  nlohmann::ordered_json before;
  nlohmann::ordered_json after;
};

struct RolloutLog {
  std::string episode_id;
  std::string scenario;
  std::string rubric;
  std::string instruction;
  std::uint64_t seed = 0;
  std::vector<std::string> subtasks;
  std::vector<std::string> subtask_outcomes;  // "verified" or "forced_advance" per advanced subtask
  std::vector<CycleRecord> cycles;
  std::string status;  // complete, forced_advance, cap_exceeded, aborted
  std::string abort_reason;
  nlohmann::ordered_json initial_env;
  nlohmann::ordered_json final_env;

  /// Planned subtasks and every motion plan, for keyword-based planning credit.
  std::string planning_text() const;
};

nlohmann::ordered_json log_to_json(const RolloutLog& log);
RolloutLog log_from_json(const nlohmann::ordered_json& j);
void save_log(const RolloutLog& log, const std::filesystem::path& path);
RolloutLog load_log(const std::filesystem::path& path);

/// Episode abort after an unrecoverable backend or planning failure. Carries the
/// partial log (status "aborted").
class EpisodeAbortedError : public Error {
 public:
  EpisodeAbortedError(const std::string& reason, RolloutLog partial)
      : Error(ErrorKind::EpisodeAborted, reason), partial_(std::move(partial)) {}
  const RolloutLog& partial() const noexcept { return partial_; }

 private:
  RolloutLog partial_;
};

/// Plan once, then loop motion plan -> actions -> safety filter -> execute ->
/// verify, advancing on success and retrying up to max_retries times otherwise.
RolloutLog run_episode(backend::BackendClient& policy, backend::BackendClient& verifier, SimEnv& env,
                       const std::string& instruction, const RolloutConfig& cfg,
                       const std::string& episode_id = "episode");

}  // namespace a2l::rollout

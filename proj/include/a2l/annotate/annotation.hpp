#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "a2l/backend/client.hpp"
#include "a2l/codec/coalesce.hpp"
#include "a2l/core/types.hpp"
#include "a2l/prompts.hpp"

namespace a2l::annotate {

struct AnnotationJobConfig {
  std::string model;  // empty: use the backend's configured model
  int max_attempts = 3;
  int concurrency = 4;
  std::string prompt_version = std::string(prompts::kAnnotationPromptVersion);
  double temperature = 0.0;
  codec::CoalesceConfig coalesce;

  void validate() const;
};

/// One step as the annotator wrote it, before alignment to raw frames.
struct StepFragment {
  std::string subtask;
  std::string reasoning;
  std::string main_movements;
  ActionChunk actions;
};

backend::ChatRequest build_annotation_request(const RawTrajectory& raw,
                                              const AnnotationJobConfig& cfg = {});

/// Parses the annotator's JSON list of {STEP_DESCRIPTION, REASONING,
/// MAIN_MOVEMENTS, ACTIONS}. Key names are matched case-insensitively.
std::vector<StepFragment> parse_annotation(std::string_view text);

/// Checks that the fragments' actions, concatenated, equal the raw actions
/// (same count, each component within `tolerance`, identical gripper) and
/// returns, per step, the index of the first raw frame it consumes.
std::vector<std::size_t> validate_partition(const RawTrajectory& raw,
                                            const std::vector<StepFragment>& fragments,
                                            double tolerance = 5e-4);

struct AttemptRecord {
  std::string trajectory_id;
  int attempt = 0;
  std::string outcome;  // "ok" or the failure message
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

using AttemptSink = std::function<void(const AttemptRecord&)>;

/// Relabels one trajectory, re-asking with a corrective note after each
/// parse/validation failure, then coalesces each step's actions.
AnnotatedTrajectory annotate(const RawTrajectory& raw, backend::BackendClient& client,
                             const AnnotationJobConfig& cfg, const AttemptSink& sink = {});

using ClientFactory = std::function<std::shared_ptr<backend::BackendClient>(std::size_t index)>;

/// Annotates every trajectory with at most `cfg.concurrency` in flight.
/// Results come back in input order; the first failure (in input order) is rethrown.
std::vector<AnnotatedTrajectory> annotate_all(const std::vector<RawTrajectory>& raws,
                                              const ClientFactory& clients,
                                              const AnnotationJobConfig& cfg,
                                              const AttemptSink& sink = {});

struct VerifierPairSample {
  std::size_t step = 0;   // i
  std::size_t after = 0;  // j
  std::string obs_before;
  std::string obs_after;
  std::string subtask;
  std::optional<std::string> next_subtask;
  bool label = false;  // true iff j == i + 1
};

struct VerifierPairs {
  std::vector<VerifierPairSample> samples;
  std::size_t skipped_negatives = 0;
};

/// One positive (j = i+1) and one seeded uniform negative per step. Observation
/// index N is the trajectory's terminal observation.
VerifierPairs make_verifier_pairs(const AnnotatedTrajectory& t, std::uint64_t seed);

struct DirectionSample {
  std::string obs;
  std::string subtask;
  std::size_t step = 0;
  Axis axis = Axis::X;
  std::string label;  // forward/backward, left/right, up/down, or "none"
  double net = 0.0;
};

inline constexpr double kDirectionThreshold = 0.025;

std::string direction_word(Axis axis, double net, double threshold = kDirectionThreshold);

std::vector<DirectionSample> make_direction_samples(const AnnotatedTrajectory& t,
                                                    double threshold = kDirectionThreshold);

}  // namespace a2l::annotate

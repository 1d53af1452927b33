#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "a2l/backend/chat.hpp"
#include "a2l/codec/token_map.hpp"
#include "a2l/core/types.hpp"

namespace a2l::sft {

enum class Stage { Subtask, MotionPlan, Action, VerifierPair, DirectionAux };
enum class Variant { Language, ActionToken };

std::string to_string(Stage s);
std::string to_string(Variant v);
Stage stage_from_string(const std::string& s);

struct SftMessage {
  backend::Role role = backend::Role::User;
  std::string text;
  std::vector<std::string> images;
  friend bool operator==(const SftMessage&, const SftMessage&) = default;
};

struct SftSample {
  Stage stage = Stage::Action;
  Variant variant = Variant::Language;
  std::string traj;
  std::size_t step = 0;
  std::vector<SftMessage> messages;

  const SftMessage& assistant() const;
  const SftMessage& user() const;
  friend bool operator==(const SftSample&, const SftSample&) = default;
};

/// Throws InvariantViolation unless there is exactly one assistant turn and it
/// is last, and every user turn of an observation-conditioned stage has an image.
void validate_sample(const SftSample& s);

struct ExportConfig {
  /// Also emit a remaining-subtask sample at every step, not just step 0.
  bool per_step_subtasks = false;
  bool verifier_pairs = true;
  bool direction_aux = true;
  std::uint64_t pair_seed = 0;
  double direction_threshold = 0.025;
};

/// Subtask (once, at step 0), motion-plan and action samples for one trajectory.
std::vector<SftSample> export_stage_samples(const AnnotatedTrajectory& t,
                                            const ExportConfig& cfg = {});

/// Verifier-pair and directional augmentation samples.
std::vector<SftSample> export_augmentation_samples(const AnnotatedTrajectory& t,
                                                   const ExportConfig& cfg = {});

SftSample to_at_variant(const SftSample& s, const codec::TokenMap& map);

std::string sample_to_line(const SftSample& s);
SftSample sample_from_line(const std::string& line);

/// Sorts by (trajectory, step, stage), applies a seeded shuffle and writes one
/// conversation per line. Manifest counts are per stage.
DatasetManifest write_sft_jsonl(std::vector<SftSample> samples, const std::filesystem::path& path,
                                std::uint64_t seed);

/// Order the samples would be written in, without touching the disk.
std::vector<SftSample> shuffled(std::vector<SftSample> samples, std::uint64_t seed);

class TrainingManifest {
 public:
  /// Defaults taken from the reference fine-tuning run.
  TrainingManifest();

  /// Throws UnknownField for an unknown key, ConfigError for a malformed value.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;

  /// `key = value` lines in a fixed order.
  std::string to_text() const;
  static TrainingManifest parse(const std::string& text);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  friend bool operator==(const TrainingManifest&, const TrainingManifest&) = default;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

TrainingManifest emit_training_manifest(const std::map<std::string, std::string>& overrides = {});

}  // namespace a2l::sft

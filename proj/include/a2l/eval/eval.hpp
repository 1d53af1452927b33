#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "a2l/backend/client.hpp"
#include "a2l/codec/token_map.hpp"
#include "a2l/config/flat_config.hpp"
#include "a2l/rollout/episode.hpp"
#include "a2l/rollout/sim.hpp"

namespace a2l::eval {

/// Synonym groups; text passes when every group has a member as a
/// case-insensitive substring.
struct KeywordSpec {
  std::vector<std::vector<std::string>> groups;
  void validate() const;
};

bool keyword_score(std::string_view text, const KeywordSpec& spec);

/// One predicate of a milestone. Kinds: plan, contacted, lifted, placed, moved_toward.
struct Atom {
  std::string kind;
  std::string object;
  std::string region;  // placed only
  std::string text() const;
};

Atom parse_atom(const std::string& text);

struct Milestone {
  std::vector<Atom> all_of;
  std::string text() const;
};

/// Milestone k (0-based) is worth k + 1 points; points for a trial are the
/// length of the longest satisfied prefix.
struct Rubric {
  std::string id;
  int max_points = 0;
  std::vector<Milestone> milestones;
  std::optional<KeywordSpec> keywords;

  void validate() const;
};

Rubric parse_rubric(const config::FlatConfig& cfg, const std::string& fallback_id);
Rubric load_rubric(const std::filesystem::path& path);

struct MilestoneResult {
  std::string milestone;
  bool achieved = false;
};

struct ScoreCard {
  std::string episode_id;
  std::string rubric_id;
  int points = 0;
  int max_points = 0;
  std::vector<MilestoneResult> trace;
  std::optional<bool> keyword_pass;
};

bool atom_holds(const Atom& a, const rollout::RolloutLog& log, const rollout::SimEnv& env,
                const Rubric& rubric);

/// Throws UnknownEntity when the rubric names an object or region the scene lacks.
ScoreCard score_trial(const rollout::RolloutLog& log, const rollout::SimEnv& env_final,
                      const Rubric& rubric);

struct LatencyStats {
  std::size_t count = 0;
  double median = 0.0;
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1); 0 for a single value
  double p25 = 0.0;
  double p75 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Percentiles interpolate linearly between order statistics. Throws
/// EmptyInput for no durations, Precondition for a non-positive one.
LatencyStats latency_stats(std::vector<double> durations);

/// Inference-cycle durations of every cycle in the log.
std::vector<double> cycle_durations(const rollout::RolloutLog& log);

nlohmann::ordered_json stats_to_json(const LatencyStats& s);
std::string stats_table(const LatencyStats& s);

struct ProbeResult {
  std::string language_text;
  std::string at_text;
  double language_mean = 0.0;
  double at_mean = 0.0;
};

/// Mean per-token log-probability of the chunk written as language and as
/// reserved tokens, both forced under the same prompt.
ProbeResult representation_probe(backend::BackendClient& client,
                                 const std::vector<backend::Message>& prompt,
                                 const ActionChunk& chunk, const codec::TokenMap& map);

/// "index,language_mean,at_mean" rows.
std::string probe_csv(const std::vector<ProbeResult>& results);

struct ScenarioSummary {
  std::string scenario;
  std::string rubric_id;
  std::size_t trials = 0;
  int points = 0;
  int max_points = 0;
  double mean_fraction = 0.0;
};

struct EvalReport {
  std::vector<ScoreCard> cards;
  std::vector<ScenarioSummary> summaries;
};

/// Groups cards by scenario (the order scenarios first appear in `scenarios`).
EvalReport build_report(const std::vector<ScoreCard>& cards, const std::vector<std::string>& scenarios);
nlohmann::ordered_json report_to_json(const EvalReport& r);
std::string report_table(const EvalReport& r);

}  // namespace a2l::eval

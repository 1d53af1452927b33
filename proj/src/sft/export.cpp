#include "a2l/sft/export.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "a2l/annotate/annotation.hpp"
#include "a2l/codec/action_text.hpp"
#include "a2l/core/dataset_io.hpp"
#include "a2l/prompts.hpp"

namespace a2l::sft {

using nlohmann::ordered_json;

namespace {

SftMessage user_msg(std::string text, std::vector<std::string> images) {
  return {backend::Role::User, std::move(text), std::move(images)};
}

SftMessage assistant_msg(std::string text) { return {backend::Role::Assistant, std::move(text), {}}; }

SftSample make(Stage stage, const AnnotatedTrajectory& t, std::size_t step, SftMessage user,
               SftMessage reply) {
  SftSample s;
  s.stage = stage;
  s.traj = t.id;
  s.step = step;
  s.messages = {std::move(user), std::move(reply)};
  return s;
}

backend::Role role_from_string(const std::string& r) {
  if (r == "system") return backend::Role::System;
  if (r == "user") return backend::Role::User;
  if (r == "assistant") return backend::Role::Assistant;
  throw Error(ErrorKind::MalformedRecord, "unknown role '" + r + "'");
}

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Subtask:
      return "subtask";
    case Stage::MotionPlan:
      return "motion_plan";
    case Stage::Action:
      return "action";
    case Stage::VerifierPair:
      return "verifier_pair";
    case Stage::DirectionAux:
      return "direction_aux";
  }
  return "?";
}

std::string to_string(Variant v) { return v == Variant::Language ? "language" : "action_token"; }

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::Subtask, Stage::MotionPlan, Stage::Action, Stage::VerifierPair,
                   Stage::DirectionAux}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorKind::MalformedRecord, "unknown stage '" + s + "'");
}

const SftMessage& SftSample::assistant() const {
  if (messages.empty() || messages.back().role != backend::Role::Assistant) {
    throw Error(ErrorKind::InvariantViolation, "sample does not end with an assistant turn");
  }
  return messages.back();
}

const SftMessage& SftSample::user() const {
  for (const auto& m : messages) {
    if (m.role == backend::Role::User) return m;
  }
  throw Error(ErrorKind::InvariantViolation, "sample has no user turn");
}

void validate_sample(const SftSample& s) {
  std::size_t assistants = 0;
  for (const auto& m : s.messages) assistants += m.role == backend::Role::Assistant;
  if (assistants != 1 || s.messages.back().role != backend::Role::Assistant) {
    throw Error(ErrorKind::InvariantViolation,
                s.traj + ": sample must have exactly one assistant turn, last");
  }
  // Every exported stage conditions on at least one observation.
  for (const auto& m : s.messages) {
    if (m.role == backend::Role::User && m.images.empty()) {
      throw Error(ErrorKind::InvariantViolation,
                  s.traj + ": " + to_string(s.stage) + " user turn needs an observation");
    }
  }
}

std::vector<SftSample> export_stage_samples(const AnnotatedTrajectory& t, const ExportConfig& cfg) {
  validate_annotated(t);
  std::vector<std::string> subtasks;
  for (const auto& s : t.steps) subtasks.push_back(s.subtask);

  std::vector<SftSample> out;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& st = t.steps[i];
    if (i == 0 || cfg.per_step_subtasks) {
      const std::vector<std::string> remaining(subtasks.begin() + static_cast<std::ptrdiff_t>(i),
                                               subtasks.end());
      out.push_back(make(Stage::Subtask, t, i, user_msg(prompts::subtask_prompt(t.instruction), {st.obs}),
                         assistant_msg(prompts::render_subtask_list(remaining))));
    }
    out.push_back(make(Stage::MotionPlan, t, i,
                       user_msg(prompts::motion_plan_prompt(st.subtask), {st.obs}),
                       assistant_msg(st.main_movements)));
    out.push_back(make(Stage::Action, t, i,
                       user_msg(prompts::action_prompt(st.subtask, st.main_movements), {st.obs}),
                       assistant_msg(codec::serialize_chunk(st.coalesced))));
  }
  return out;
}

std::vector<SftSample> export_augmentation_samples(const AnnotatedTrajectory& t,
                                                   const ExportConfig& cfg) {
  validate_annotated(t);
  std::vector<SftSample> out;
  if (cfg.verifier_pairs && t.terminal_obs) {
    for (const auto& p : annotate::make_verifier_pairs(t, cfg.pair_seed).samples) {
      const std::string reasoning =
          p.label ? "The second image shows that '" + p.subtask + "' was completed."
                  : "The second image does not show '" + p.subtask + "' completed.";
      out.push_back(make(Stage::VerifierPair, t, p.step,
                         user_msg(prompts::verifier_prompt(p.subtask, p.next_subtask),
                                  {p.obs_before, p.obs_after}),
                         assistant_msg(prompts::verdict_json(p.label, "High", reasoning))));
    }
  }
  if (cfg.direction_aux) {
    for (const auto& d : annotate::make_direction_samples(t, cfg.direction_threshold)) {
      if (d.label == "none") continue;
      out.push_back(make(Stage::DirectionAux, t, d.step,
                         user_msg(prompts::direction_prompt(d.subtask, d.axis), {d.obs}),
                         assistant_msg(d.label)));
    }
  }
  return out;
}

SftSample to_at_variant(const SftSample& s, const codec::TokenMap& map) {
  if (s.stage != Stage::Action) {
    throw Error(ErrorKind::WrongStage, "AT variant applies to action samples, got " + to_string(s.stage));
  }
  SftSample out = s;
  for (auto& m : out.messages) {
    if (m.role == backend::Role::Assistant) m.text = codec::encode_at(m.text, map);
  }
  out.variant = Variant::ActionToken;
  return out;
}

std::string sample_to_line(const SftSample& s) {
  ordered_json j;
  j["stage"] = to_string(s.stage);
  j["variant"] = to_string(s.variant);
  j["source"] = {{"traj", s.traj}, {"step", s.step}};
  ordered_json msgs = ordered_json::array();
  for (const auto& m : s.messages) {
    ordered_json jm;
    jm["role"] = backend::to_string(m.role);
    jm["text"] = m.text;
    jm["images"] = m.images;
    msgs.push_back(std::move(jm));
  }
  j["messages"] = std::move(msgs);
  return j.dump();
}

SftSample sample_from_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    SftSample s;
    s.stage = stage_from_string(j.at("stage").get<std::string>());
    const auto v = j.at("variant").get<std::string>();
    if (v != "language" && v != "action_token") {
      throw Error(ErrorKind::MalformedRecord, "unknown variant '" + v + "'");
    }
    s.variant = v == "language" ? Variant::Language : Variant::ActionToken;
    s.traj = j.at("source").at("traj").get<std::string>();
    s.step = j.at("source").at("step").get<std::size_t>();
    for (const auto& m : j.at("messages")) {
      s.messages.push_back({role_from_string(m.at("role").get<std::string>()),
                            m.at("text").get<std::string>(),
                            m.at("images").get<std::vector<std::string>>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("bad SFT line: ") + e.what());
  }
}

std::vector<SftSample> shuffled(std::vector<SftSample> samples, std::uint64_t seed) {
  // Canonical order first so the result does not depend on the input order.
  std::vector<std::pair<std::string, SftSample>> keyed;
  keyed.reserve(samples.size());
  for (auto& s : samples) keyed.emplace_back(sample_to_line(s), std::move(s));
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.second.traj != b.second.traj) return a.second.traj < b.second.traj;
    if (a.second.step != b.second.step) return a.second.step < b.second.step;
    if (a.second.stage != b.second.stage) return static_cast<int>(a.second.stage) < static_cast<int>(b.second.stage);
    return a.first < b.first;
  });
  for (std::size_t i = 0; i < keyed.size(); ++i) samples[i] = std::move(keyed[i].second);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t i = samples.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(samples[i - 1], samples[j]);
  }
  return samples;
}

DatasetManifest write_sft_jsonl(std::vector<SftSample> samples, const std::filesystem::path& path,
                                std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorKind::Precondition, "no SFT samples to write");
  DatasetManifest m;
  m.dataset_id = path.stem().string();
  m.source = "sft";
  std::string text;
  for (const auto& s : shuffled(std::move(samples), seed)) {
    validate_sample(s);
    text += sample_to_line(s);
    text += '\n';
    ++m.counts[to_string(s.stage)];
  }
  write_text_file(path, text);
  return m;
}

namespace {

enum class FieldKind { Text, PositiveInt, Number };

struct FieldSpec {
  const char* key;
  const char* value;
  FieldKind kind;
};

constexpr FieldSpec kFields[] = {
    {"base_model", "Gemma-3-12B-IT", FieldKind::Text},
    {"frameworks", "TRL, Accelerate, DeepSpeed (ZeRO Stage 2)", FieldKind::Text},
    {"fine_tuning_method", "PEFT (LoRA)", FieldKind::Text},
    {"precision", "bf16", FieldKind::Text},
    {"lora_rank", "16", FieldKind::PositiveInt},
    {"lora_alpha", "32", FieldKind::PositiveInt},
    {"target_modules", "q_proj,k_proj,v_proj,o_proj,up_proj,down_proj,gate_proj", FieldKind::Text},
    {"optimizer", "AdamW", FieldKind::Text},
    {"learning_rate", "5e-5", FieldKind::Number},
    {"lr_scheduler", "linear decay", FieldKind::Text},
    {"adam_beta1", "0.9", FieldKind::Number},
    {"adam_beta2", "0.999", FieldKind::Number},
    {"adam_epsilon", "1e-8", FieldKind::Number},
    {"global_batch_size", "1", FieldKind::PositiveInt},
    {"per_device_batch_size", "1", FieldKind::PositiveInt},
    {"gradient_accumulation_steps", "2", FieldKind::PositiveInt},
    {"effective_batch_size", "8", FieldKind::PositiveInt},
    {"max_seq_length", "1024", FieldKind::PositiveInt},
    {"epochs", "1", FieldKind::PositiveInt},
};

const FieldSpec* field_spec(const std::string& key) {
  for (const auto& f : kFields) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double d = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw Error(ErrorKind::ConfigError, key + ": '" + v + "' is not a number");
  }
  return d;
}

}  // namespace

TrainingManifest::TrainingManifest() {
  for (const auto& f : kFields) entries_.emplace_back(f.key, f.value);
}

void TrainingManifest::set(const std::string& key, const std::string& value) {
  const FieldSpec* spec = field_spec(key);
  if (spec == nullptr) throw Error(ErrorKind::UnknownField, "unknown training field '" + key + "'");
  const std::string v = trim(value);
  if (v.empty() || v.find('\n') != std::string::npos) {
    throw Error(ErrorKind::ConfigError, key + ": value must be a nonempty single line");
  }
  if (spec->kind == FieldKind::Number) parse_double(key, v);
  if (spec->kind == FieldKind::PositiveInt) {
    long long n = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || p != v.data() + v.size() || n < 1) {
      throw Error(ErrorKind::ConfigError, key + ": '" + v + "' is not a positive integer");
    }
  }
  for (auto& [k, val] : entries_) {
    if (k == key) val = v;
  }
}

const std::string& TrainingManifest::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw Error(ErrorKind::UnknownField, "unknown training field '" + key + "'");
}

double TrainingManifest::number(const std::string& key) const { return parse_double(key, get(key)); }

std::string TrainingManifest::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

TrainingManifest TrainingManifest::parse(const std::string& text) {
  TrainingManifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigError, "manifest line " + std::to_string(no) + " has no '='");
    }
    m.set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return m;
}

TrainingManifest emit_training_manifest(const std::map<std::string, std::string>& overrides) {
  TrainingManifest m;
  for (const auto& [k, v] : overrides) m.set(k, v);
  return m;
}

}  // namespace a2l::sft

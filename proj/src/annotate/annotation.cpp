#include "a2l/annotate/annotation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <json.hpp>

#include "a2l/codec/action_text.hpp"
#include "a2l/core/number_format.hpp"

namespace a2l::annotate {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Models sometimes wrap long strings across lines; JSON forbids raw control
// characters inside strings, so fold them (and the indentation after a newline)
// into one space.
std::string fold_string_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!in_string) {
      if (c == '"') in_string = true;
      out.push_back(c);
      continue;
    }
    if (escaped) {
      escaped = false;
      out.push_back(c);
      continue;
    }
    if (c == '\\') {
      escaped = true;
      out.push_back(c);
    } else if (c == '"') {
      in_string = false;
      out.push_back(c);
    } else if (c == '\n' || c == '\r') {
      while (i + 1 < text.size() && std::isspace(static_cast<unsigned char>(text[i + 1]))) ++i;
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else if (c == '\t') {
      out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

json parse_top_level(std::string_view text) {
  const auto fence = codec::strip_code_fences(text);
  const std::string body = fold_string_newlines(fence.body);
  try {
    return json::parse(body);
  } catch (const json::exception&) {
  }
  std::size_t from = 0;
  while (true) {
    const auto [b, e] = codec::find_balanced_list(body, from);
    if (b == std::string::npos) break;
    try {
      return json::parse(body.substr(b, e - b));
    } catch (const json::exception&) {
      from = b + 1;
    }
  }
  throw Error(ErrorKind::SchemaViolation, "no JSON list of steps found in annotator output");
}

const json* find_key(const json& obj, std::string_view key) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (lower(it.key()) == key) return &it.value();
  }
  return nullptr;
}

std::string text_field(const json& obj, std::string_view key, std::size_t step) {
  const json* v = find_key(obj, key);
  if (v == nullptr || !v->is_string()) {
    throw Error(ErrorKind::SchemaViolation,
                "step " + std::to_string(step) + ": missing text field " + lower(std::string(key)));
  }
  return v->get<std::string>();
}

ActionChunk actions_field(const json& obj, std::size_t step) {
  const json* v = find_key(obj, "actions");
  if (v == nullptr) {
    throw Error(ErrorKind::SchemaViolation, "step " + std::to_string(step) + ": missing actions");
  }
  const std::string where = "step " + std::to_string(step) + ": ";
  if (!v->is_array() || v->empty()) {
    throw Error(ErrorKind::ActionParseError, where + "actions must be a nonempty list");
  }
  ActionChunk out;
  for (std::size_t r = 0; r < v->size(); ++r) {
    const json& row = (*v)[r];
    if (!row.is_array()) {
      throw Error(ErrorKind::ActionParseError, where + "action " + std::to_string(r) + " is not a list");
    }
    std::vector<double> nums;
    for (const auto& x : row) {
      if (!x.is_number()) {
        throw Error(ErrorKind::ActionParseError,
                    where + "action " + std::to_string(r) + " has a non-numeric field");
      }
      nums.push_back(x.get<double>());
    }
    try {
      out.push_back(codec::action_from_row(nums, r));
    } catch (const Error& e) {
      throw Error(ErrorKind::ActionParseError, where + e.what());
    }
  }
  return out;
}

bool is_retryable(ErrorKind k) {
  switch (k) {
    case ErrorKind::SchemaViolation:
    case ErrorKind::ActionParseError:
    case ErrorKind::CountMismatch:
    case ErrorKind::ValueMismatch:
      return true;
    default:
      return false;
  }
}

std::string corrective_note(const std::string& failure) {
  return "Your previous answer could not be used (" + failure +
         "). Reply again with the complete JSON list only. Every action from the "
         "trajectory log must appear exactly once, in order, with the values unchanged.";
}

}  // namespace

void AnnotationJobConfig::validate() const {
  if (max_attempts < 1) throw Error(ErrorKind::ConfigError, "max_attempts must be >= 1");
  if (concurrency < 1) throw Error(ErrorKind::ConfigError, "concurrency must be >= 1");
  if (prompt_version.empty()) throw Error(ErrorKind::ConfigError, "prompt_version is empty");
  coalesce.validate();
}

backend::ChatRequest build_annotation_request(const RawTrajectory& raw,
                                              const AnnotationJobConfig& cfg) {
  backend::Message m;
  m.role = backend::Role::User;
  for (const auto& f : raw.frames) m.parts.emplace_back(backend::ImagePart{f.obs});
  m.parts.emplace_back(backend::TextPart{prompts::annotation_prompt(prompts::trajectory_log(raw))});
  backend::ChatRequest req;
  req.model = cfg.model;
  req.temperature = cfg.temperature;
  req.max_tokens = 8192;
  req.messages.push_back(std::move(m));
  return req;
}

std::vector<StepFragment> parse_annotation(std::string_view text) {
  const json top = parse_top_level(text);
  if (!top.is_array()) {
    throw Error(ErrorKind::SchemaViolation, "annotator output must be a JSON list of steps");
  }
  if (top.empty()) throw Error(ErrorKind::SchemaViolation, "annotator returned no steps");
  std::vector<StepFragment> out;
  for (std::size_t i = 0; i < top.size(); ++i) {
    const json& s = top[i];
    if (!s.is_object()) {
      throw Error(ErrorKind::SchemaViolation, "step " + std::to_string(i) + " is not an object");
    }
    StepFragment f;
    f.subtask = text_field(s, "step_description", i);
    f.reasoning = text_field(s, "reasoning", i);
    f.main_movements = text_field(s, "main_movements", i);
    f.actions = actions_field(s, i);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::size_t> validate_partition(const RawTrajectory& raw,
                                            const std::vector<StepFragment>& fragments,
                                            double tolerance) {
  std::size_t total = 0;
  for (const auto& f : fragments) total += f.actions.size();
  if (total != raw.frames.size()) throw CountMismatchError(raw.frames.size(), total);

  std::vector<std::size_t> starts;
  std::size_t k = 0;
  for (const auto& f : fragments) {
    starts.push_back(k);
    for (const auto& a : f.actions) {
      const Action& r = raw.frames[k].action;
      for (int ax = 0; ax < 3; ++ax) {
        const double d = a.delta[static_cast<std::size_t>(ax)] - r.delta[static_cast<std::size_t>(ax)];
        if (std::abs(d) > tolerance) throw ValueMismatchError(k, ax, d);
      }
      if (a.gripper != r.gripper) {
        throw ValueMismatchError(k, 3, gripper_value(a.gripper) - gripper_value(r.gripper));
      }
      ++k;
    }
  }
  return starts;
}

AnnotatedTrajectory annotate(const RawTrajectory& raw, backend::BackendClient& client,
                             const AnnotationJobConfig& cfg, const AttemptSink& sink) {
  cfg.validate();
  validate_raw(raw);

  backend::ChatRequest req = build_annotation_request(raw, cfg);
  std::string last_failure;
  for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    backend::ChatResponse resp;
    try {
      resp = client.complete(req);
    } catch (const Error& e) {
      if (sink) sink({raw.id, attempt, e.what(), 0, 0});
      throw Error(ErrorKind::BackendFailure, raw.id + ": " + e.what());
    }
    std::vector<StepFragment> fragments;
    std::vector<std::size_t> starts;
    try {
      fragments = parse_annotation(resp.text);
      starts = validate_partition(raw, fragments, cfg.coalesce.partition_tolerance);
    } catch (const Error& e) {
      if (!is_retryable(e.kind())) throw;
      last_failure = e.what();
      if (sink) sink({raw.id, attempt, last_failure, resp.usage.prompt, resp.usage.completion});
      req.messages.push_back(backend::Message::assistant(resp.text));
      req.messages.push_back(backend::Message::user(corrective_note(last_failure)));
      continue;
    }
    if (sink) sink({raw.id, attempt, "ok", resp.usage.prompt, resp.usage.completion});

    AnnotatedTrajectory out;
    out.id = raw.id;
    out.instruction = raw.instruction;
    for (std::size_t i = 0; i < fragments.size(); ++i) {
      const std::size_t b = starts[i];
      const std::size_t e = b + fragments[i].actions.size();
      ActionChunk native;
      for (std::size_t k = b; k < e; ++k) native.push_back(raw.frames[k].action);
      AnnotatedStep s;
      s.index = i;
      s.subtask = fragments[i].subtask;
      s.reasoning = fragments[i].reasoning;
      s.main_movements = fragments[i].main_movements;
      s.obs = raw.frames[b].obs;
      s.coalesced = quantize3(codec::coalesce(native, cfg.coalesce));
      s.chunk = quantize3(native);
      out.steps.push_back(std::move(s));
    }
    out.provenance.model = cfg.model.empty() ? client.config().model : cfg.model;
    out.provenance.prompt_version = cfg.prompt_version;
    out.provenance.ts = client.clock().wall_timestamp();
    out.provenance.attempts = attempt;
    out.terminal_obs = raw.frames.back().obs;
    validate_annotated(out);
    return out;
  }
  throw Error(ErrorKind::AnnotationExhausted,
              raw.id + ": no valid annotation after " + std::to_string(cfg.max_attempts) +
                  " attempts; last failure: " + last_failure);
}

std::vector<AnnotatedTrajectory> annotate_all(const std::vector<RawTrajectory>& raws,
                                              const ClientFactory& clients,
                                              const AnnotationJobConfig& cfg,
                                              const AttemptSink& sink) {
  cfg.validate();
  std::vector<std::optional<AnnotatedTrajectory>> results(raws.size());
  std::vector<std::exception_ptr> errors(raws.size());
  std::atomic<std::size_t> next{0};
  std::mutex sink_mu;
  AttemptSink locked;
  if (sink) {
    locked = [&](const AttemptRecord& r) {
      std::lock_guard lock(sink_mu);
      sink(r);
    };
  }
  auto worker = [&] {
    for (std::size_t i = next++; i < raws.size(); i = next++) {
      try {
        auto client = clients(i);
        results[i] = annotate(raws[i], *client, cfg, locked);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency), raws.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<AnnotatedTrajectory> out;
  out.reserve(raws.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

VerifierPairs make_verifier_pairs(const AnnotatedTrajectory& t, std::uint64_t seed) {
  const std::size_t n = t.steps.size();
  if (n < 1) throw Error(ErrorKind::TooFewSteps, t.id + ": no steps");
  if (!t.terminal_obs) {
    throw Error(ErrorKind::TooFewSteps, t.id + ": verifier pairs need a terminal observation");
  }
  auto obs_at = [&](std::size_t k) -> const std::string& {
    return k < n ? t.steps[k].obs : *t.terminal_obs;
  };
  auto next_subtask = [&](std::size_t i) -> std::optional<std::string> {
    if (i + 1 < n) return t.steps[i + 1].subtask;
    return std::nullopt;
  };

  std::mt19937_64 rng(seed);
  VerifierPairs out;
  for (std::size_t i = 0; i < n; ++i) {
    out.samples.push_back({i, i + 1, obs_at(i), obs_at(i + 1), t.steps[i].subtask,
                           next_subtask(i), true});
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j <= n; ++j) {
      if (j != i && j != i + 1) candidates.push_back(j);
    }
    if (candidates.empty()) {
      ++out.skipped_negatives;
      continue;
    }
    const std::size_t j = candidates[rng() % candidates.size()];
    out.samples.push_back({i, j, obs_at(i), obs_at(j), t.steps[i].subtask, next_subtask(i), false});
  }
  return out;
}

std::string direction_word(Axis axis, double net, double threshold) {
  if (std::abs(net) + 1e-12 < threshold) return "none";
  const bool pos = net > 0;
  switch (axis) {
    case Axis::X:
      return pos ? "forward" : "backward";
    case Axis::Y:
      return pos ? "left" : "right";
    case Axis::Z:
      return pos ? "up" : "down";
  }
  return "none";
}

std::vector<DirectionSample> make_direction_samples(const AnnotatedTrajectory& t,
                                                    double threshold) {
  std::vector<DirectionSample> out;
  for (const auto& s : t.steps) {
    for (Axis ax : {Axis::X, Axis::Y, Axis::Z}) {
      double net = 0.0;
      for (const auto& a : s.chunk) net += a[ax];
      out.push_back({s.obs, s.subtask, s.index, ax, direction_word(ax, net, threshold), net});
    }
  }
  return out;
}

}  // namespace a2l::annotate

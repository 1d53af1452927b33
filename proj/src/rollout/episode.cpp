#include "a2l/rollout/episode.hpp"

#include <cctype>
#include <cmath>

#include "a2l/codec/action_text.hpp"
#include "a2l/core/dataset_io.hpp"
#include "a2l/prompts.hpp"

namespace a2l::rollout {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

backend::Message observed(const std::vector<std::string>& observations, std::string prompt) {
  backend::Message m;
  m.role = backend::Role::User;
  for (const auto& o : observations) m.parts.emplace_back(backend::TextPart{o});
  m.parts.emplace_back(backend::TextPart{std::move(prompt)});
  return m;
}

backend::ChatRequest request(backend::Message m, double temperature, double top_p, int max_tokens) {
  backend::ChatRequest r;
  r.messages.push_back(std::move(m));
  r.temperature = temperature;
  r.top_p = top_p;
  r.max_tokens = max_tokens;
  return r;
}

backend::ChatResponse call(backend::BackendClient& client, const backend::ChatRequest& req) {
  try {
    return client.complete(req);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::BackendFailure) throw;
    throw Error(ErrorKind::BackendFailure, e.what());
  }
}

double ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

ordered_json chunk_json(const ActionChunk& c) {
  ordered_json a = ordered_json::array();
  for (const auto& x : c) a.push_back({x.dx(), x.dy(), x.dz(), gripper_value(x.gripper)});
  return a;
}

ActionChunk chunk_from_json(const ordered_json& j) {
  ActionChunk c;
  std::size_t i = 0;
  for (const auto& row : j) c.push_back(codec::action_from_row(row.get<std::vector<double>>(), i++));
  return c;
}

Confidence confidence_from(const std::string& s) {
  if (s == "High") return Confidence::High;
  if (s == "Medium") return Confidence::Medium;
  if (s == "Low") return Confidence::Low;
  throw Error(ErrorKind::VerdictParseFailure, "confidence must be High, Medium or Low, got '" + s + "'");
}

}  // namespace

void RolloutConfig::validate() const {
  for (double t : {subtask_temperature, subtask_temperature_ood, motion_temperature,
                   action_temperature, verifier_temperature}) {
    if (!(t >= 0.0 && t <= 2.0)) throw Error(ErrorKind::ConfigError, "temperatures must lie in [0, 2]");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorKind::ConfigError, "top_p must lie in (0, 1]");
  if (max_retries < 0) throw Error(ErrorKind::ConfigError, "max_retries must be >= 0");
  if (max_cycles < 0) throw Error(ErrorKind::ConfigError, "max_cycles must be >= 1 (0 for automatic)");
  if (max_tokens < 1) throw Error(ErrorKind::ConfigError, "max_tokens must be >= 1");
}

std::vector<std::string> parse_subtask_list(std::string_view text) {
  const auto fence = codec::strip_code_fences(text);
  const auto [b, e] = codec::find_balanced_list(fence.body);
  if (b == std::string_view::npos) {
    throw Error(ErrorKind::ParseFailure, "no bracketed subtask list in reply");
  }
  const std::string_view body = fence.body.substr(b + 1, e - b - 2);
  std::vector<std::string> items;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
  };
  skip_ws();
  if (i == body.size()) throw Error(ErrorKind::EmptyPlan, "subtask list is empty");
  while (true) {
    skip_ws();
    if (i >= body.size() || (body[i] != '\'' && body[i] != '"')) {
      throw Error(ErrorKind::ParseFailure, "subtask list items must be quoted strings");
    }
    const char q = body[i++];
    std::string item;
    bool closed = false;
    while (i < body.size()) {
      const char c = body[i++];
      if (c == '\\' && i < body.size()) {
        item += body[i++];
      } else if (c == q) {
        closed = true;
        break;
      } else {
        item += c;
      }
    }
    if (!closed) throw Error(ErrorKind::ParseFailure, "unterminated subtask string");
    item = trim(item);
    if (item.empty()) throw Error(ErrorKind::ParseFailure, "empty subtask in list");
    items.push_back(std::move(item));
    skip_ws();
    if (i >= body.size()) break;
    if (body[i] != ',') throw Error(ErrorKind::ParseFailure, "expected ',' between subtasks");
    ++i;
    skip_ws();
    if (i >= body.size()) break;  // trailing comma
  }
  return items;
}

std::vector<std::string> plan_subtasks(backend::BackendClient& policy, const std::string& obs,
                                       const std::string& instruction, const RolloutConfig& cfg) {
  if (trim(instruction).empty()) throw Error(ErrorKind::Precondition, "instruction is empty");
  const auto req = request(observed({obs}, prompts::subtask_prompt(instruction)),
                           cfg.planning_temperature(), cfg.top_p, cfg.max_tokens);
  std::string last;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    const auto resp = call(policy, req);
    try {
      return parse_subtask_list(resp.text);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ParseFailure && e.kind() != ErrorKind::EmptyPlan) throw;
      if (attempt == cfg.max_retries) throw;
      last = e.what();
    }
  }
  throw Error(ErrorKind::ParseFailure, last);
}

std::string gen_motion_plan(backend::BackendClient& policy, const std::string& obs,
                            const std::string& subtask, const RolloutConfig& cfg) {
  if (trim(subtask).empty()) throw Error(ErrorKind::Precondition, "subtask is empty");
  const auto req = request(observed({obs}, prompts::motion_plan_prompt(subtask)),
                           cfg.motion_temperature, cfg.top_p, cfg.max_tokens);
  return call(policy, req).text;
}

GeneratedActions gen_actions(backend::BackendClient& policy, const std::string& obs,
                             const std::string& subtask, const std::string& motion_plan,
                             const RolloutConfig& cfg) {
  if (trim(motion_plan).empty()) throw Error(ErrorKind::Precondition, "motion plan is empty");
  auto req = request(observed({obs}, prompts::action_prompt(subtask, motion_plan)),
                     cfg.action_temperature, cfg.top_p, cfg.max_tokens);
  auto resp = call(policy, req);
  try {
    return {codec::parse_chunk(resp.text).chunk, resp.text, false};
  } catch (const Error& e) {
    req.messages.push_back(backend::Message::assistant(resp.text));
    req.messages.push_back(backend::Message::user(
        std::string("Your reply could not be read as a list of [dx, dy, dz, gripper] actions (") +
        e.what() + "). PROVIDE ONLY THE PYTHON LIST."));
  }
  resp = call(policy, req);
  try {
    return {codec::parse_chunk(resp.text).chunk, resp.text, true};
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseFailure, std::string("action reply unparseable after reprompt: ") + e.what());
  }
}

std::string to_string(Confidence c) {
  switch (c) {
    case Confidence::High:
      return "High";
    case Confidence::Medium:
      return "Medium";
    case Confidence::Low:
      return "Low";
  }
  return "Low";
}

VerifierVerdict parse_verdict(std::string_view text) {
  const auto fence = codec::strip_code_fences(text);
  json j;
  try {
    j = json::parse(fence.body);
  } catch (const json::exception&) {
    throw Error(ErrorKind::VerdictParseFailure, "verifier reply is not a JSON object");
  }
  if (!j.is_object()) throw Error(ErrorKind::VerdictParseFailure, "verifier reply is not a JSON object");
  if (!j.contains("success") || !j["success"].is_boolean()) {
    throw Error(ErrorKind::VerdictParseFailure, "\"success\" must be true or false");
  }
  if (!j.contains("confidence") || !j["confidence"].is_string()) {
    throw Error(ErrorKind::VerdictParseFailure, "\"confidence\" must be a string");
  }
  if (!j.contains("reasoning") || !j["reasoning"].is_string()) {
    throw Error(ErrorKind::VerdictParseFailure, "\"reasoning\" must be a string");
  }
  return {j["success"].get<bool>(), confidence_from(j["confidence"].get<std::string>()),
          j["reasoning"].get<std::string>(), false};
}

VerifierVerdict verify(backend::BackendClient& verifier, const std::string& obs_before,
                       const std::string& obs_after, const std::string& subtask,
                       const std::optional<std::string>& next_subtask, const RolloutConfig& cfg) {
  if (obs_before.empty() || obs_after.empty()) {
    throw Error(ErrorKind::Precondition, "verifier needs both observations");
  }
  auto req = request(observed({"Before: " + obs_before, "After: " + obs_after},
                              prompts::verifier_prompt(subtask, next_subtask)),
                     cfg.verifier_temperature, 1.0, cfg.max_tokens);
  std::string failure;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto resp = call(verifier, req);
    try {
      return parse_verdict(resp.text);
    } catch (const Error& e) {
      failure = e.what();
      req.messages.push_back(backend::Message::assistant(resp.text));
      req.messages.push_back(backend::Message::user(
          "Your reply did not follow the expected format (" + failure +
          "). Reply with only the JSON object."));
    }
  }
  return {false, Confidence::Low, failure, true};
}

std::string RolloutLog::planning_text() const {
  std::string out;
  for (const auto& s : subtasks) out += s + "\n";
  for (const auto& c : cycles) out += c.motion_plan + "\n";
  return out;
}

ordered_json log_to_json(const RolloutLog& log) {
  ordered_json j;
  j["episode_id"] = log.episode_id;
  j["scenario"] = log.scenario;
  j["rubric"] = log.rubric;
  j["instruction"] = log.instruction;
  j["seed"] = log.seed;
  j["status"] = log.status;
  if (!log.abort_reason.empty()) j["abort_reason"] = log.abort_reason;
  j["subtasks"] = log.subtasks;
  j["subtask_outcomes"] = log.subtask_outcomes;
  ordered_json cycles = ordered_json::array();
  for (const auto& c : log.cycles) {
    ordered_json jc;
    jc["subtask_index"] = c.subtask_index;
    jc["attempt"] = c.attempt;
    jc["t_start"] = ms(c.t_start);
    jc["motion_plan"] = c.motion_plan;
    jc["action_text"] = c.action_text;
    jc["parsed"] = c.parsed ? chunk_json(*c.parsed) : ordered_json(nullptr);
    jc["filtered"] = c.filtered ? chunk_json(*c.filtered) : ordered_json(nullptr);
    if (!c.parse_error.empty()) jc["parse_error"] = c.parse_error;
    if (c.verdict) {
      jc["verdict"] = {{"success", c.verdict->success},
                       {"confidence", to_string(c.verdict->confidence)},
                       {"reasoning", c.verdict->reasoning},
                       {"parse_failed", c.verdict->parse_failed}};
    } else {
      jc["verdict"] = nullptr;
    }
    jc["latency_s"] = {{"motion", ms(c.latency.motion_s)},
                       {"action", ms(c.latency.action_s)},
                       {"verify", ms(c.latency.verify_s)},
                       {"cycle", ms(c.latency.cycle_s)}};
    jc["before"] = c.before;
    jc["after"] = c.after;
    cycles.push_back(std::move(jc));
  }
  j["cycles"] = std::move(cycles);
  j["initial_env"] = log.initial_env;
  j["final_env"] = log.final_env;
  return j;
}

RolloutLog log_from_json(const ordered_json& j) {
  try {
    RolloutLog log;
    log.episode_id = j.at("episode_id").get<std::string>();
    log.scenario = j.value("scenario", "");
    log.rubric = j.value("rubric", "");
    log.instruction = j.at("instruction").get<std::string>();
    log.seed = j.value("seed", std::uint64_t{0});
    log.status = j.at("status").get<std::string>();
    log.abort_reason = j.value("abort_reason", "");
    log.subtasks = j.at("subtasks").get<std::vector<std::string>>();
    log.subtask_outcomes = j.value("subtask_outcomes", std::vector<std::string>{});
    for (const auto& jc : j.at("cycles")) {
      CycleRecord c;
      c.subtask_index = jc.at("subtask_index").get<std::size_t>();
      c.attempt = jc.at("attempt").get<int>();
      c.t_start = jc.at("t_start").get<double>();
      c.motion_plan = jc.at("motion_plan").get<std::string>();
      c.action_text = jc.at("action_text").get<std::string>();
      if (!jc.at("parsed").is_null()) c.parsed = chunk_from_json(jc["parsed"]);
      if (!jc.at("filtered").is_null()) c.filtered = chunk_from_json(jc["filtered"]);
      c.parse_error = jc.value("parse_error", "");
      if (!jc.at("verdict").is_null()) {
        const auto& v = jc["verdict"];
        c.verdict = VerifierVerdict{v.at("success").get<bool>(),
                                    confidence_from(v.at("confidence").get<std::string>()),
                                    v.at("reasoning").get<std::string>(),
                                    v.value("parse_failed", false)};
      }
      const auto& l = jc.at("latency_s");
      c.latency = {l.at("motion").get<double>(), l.at("action").get<double>(),
                   l.at("verify").get<double>(), l.at("cycle").get<double>()};
      c.before = jc.at("before");
      c.after = jc.at("after");
      log.cycles.push_back(std::move(c));
    }
    log.initial_env = j.at("initial_env");
    log.final_env = j.at("final_env");
    return log;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("bad rollout log: ") + e.what());
  }
}

void save_log(const RolloutLog& log, const std::filesystem::path& path) {
  write_text_file(path, log_to_json(log).dump(2) + "\n");
}

RolloutLog load_log(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return log_from_json(ordered_json::parse(text));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::MalformedRecord, path.string() + ": " + e.what());
  }
}

RolloutLog run_episode(backend::BackendClient& policy, backend::BackendClient& verifier, SimEnv& env,
                       const std::string& instruction, const RolloutConfig& cfg,
                       const std::string& episode_id) {
  cfg.validate();
  auto& clock = policy.clock();
  RolloutLog log;
  log.episode_id = episode_id;
  log.instruction = instruction;
  log.initial_env = env.snapshot();

  auto abort = [&](const std::string& reason) {
    log.status = "aborted";
    log.abort_reason = reason;
    log.final_env = env.snapshot();
    throw EpisodeAbortedError(reason, log);
  };

  try {
    log.subtasks = plan_subtasks(policy, env.descriptor(), instruction, cfg);
  } catch (const Error& e) {
    abort(std::string("planning failed: ") + e.what());
  }
  const std::size_t n = log.subtasks.size();
  const std::size_t attempts_per = static_cast<std::size_t>(cfg.max_retries) + 1;
  const std::size_t cap = cfg.max_cycles > 0 ? static_cast<std::size_t>(cfg.max_cycles) : n * attempts_per;

  bool forced = false;
  bool capped = false;
  std::size_t i = 0;
  int attempt = 1;
  while (i < n) {
    if (log.cycles.size() >= cap) {
      capped = true;
      break;
    }
    CycleRecord c;
    c.subtask_index = i;
    c.attempt = attempt;
    c.t_start = clock.now();
    c.before = env.snapshot();
    const std::string obs_before = env.descriptor();
    const std::string& subtask = log.subtasks[i];
    try {
      double t0 = clock.now();
      c.motion_plan = gen_motion_plan(policy, obs_before, subtask, cfg);
      double t1 = clock.now();
      c.latency.motion_s = t1 - t0;
      try {
        auto gen = gen_actions(policy, obs_before, subtask, c.motion_plan, cfg);
        c.action_text = gen.text;
        c.parsed = gen.chunk;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ParseFailure) throw;
        c.parse_error = e.what();
      }
      c.latency.action_s = clock.now() - t1;
      c.latency.cycle_s = c.latency.motion_s + c.latency.action_s;

      if (c.parsed) {
        c.filtered = safety_filter(*c.parsed, env);
        execute(env, *c.filtered);
        const double tv = clock.now();
        std::optional<std::string> next;
        if (i + 1 < n) next = log.subtasks[i + 1];
        c.verdict = verify(verifier, obs_before, env.descriptor(), subtask, next, cfg);
        c.latency.verify_s = clock.now() - tv;
      }
    } catch (const Error& e) {
      c.after = env.snapshot();
      log.cycles.push_back(std::move(c));
      abort(std::string("backend failure: ") + e.what());
    }
    c.after = env.snapshot();
    const bool ok = c.verdict && c.verdict->success;
    log.cycles.push_back(std::move(c));

    if (ok) {
      log.subtask_outcomes.push_back("verified");
      ++i;
      attempt = 1;
    } else if (static_cast<std::size_t>(attempt) >= attempts_per) {
      log.subtask_outcomes.push_back("forced_advance");
      forced = true;
      ++i;
      attempt = 1;
    } else {
      ++attempt;
    }
  }
  log.status = capped ? "cap_exceeded" : forced ? "forced_advance" : "complete";
  log.final_env = env.snapshot();
  return log;
}

}  // namespace a2l::rollout

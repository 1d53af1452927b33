#include "a2l/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "a2l/annotate/annotation.hpp"
#include "a2l/backend/http.hpp"
#include "a2l/backend/mock.hpp"
#include "a2l/codec/action_text.hpp"
#include "a2l/codec/coalesce.hpp"
#include "a2l/codec/token_map.hpp"
#include "a2l/config/flat_config.hpp"
#include "a2l/core/dataset_io.hpp"
#include "a2l/core/number_format.hpp"
#include "a2l/eval/eval.hpp"
#include "a2l/prompts.hpp"
#include "a2l/rollout/episode.hpp"
#include "a2l/rollout/scenario.hpp"
#include "a2l/sft/export.hpp"

namespace a2l::cli {

namespace fs = std::filesystem;
using config::FlatConfig;
using nlohmann::json;
using nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::UnknownField:
    case ErrorKind::Precondition:
      return kUsage;
    case ErrorKind::MissingPath:
    case ErrorKind::MalformedRecord:
    case ErrorKind::InvariantViolation:
    case ErrorKind::SerializationFailure:
    case ErrorKind::EmptyChunk:
    case ErrorKind::NoListFound:
    case ErrorKind::BadArity:
    case ErrorKind::NonNumeric:
    case ErrorKind::GripperNotBinary:
    case ErrorKind::WrongStage:
    case ErrorKind::UnknownEntity:
      return kData;
    case ErrorKind::Timeout:
    case ErrorKind::RateLimited:
    case ErrorKind::ServerError:
    case ErrorKind::Unauthorized:
    case ErrorKind::CapabilityMissing:
    case ErrorKind::ProtocolError:
    case ErrorKind::ScriptExhausted:
    case ErrorKind::BackendFailure:
      return kBackend;
    case ErrorKind::SchemaViolation:
    case ErrorKind::ActionParseError:
    case ErrorKind::CountMismatch:
    case ErrorKind::ValueMismatch:
    case ErrorKind::AnnotationExhausted:
    case ErrorKind::TooFewSteps:
      return kAnnotation;
    case ErrorKind::ParseFailure:
    case ErrorKind::EmptyPlan:
    case ErrorKind::VerdictParseFailure:
    case ErrorKind::EpisodeAborted:
      return kEpisodeAborted;
    case ErrorKind::EmptyInput:
      return kNoData;
    case ErrorKind::IoFailure:
      return kGeneric;
  }
  return kGeneric;
}

namespace {

const char* const kBackendRoles[] = {"backend", "annotator", "policy", "verifier"};
const char* const kBackendFields[] = {"endpoint", "model", "family", "api_key_env", "timeout_s",
                                      "max_retries", "requests_per_minute", "images", "logprobs"};

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = {
        "seed",
        "jobs",
        "annotate.max_attempts",
        "annotate.temperature",
        "annotate.prompt_version",
        "coalesce.axis_cap",
        "coalesce.sign_conflict",
        "sft.per_step_subtasks",
        "sft.verifier_pairs",
        "sft.direction_aux",
        "sft.token_map",
        "rollout.subtask_temperature",
        "rollout.subtask_temperature_ood",
        "rollout.motion_temperature",
        "rollout.action_temperature",
        "rollout.verifier_temperature",
        "rollout.top_p",
        "rollout.max_tokens",
        "rollout.max_retries",
        "rollout.max_cycles",
        "probe.limit",
    };
    for (const char* role : kBackendRoles) {
      for (const char* f : kBackendFields) k.push_back(std::string(role) + "." + f);
    }
    return k;
  }();
  return keys;
}

std::string env_name(const std::string& key) {
  std::string out = "A2L_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string mock;
};

/// file < environment (A2L_<SECTION>_<KEY>) < flags.
FlatConfig layered(const Common& c) {
  FlatConfig cfg;
  if (!c.config_path.empty()) cfg = FlatConfig::load(c.config_path);
  const auto& keys = known_keys();
  for (const auto& [k, v] : cfg.values()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw Error(ErrorKind::ConfigError, "unknown config key '" + k + "'");
    }
  }
  for (const auto& k : keys) {
    if (const char* v = std::getenv(env_name(k).c_str()); v != nullptr) {
      cfg.set(k, config::parse_value_text(v));
    }
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::ConfigError, "--set expects key=value, got '" + s + "'");
    const std::string k = s.substr(0, eq);
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw Error(ErrorKind::ConfigError, "unknown config key '" + k + "'");
    }
    cfg.set(k, config::parse_value_text(s.substr(eq + 1)));
  }
  if (c.seed) cfg.set("seed", config::Value{static_cast<double>(*c.seed)});
  if (c.jobs) cfg.set("jobs", config::Value{static_cast<double>(*c.jobs)});
  return cfg;
}

std::uint64_t seed_of(const FlatConfig& cfg) {
  const double s = cfg.get_number("seed", 0);
  if (s < 0) throw Error(ErrorKind::ConfigError, "seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

int jobs_of(const FlatConfig& cfg) {
  const int j = static_cast<int>(cfg.get_number("jobs", 1));
  if (j < 1) throw Error(ErrorKind::ConfigError, "jobs must be >= 1");
  return j;
}

int int_of(const FlatConfig& cfg, const std::string& key, int fallback) {
  return static_cast<int>(cfg.get_number(key, fallback));
}

backend::BackendConfig backend_config(const FlatConfig& cfg, const std::string& role) {
  auto pick = [&](const std::string& field) -> const config::Value* {
    if (const auto* v = cfg.find(role + "." + field)) return v;
    return cfg.find("backend." + field);
  };
  auto str = [&](const std::string& f, const std::string& fb) {
    const auto* v = pick(f);
    return v ? v->to_text() : fb;
  };
  auto num = [&](const std::string& f, double fb) {
    const auto* v = pick(f);
    if (v == nullptr) return fb;
    if (!v->is_number()) throw Error(ErrorKind::ConfigError, role + "." + f + " must be a number");
    return v->as_number();
  };
  auto flag = [&](const std::string& f, bool fb) {
    const auto* v = pick(f);
    if (v == nullptr) return fb;
    if (!v->is_bool()) throw Error(ErrorKind::ConfigError, role + "." + f + " must be true or false");
    return v->as_bool();
  };
  backend::BackendConfig b;
  b.endpoint = str("endpoint", "");
  b.model = str("model", "");
  const std::string family = str("family", "chat");
  if (family != "chat" && family != "completions") {
    throw Error(ErrorKind::ConfigError, role + ".family must be chat or completions");
  }
  b.family = family == "chat" ? backend::EndpointFamily::Chat : backend::EndpointFamily::Completions;
  b.api_key_env = str("api_key_env", b.api_key_env);
  b.timeout_s = num("timeout_s", b.timeout_s);
  b.max_retries = static_cast<int>(num("max_retries", b.max_retries));
  b.requests_per_minute = static_cast<int>(num("requests_per_minute", b.requests_per_minute));
  b.caps.images = flag("images", b.caps.images);
  b.caps.logprobs = flag("logprobs", b.caps.logprobs);
  return b;
}

/// Backend for one role: either a mock script (fresh client per unit of work
/// so replies and virtual timings do not depend on scheduling) or one shared
/// HTTP client.
class BackendSource {
 public:
  BackendSource(const FlatConfig& cfg, const std::string& role, const std::string& mock) : role_(role) {
    cfg_ = backend_config(cfg, role);
    if (!mock.empty()) {
      fs::path p = mock;
      if (!fs::exists(p)) throw Error(ErrorKind::MissingPath, p.string());
      if (fs::is_directory(p)) p /= role + ".json";
      if (!fs::exists(p)) throw Error(ErrorKind::MissingPath, "mock script " + p.string());
      script_ = backend::MockTransport::load_script(p);
      if (cfg_.model.empty()) cfg_.model = "mock";
      cfg_.caps.logprobs = true;
      if (cfg_.endpoint.empty()) cfg_.endpoint = "mock://" + role;
    } else {
      if (cfg_.endpoint.empty()) {
        throw Error(ErrorKind::ConfigError,
                    "no endpoint configured for " + role + " (set " + role + ".endpoint or pass --mock)");
      }
      cfg_.validate();
      shared_ = std::make_shared<backend::BackendClient>(
          cfg_, std::make_shared<backend::HttpTransport>(cfg_), std::make_shared<backend::SteadyClock>());
    }
  }

  bool mocked() const { return script_.has_value(); }

  std::shared_ptr<backend::BackendClient> client(std::shared_ptr<backend::VirtualClock> clock) const {
    if (shared_) return shared_;
    return backend::make_mock(*script_, cfg_, std::move(clock)).client;
  }

 private:
  std::string role_;
  backend::BackendConfig cfg_;
  std::optional<std::vector<backend::MockEntry>> script_;
  std::shared_ptr<backend::BackendClient> shared_;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
/// failure in index order.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < t; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

codec::CoalesceConfig coalesce_config(const FlatConfig& cfg) {
  codec::CoalesceConfig c;
  c.axis_cap = cfg.get_number("coalesce.axis_cap", c.axis_cap);
  c.sign_conflict_enabled = cfg.get_bool("coalesce.sign_conflict", c.sign_conflict_enabled);
  c.validate();
  return c;
}

codec::TokenMap token_map(const FlatConfig& cfg) {
  const std::string path = cfg.get_string("sft.token_map", "");
  return path.empty() ? codec::TokenMap::gemma3_default() : codec::TokenMap::load(path);
}

std::vector<fs::path> json_files(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::MissingPath, path.string());
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---- subcommands -----------------------------------------------------------

int cmd_annotate(const Common& c, const std::string& in, const std::string& out, std::ostream& os) {
  const FlatConfig cfg = layered(c);
  const auto raws = load_raw_dataset(in);
  if (raws.empty()) throw Error(ErrorKind::EmptyInput, "no trajectories in " + in);

  annotate::AnnotationJobConfig job;
  job.max_attempts = int_of(cfg, "annotate.max_attempts", job.max_attempts);
  job.temperature = cfg.get_number("annotate.temperature", job.temperature);
  job.prompt_version = cfg.get_string("annotate.prompt_version", job.prompt_version);
  job.concurrency = jobs_of(cfg);
  job.coalesce = coalesce_config(cfg);

  const BackendSource source(cfg, "annotator", c.mock);
  std::mutex mu;
  std::map<std::string, std::vector<annotate::AttemptRecord>> attempts;
  auto sink = [&](const annotate::AttemptRecord& r) {
    std::lock_guard lock(mu);
    attempts[r.trajectory_id].push_back(r);
  };
  auto factory = [&](std::size_t) { return source.client(std::make_shared<backend::VirtualClock>()); };

  std::vector<AnnotatedTrajectory> done;
  std::exception_ptr failure;
  try {
    done = annotate::annotate_all(raws, factory, job, sink);
  } catch (...) {
    failure = std::current_exception();
  }

  ordered_json log = ordered_json::array();
  for (const auto& r : raws) {
    for (const auto& a : attempts[r.id]) {
      log.push_back({{"trajectory", a.trajectory_id},
                     {"attempt", a.attempt},
                     {"outcome", a.outcome},
                     {"prompt_tokens", a.prompt_tokens},
                     {"completion_tokens", a.completion_tokens}});
    }
  }
  write_text_file(fs::path(out) / "annotation_attempts.json", log.dump(2) + "\n");
  if (failure) std::rethrow_exception(failure);

  const auto m = save_annotated_dataset(done, out);
  os << "annotated " << m.counts.at("trajectories") << " trajectories (" << m.counts.at("steps")
     << " steps) -> " << out << "\n";
  return kOk;
}

int cmd_chunk(const Common& c, const std::string& in, const std::string& out, std::ostream& os) {
  const FlatConfig cfg = layered(c);
  const auto cc = coalesce_config(cfg);
  std::string jsonl;
  std::size_t count = 0;
  for (const auto& file : jsonl_inputs(in)) {
    const std::string text = read_text_file(file);
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string::npos) nl = text.size();
      const std::string line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (line.empty()) continue;
      bool annotated = false;
      try {
        annotated = json::parse(line).contains("steps");
      } catch (const json::exception& e) {
        throw MalformedRecordError(line_no, e.what());
      }
      std::string id;
      std::vector<ActionChunk> chunks;
      if (annotated) {
        const auto t = annotated_from_line(line, line_no);
        id = t.id;
        for (const auto& s : t.steps) chunks.push_back(quantize3(codec::coalesce(s.chunk, cc)));
      } else {
        const auto t = raw_from_line(line, line_no);
        validate_raw(t);
        id = t.id;
        chunks.push_back(quantize3(codec::coalesce(t.actions(), cc)));
      }
      std::string txt;
      jsonl += "{\"id\": " + json(id).dump() + ", \"chunks\": [";
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        const std::string s = codec::serialize_chunk(chunks[i]);
        txt += s + "\n";
        jsonl += (i ? ", " : "") + s;
      }
      jsonl += "]}\n";
      write_text_file(fs::path(out) / (id + ".chunk.txt"), txt);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorKind::EmptyInput, "no trajectories in " + in);
  write_text_file(fs::path(out) / "coalesced.jsonl", jsonl);
  os << "coalesced " << count << " trajectories -> " << out << "\n";
  return kOk;
}

int cmd_export(const Common& c, const std::string& in, const std::string& out, bool at,
               bool manifest, const std::vector<std::string>& overrides, std::ostream& os) {
  const FlatConfig cfg = layered(c);
  const auto seed = seed_of(cfg);
  const auto data = load_annotated_dataset(in);
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "no annotated trajectories in " + in);

  sft::ExportConfig ec;
  ec.per_step_subtasks = cfg.get_bool("sft.per_step_subtasks", ec.per_step_subtasks);
  ec.verifier_pairs = cfg.get_bool("sft.verifier_pairs", ec.verifier_pairs);
  ec.direction_aux = cfg.get_bool("sft.direction_aux", ec.direction_aux);
  ec.pair_seed = seed;

  std::vector<sft::SftSample> samples;
  for (const auto& t : data) {
    for (auto& s : sft::export_stage_samples(t, ec)) samples.push_back(std::move(s));
    for (auto& s : sft::export_augmentation_samples(t, ec)) samples.push_back(std::move(s));
  }
  const fs::path dir(out);
  auto m = sft::write_sft_jsonl(samples, dir / "sft.jsonl", seed);
  write_text_file(dir / "manifest.json", manifest_to_json(m));
  os << "wrote " << m.total() << " samples -> " << (dir / "sft.jsonl").string() << "\n";

  if (at) {
    const auto map = token_map(cfg);
    std::vector<sft::SftSample> at_samples;
    for (const auto& s : samples) {
      at_samples.push_back(s.stage == sft::Stage::Action ? sft::to_at_variant(s, map) : s);
    }
    auto ma = sft::write_sft_jsonl(std::move(at_samples), dir / "sft_at.jsonl", seed);
    write_text_file(dir / "manifest_at.json", manifest_to_json(ma));
    write_text_file(dir / "token_map.tsv", map.to_table());
    os << "wrote " << ma.total() << " samples -> " << (dir / "sft_at.jsonl").string() << "\n";
  }
  if (manifest || !overrides.empty()) {
    std::map<std::string, std::string> ov;
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorKind::ConfigError, "--override expects key=value, got '" + o + "'");
      }
      ov[o.substr(0, eq)] = o.substr(eq + 1);
    }
    const auto tm = sft::emit_training_manifest(ov);
    write_text_file(dir / "training_manifest.txt", tm.to_text());
    os << "wrote " << (dir / "training_manifest.txt").string() << "\n";
  }
  return kOk;
}

rollout::RolloutConfig rollout_config(const FlatConfig& cfg) {
  rollout::RolloutConfig r;
  r.subtask_temperature = cfg.get_number("rollout.subtask_temperature", r.subtask_temperature);
  r.subtask_temperature_ood = cfg.get_number("rollout.subtask_temperature_ood", r.subtask_temperature_ood);
  r.motion_temperature = cfg.get_number("rollout.motion_temperature", r.motion_temperature);
  r.action_temperature = cfg.get_number("rollout.action_temperature", r.action_temperature);
  r.verifier_temperature = cfg.get_number("rollout.verifier_temperature", r.verifier_temperature);
  r.top_p = cfg.get_number("rollout.top_p", r.top_p);
  r.max_tokens = int_of(cfg, "rollout.max_tokens", r.max_tokens);
  r.max_retries = int_of(cfg, "rollout.max_retries", r.max_retries);
  r.max_cycles = int_of(cfg, "rollout.max_cycles", r.max_cycles);
  r.validate();
  return r;
}

int cmd_rollout(const Common& c, const std::vector<std::string>& scenario_paths, const std::string& out,
                std::ostream& os, std::ostream& es) {
  const FlatConfig cfg = layered(c);
  const auto base = rollout_config(cfg);
  std::vector<rollout::Scenario> scenarios;
  for (const auto& p : scenario_paths) scenarios.push_back(rollout::load_scenario(p));

  struct Job {
    const rollout::Scenario* scenario;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& s : scenarios) {
    if (c.seed) {
      jobs.push_back({&s, *c.seed});
    } else {
      for (auto seed : s.seeds) jobs.push_back({&s, seed});
    }
  }

  const BackendSource policy(cfg, "policy", c.mock);
  const BackendSource verifier(cfg, "verifier", c.mock);
  std::vector<rollout::RolloutLog> logs(jobs.size());
  std::vector<std::string> aborted(jobs.size());
  parallel_for(jobs.size(), jobs_of(cfg), [&](std::size_t i) {
    const auto& job = jobs[i];
    auto clock = std::make_shared<backend::VirtualClock>();
    auto pc = policy.client(clock);
    auto vc = verifier.client(clock);
    auto env = job.scenario->make_env(job.seed);
    auto rc = base;
    rc.ood = job.scenario->ood;
    const std::string id = job.scenario->id + "_s" + std::to_string(job.seed);
    rollout::RolloutLog log;
    try {
      log = rollout::run_episode(*pc, *vc, env, job.scenario->instruction, rc, id);
    } catch (const rollout::EpisodeAbortedError& e) {
      log = e.partial();
      aborted[i] = e.what();
    }
    log.scenario = job.scenario->id;
    log.rubric = job.scenario->rubric;
    log.seed = job.seed;
    logs[i] = std::move(log);
  });

  int code = kOk;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto& log = logs[i];
    rollout::save_log(log, fs::path(out) / (log.episode_id + ".json"));
    os << log.episode_id << ": " << log.status << ", " << log.cycles.size() << " cycles\n";
    if (!aborted[i].empty()) {
      es << log.episode_id << ": " << aborted[i] << "\n";
      code = kEpisodeAborted;
    }
  }
  return code;
}

int cmd_eval(const Common& c, const std::string& in, const std::string& rubric_path, const std::string& out,
             std::ostream& os) {
  layered(c);
  const auto files = json_files(in);
  if (files.empty()) throw Error(ErrorKind::EmptyInput, "no rollout logs in " + in);
  const bool rubric_dir = fs::is_directory(rubric_path);
  if (!fs::exists(rubric_path)) throw Error(ErrorKind::MissingPath, rubric_path);
  std::vector<eval::ScoreCard> cards;
  std::vector<std::string> scenarios;
  for (const auto& f : files) {
    const auto log = rollout::load_log(f);
    const auto rubric = rubric_dir ? eval::load_rubric(fs::path(rubric_path) / (log.rubric + ".toml"))
                                   : eval::load_rubric(rubric_path);
    const auto env = rollout::SimEnv::from_snapshot(log.final_env);
    cards.push_back(eval::score_trial(log, env, rubric));
    scenarios.push_back(log.scenario.empty() ? log.episode_id : log.scenario);
  }
  const auto report = eval::build_report(cards, scenarios);
  const std::string table = eval::report_table(report);
  os << table;
  if (!out.empty()) {
    write_text_file(fs::path(out) / "report.json", eval::report_to_json(report).dump(2) + "\n");
    write_text_file(fs::path(out) / "report.txt", table);
  }
  return kOk;
}

int cmd_stats(const Common& c, const std::string& logs_path, const std::string& out, std::ostream& os) {
  layered(c);
  std::vector<double> durations;
  for (const auto& f : json_files(logs_path)) {
    for (double d : eval::cycle_durations(rollout::load_log(f))) durations.push_back(d);
  }
  if (durations.empty()) throw Error(ErrorKind::EmptyInput, "no durations found under " + logs_path);
  const auto s = eval::latency_stats(durations);
  os << eval::stats_table(s);
  if (!out.empty()) write_text_file(out, eval::stats_to_json(s).dump(2) + "\n");
  return kOk;
}

int cmd_probe(const Common& c, const std::string& in, const std::string& out, std::ostream& os) {
  const FlatConfig cfg = layered(c);
  const auto data = load_annotated_dataset(in);
  const auto map = token_map(cfg);
  const auto limit = static_cast<std::size_t>(std::max(1, int_of(cfg, "probe.limit", 20)));
  const BackendSource source(cfg, "policy", c.mock);
  std::vector<eval::ProbeResult> results;
  for (const auto& t : data) {
    for (const auto& s : t.steps) {
      if (results.size() >= limit) break;
      auto client = source.client(std::make_shared<backend::VirtualClock>());
      backend::Message m;
      m.parts.emplace_back(backend::TextPart{"Observation: " + s.obs});
      m.parts.emplace_back(backend::TextPart{prompts::action_prompt(s.subtask, s.main_movements)});
      results.push_back(eval::representation_probe(*client, {m}, s.coalesced, map));
    }
  }
  if (results.empty()) throw Error(ErrorKind::EmptyInput, "no steps to probe in " + in);
  double lang = 0, at = 0;
  for (const auto& r : results) {
    lang += r.language_mean;
    at += r.at_mean;
  }
  lang /= static_cast<double>(results.size());
  at /= static_cast<double>(results.size());
  char line[160];
  std::snprintf(line, sizeof line, "probed %zu chunks: mean logprob language %.4f, action tokens %.4f\n",
                results.size(), lang, at);
  os << line;
  if (!out.empty()) {
    write_text_file(fs::path(out) / "probe.csv", eval::probe_csv(results));
    ordered_json j;
    j["count"] = results.size();
    j["language_mean"] = lang;
    j["at_mean"] = at;
    write_text_file(fs::path(out) / "probe_summary.json", j.dump(2) + "\n");
  }
  return kOk;
}

void add_common(CLI::App* sub, Common& c, bool with_mock) {
  sub->add_option("--config", c.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--set", c.sets, "Override a config key (key=value); repeatable");
  sub->add_option("--seed", c.seed, "Seed for shuffles, pair sampling and episodes");
  sub->add_option("--jobs", c.jobs, "Maximum parallel trajectories / episodes")->check(CLI::PositiveNumber);
  if (with_mock) {
    sub->add_option("--mock", c.mock,
                    "Scripted backend: a JSON script or a directory with annotator.json, "
                    "policy.json, verifier.json");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Actions-as-language toolkit: relabel, coalesce, export, roll out, evaluate"};
  app.name(args.empty() ? "a2l" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  Common common;
  std::string in, out_path, rubric, logs;
  std::vector<std::string> scenarios, overrides;
  bool at = false, manifest = false;

  auto* annotate_cmd = app.add_subcommand("annotate", "Relabel raw trajectories into an annotated dataset");
  annotate_cmd->add_option("--in", in, "Raw dataset (.jsonl file or directory)")->required();
  annotate_cmd->add_option("--out", out_path, "Output directory")->required();
  add_common(annotate_cmd, common, true);

  auto* chunk_cmd = app.add_subcommand("chunk", "Coalesce the actions of a raw or annotated file");
  chunk_cmd->add_option("--in", in, "Raw or annotated .jsonl file or directory")->required();
  chunk_cmd->add_option("--out", out_path, "Output directory")->required();
  add_common(chunk_cmd, common, false);

  auto* export_cmd = app.add_subcommand("export-sft", "Write the stage-tagged fine-tuning corpus");
  export_cmd->add_option("--in", in, "Annotated dataset (.jsonl file or directory)")->required();
  export_cmd->add_option("--out", out_path, "Output directory")->required();
  export_cmd->add_flag("--at", at, "Also write the reserved-token action variant");
  export_cmd->add_flag("--manifest", manifest, "Write training_manifest.txt");
  export_cmd->add_option("--override", overrides, "Training manifest override key=value; repeatable");
  add_common(export_cmd, common, false);

  auto* rollout_cmd = app.add_subcommand("rollout", "Run closed-loop episodes in the simulator");
  rollout_cmd->add_option("--scenario", scenarios, "Scenario file; repeatable")->required()->check(CLI::ExistingFile);
  rollout_cmd->add_option("--out", out_path, "Directory for episode logs (default rollout_logs)");
  add_common(rollout_cmd, common, true);

  auto* eval_cmd = app.add_subcommand("eval", "Score rollout logs against rubrics");
  eval_cmd->add_option("--in", in, "Rollout log file or directory")->required();
  eval_cmd->add_option("--rubric", rubric, "Rubric file, or directory of <rubric-id>.toml files")->required();
  eval_cmd->add_option("--out", out_path, "Directory for report.json and report.txt");
  add_common(eval_cmd, common, false);

  auto* stats_cmd = app.add_subcommand("stats", "Latency statistics of inference cycles");
  stats_cmd->add_option("--logs,--in", logs, "Rollout log file or directory")->required();
  stats_cmd->add_option("--out", out_path, "Write the statistics as JSON to this file");
  add_common(stats_cmd, common, false);

  auto* probe_cmd = app.add_subcommand("probe", "Compare log-probabilities of language vs reserved-token actions");
  probe_cmd->add_option("--in", in, "Annotated dataset (.jsonl file or directory)")->required();
  probe_cmd->add_option("--out", out_path, "Directory for probe.csv and probe_summary.json");
  add_common(probe_cmd, common, true);

  // CLI11 consumes a reversed argument vector without the program name.
  std::vector<std::string> rev;
  for (std::size_t i = args.size(); i > 1; --i) rev.push_back(args[i - 1]);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (annotate_cmd->parsed()) return cmd_annotate(common, in, out_path, out);
    if (chunk_cmd->parsed()) return cmd_chunk(common, in, out_path, out);
    if (export_cmd->parsed()) return cmd_export(common, in, out_path, at, manifest, overrides, out);
    if (rollout_cmd->parsed()) {
      return cmd_rollout(common, scenarios, out_path.empty() ? "rollout_logs" : out_path, out, err);
    }
    if (eval_cmd->parsed()) return cmd_eval(common, in, rubric, out_path, out);
    if (stats_cmd->parsed()) return cmd_stats(common, logs, out_path, out);
    if (probe_cmd->parsed()) return cmd_probe(common, in, out_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kGeneric;
  }
  return kUsage;
}

}  // namespace a2l::cli

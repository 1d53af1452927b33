#include "a2l/core/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "a2l/core/number_format.hpp"
#include "a2l/errors.hpp"

namespace a2l {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kMaxFractionDigits = 6;

// SAX pass that only looks at the literal text of floating-point numbers.
class FractionDigitCheck : public nlohmann::json_sax<json> {
 public:
  bool null() override { return true; }
  bool boolean(bool) override { return true; }
  bool number_integer(number_integer_t) override { return true; }
  bool number_unsigned(number_unsigned_t) override { return true; }
  bool number_float(number_float_t, const string_t& text) override {
    const auto dot = text.find('.');
    if (dot == string_t::npos) return true;
    auto end = text.find_first_of("eE", dot);
    if (end == string_t::npos) end = text.size();
    if (end - dot - 1 > kMaxFractionDigits) {
      offending = text;
      return false;
    }
    return true;
  }
  bool string(string_t&) override { return true; }
  bool binary(binary_t&) override { return true; }
  bool start_object(std::size_t) override { return true; }
  bool key(string_t&) override { return true; }
  bool end_object() override { return true; }
  bool start_array(std::size_t) override { return true; }
  bool end_array() override { return true; }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

  std::string offending;
};

json parse_line(const std::string& line, std::size_t line_no) {
  FractionDigitCheck check;
  const bool ok = json::sax_parse(line, &check);
  if (!ok && !check.offending.empty()) {
    throw MalformedRecordError(line_no, "number " + check.offending +
                                            " has more than 6 fractional digits");
  }
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw MalformedRecordError(line_no, e.what());
  }
}

const json& require(const json& obj, const char* key, std::size_t line_no) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw MalformedRecordError(line_no, std::string("missing key '") + key + "'");
  }
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key, std::size_t line_no) {
  const auto& v = require(obj, key, line_no);
  if (!v.is_string()) throw MalformedRecordError(line_no, std::string("'") + key + "' not a string");
  return v.get<std::string>();
}

Action action_from_json(const json& v, std::size_t line_no, const std::string& id) {
  if (!v.is_array() || v.size() != 4) {
    throw MalformedRecordError(line_no, "action must be a 4-element array");
  }
  double c[4];
  for (int i = 0; i < 4; ++i) {
    if (!v[i].is_number()) {
      throw MalformedRecordError(line_no, "action component " + std::to_string(i) +
                                              " is not numeric");
    }
    c[i] = v[i].get<double>();
  }
  if (c[3] != 0.0 && c[3] != 1.0) {
    throw Error(ErrorKind::InvariantViolation,
                "trajectory " + id + ": gripper must be 0 or 1, got " + std::to_string(c[3]));
  }
  Action a{{c[0], c[1], c[2]}, c[3] == 1.0 ? Gripper::Open : Gripper::Closed};
  validate_action(a, "trajectory " + id);
  return a;
}

ActionChunk chunk_from_json(const json& v, std::size_t line_no, const std::string& id) {
  if (!v.is_array()) throw MalformedRecordError(line_no, "actions must be an array");
  ActionChunk out;
  for (const auto& a : v) out.push_back(action_from_json(a, line_no, id));
  return out;
}

std::string jstr(const std::string& s) { return json(s).dump(); }

std::string chunk_to_json(const ActionChunk& c) {
  std::string out = "[";
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) out += ", ";
    out += format_action(c[i]);
  }
  return out + "]";
}

}  // namespace

std::string raw_to_line(const RawTrajectory& t) {
  std::string out = "{\"id\": " + jstr(t.id) + ", \"instruction\": " + jstr(t.instruction) +
                    ", \"frames\": [";
  for (std::size_t i = 0; i < t.frames.size(); ++i) {
    if (i) out += ", ";
    out += "{\"obs\": " + jstr(t.frames[i].obs) + ", \"action\": " +
           format_action(t.frames[i].action) + "}";
  }
  return out + "]}";
}

RawTrajectory raw_from_line(const std::string& line, std::size_t line_no) {
  const json j = parse_line(line, line_no);
  RawTrajectory t;
  t.id = require_string(j, "id", line_no);
  t.instruction = require_string(j, "instruction", line_no);
  const auto& frames = require(j, "frames", line_no);
  if (!frames.is_array()) throw MalformedRecordError(line_no, "'frames' not an array");
  for (const auto& f : frames) {
    RawFrame frame;
    frame.obs = require_string(f, "obs", line_no);
    frame.action = action_from_json(require(f, "action", line_no), line_no, t.id);
    t.frames.push_back(std::move(frame));
  }
  validate_raw(t);
  return t;
}

std::string annotated_to_line(const AnnotatedTrajectory& t) {
  std::string out = "{\"id\": " + jstr(t.id) + ", \"instruction\": " + jstr(t.instruction);
  out += ", \"provenance\": {\"model\": " + jstr(t.provenance.model) +
         ", \"prompt_version\": " + jstr(t.provenance.prompt_version) +
         ", \"ts\": " + jstr(t.provenance.ts) +
         ", \"attempts\": " + std::to_string(t.provenance.attempts) + "}";
  if (t.terminal_obs) out += ", \"terminal_obs\": " + jstr(*t.terminal_obs);
  out += ", \"steps\": [";
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (i) out += ", ";
    out += "{\"index\": " + std::to_string(s.index) + ", \"subtask\": " + jstr(s.subtask) +
           ", \"reasoning\": " + jstr(s.reasoning) +
           ", \"main_movements\": " + jstr(s.main_movements) + ", \"obs\": " + jstr(s.obs) +
           ", \"actions\": " + chunk_to_json(s.chunk) +
           ", \"coalesced\": " + chunk_to_json(s.coalesced) + "}";
  }
  return out + "]}";
}

AnnotatedTrajectory annotated_from_line(const std::string& line, std::size_t line_no) {
  const json j = parse_line(line, line_no);
  AnnotatedTrajectory t;
  t.id = require_string(j, "id", line_no);
  t.instruction = require_string(j, "instruction", line_no);
  const auto& prov = require(j, "provenance", line_no);
  t.provenance.model = require_string(prov, "model", line_no);
  t.provenance.prompt_version = require_string(prov, "prompt_version", line_no);
  t.provenance.ts = require_string(prov, "ts", line_no);
  if (prov.contains("attempts")) t.provenance.attempts = prov.at("attempts").get<int>();
  if (j.contains("terminal_obs")) t.terminal_obs = require_string(j, "terminal_obs", line_no);
  const auto& steps = require(j, "steps", line_no);
  if (!steps.is_array()) throw MalformedRecordError(line_no, "'steps' not an array");
  for (const auto& s : steps) {
    AnnotatedStep step;
    const auto& idx = require(s, "index", line_no);
    if (!idx.is_number_unsigned()) throw MalformedRecordError(line_no, "bad step index");
    step.index = idx.get<std::size_t>();
    step.subtask = require_string(s, "subtask", line_no);
    step.reasoning = require_string(s, "reasoning", line_no);
    step.main_movements = require_string(s, "main_movements", line_no);
    step.obs = require_string(s, "obs", line_no);
    step.chunk = chunk_from_json(require(s, "actions", line_no), line_no, t.id);
    if (s.contains("coalesced")) {
      step.coalesced = chunk_from_json(s.at("coalesced"), line_no, t.id);
    }
    t.steps.push_back(std::move(step));
  }
  validate_annotated(t);
  return t;
}

std::string manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["dataset_id"] = m.dataset_id;
  j["schema_version"] = m.schema_version;
  j["source"] = m.source;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.counts) counts[k] = v;
  j["counts"] = counts;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    DatasetManifest m;
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.schema_version = j.at("schema_version").get<int>();
    m.source = j.at("source").get<std::string>();
    for (const auto& [k, v] : j.at("counts").items()) m.counts[k] = v.get<std::size_t>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("manifest: ") + e.what());
  }
}

std::string dataset_name(const fs::path& dir) {
  auto norm = dir.lexically_normal();
  if (norm.filename().empty()) norm = norm.parent_path();
  return norm.filename().string();
}

std::vector<fs::path> jsonl_inputs(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::MissingPath, path.string());
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

namespace {

template <typename Record, typename Parse>
std::vector<Record> load_lines(const fs::path& path, Parse parse) {
  std::vector<Record> out;
  for (const auto& file : jsonl_inputs(path)) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + file.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      out.push_back(parse(line, line_no));
    }
  }
  return out;
}

}  // namespace

std::vector<RawTrajectory> load_raw_dataset(const fs::path& path) {
  return load_lines<RawTrajectory>(path, raw_from_line);
}

std::vector<AnnotatedTrajectory> load_annotated_dataset(const fs::path& path) {
  return load_lines<AnnotatedTrajectory>(path, annotated_from_line);
}

DatasetManifest save_annotated_dataset(const std::vector<AnnotatedTrajectory>& records,
                                       const fs::path& dir, const std::string& source) {
  if (records.empty()) throw Error(ErrorKind::Precondition, "no records to save");
  std::string body;
  for (const auto& r : records) {
    try {
      validate_annotated(r);
    } catch (const Error& e) {
      throw Error(ErrorKind::SerializationFailure, r.id + ": " + e.what());
    }
    body += annotated_to_line(r);
    body += '\n';
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir.string());
  write_text_file(dir / "annotated.jsonl", body);

  DatasetManifest m;
  m.dataset_id = dataset_name(dir);
  m.counts["trajectories"] = records.size();
  std::size_t steps = 0;
  for (const auto& r : records) steps += r.steps.size();
  m.counts["steps"] = steps;
  m.source = source;
  write_text_file(dir / "manifest.json", manifest_to_json(m));
  return m;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::MissingPath, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace a2l

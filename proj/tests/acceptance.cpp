// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "a2l/annotate/annotation.hpp"
#include "a2l/backend/mock.hpp"
#include "a2l/cli.hpp"
#include "a2l/codec/action_text.hpp"
#include "a2l/codec/coalesce.hpp"
#include "a2l/codec/token_map.hpp"
#include "a2l/core/dataset_io.hpp"
#include "a2l/eval/eval.hpp"
#include "a2l/prompts.hpp"
#include "a2l/rollout/episode.hpp"
#include "a2l/rollout/scenario.hpp"

using namespace a2l;
namespace fs = std::filesystem;

namespace {

fs::path source(const std::string& rel) { return fs::path(A2L_SOURCE_DIR) / rel; }

struct Outcome {
  std::vector<std::string> failures;
  void expect(bool cond, const std::string& what) {
    if (!cond && failures.size() < 5) failures.push_back(what);
  }
};

double milli(std::mt19937_64& rng, int limit) {
  std::uniform_int_distribution<int> d(-limit, limit);
  return d(rng) / 1000.0;
}

ActionChunk pepper() {
  return {make_action(0.0, 0.0, 0.0, 1),     make_action(-0.002, 0.0, -0.007, 1), make_action(0.0, -0.004, -0.016, 1),
          make_action(0.002, -0.002, -0.014, 1), make_action(0.003, 0.0, -0.008, 1), make_action(0.002, 0.0, -0.011, 1),
          make_action(0.0, 0.0, -0.005, 1),  make_action(0.0, 0.0, -0.007, 1),    make_action(0.0, 0.0, -0.006, 1),
          make_action(0.001, -0.003, -0.003, 0)};
}

// ---- AC1 ---------------------------------------------------------------------

void ac1(Outcome& o) {
  const auto out = codec::coalesce(pepper());
  o.expect(out.size() == 4, "expected 4 groups");
  o.expect(codec::serialize_chunk(out) ==
               "[[-0.002, -0.004, -0.023, 1.0], [0.007, -0.002, -0.045, 1.0], [0.0, 0.0, -0.006, 1.0], "
               "[0.001, -0.003, -0.003, 0.0]]",
           "golden text differs: " + codec::serialize_chunk(out));
}

// ---- AC2 ---------------------------------------------------------------------

void ac2(Outcome& o) {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> len(1, 40), pct(0, 99);
  const codec::CoalesceConfig cfg;
  for (int trial = 0; trial < 10000; ++trial) {
    ActionChunk raw;
    double grip = pct(rng) < 50 ? 1.0 : 0.0;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      if (pct(rng) < 10) grip = 1.0 - grip;
      const int limit = pct(rng) < 10 ? 90 : 20;
      raw.push_back(make_action(milli(rng, limit), milli(rng, limit), milli(rng, limit), grip));
    }
    const auto r = codec::coalesce_with_groups(raw, cfg);
    const std::string tag = "trial " + std::to_string(trial) + ": ";
    if (r.chunk.size() != r.group_starts.size() || r.group_starts.empty() || r.group_starts[0] != 0) {
      o.expect(false, tag + "group bookkeeping");
      continue;
    }
    for (std::size_t g = 0; g < r.chunk.size(); ++g) {
      const std::size_t begin = r.group_starts[g];
      const std::size_t end = g + 1 < r.chunk.size() ? r.group_starts[g + 1] : raw.size();
      o.expect(begin < end, tag + "groups must be contiguous and ordered");
      double sum[3] = {0, 0, 0};
      for (std::size_t i = begin; i < end && i < raw.size(); ++i) {
        o.expect(raw[i].gripper == r.chunk[g].gripper, tag + "mixed gripper within a group");
        for (int d = 0; d < 3; ++d) sum[d] += raw[i].delta[d];
      }
      for (int d = 0; d < 3; ++d) {
        o.expect(std::abs(sum[d] - r.chunk[g].delta[d]) <= 1e-9, tag + "per-axis sum not conserved");
        if (end - begin > 1) o.expect(std::abs(r.chunk[g].delta[d]) <= cfg.axis_cap + 1e-9, tag + "cap exceeded");
      }
    }
  }
}

// ---- AC3 ---------------------------------------------------------------------

void ac3(Outcome& o) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> len(1, 12), coin(0, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    ActionChunk c;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) c.push_back(make_action(milli(rng, 100), milli(rng, 100), milli(rng, 100), coin(rng)));
    const auto text = codec::serialize_chunk(c);
    o.expect(codec::parse_chunk(text).chunk == c, "parse(serialize(c)) != c: " + text);
  }
  const auto map = codec::TokenMap::gemma3_default();
  const std::string alphabet = "0123456789.-, []<>unsedXYZ";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> slen(0, 60);
  for (int trial = 0; trial < 10000; ++trial) {
    std::string s;
    const int n = slen(rng);
    for (int i = 0; i < n; ++i) s += alphabet[pick(rng)];
    o.expect(codec::decode_at(codec::encode_at(s, map), map) == s, "AT round trip failed: " + s);
  }
  o.expect(codec::encode_at("-0.002", map) == "-<unused6133>.<unused6133><unused6133><unused6135>", "example encode");
  o.expect(codec::decode_at("-<unused6133>.<unused6133><unused6133><unused6135>", map) == "-0.002", "example decode");
  for (int d = 0; d <= 9; ++d) {
    o.expect(map.token_for(d) == "<unused" + std::to_string(6133 + d) + ">", "token for digit " + std::to_string(d));
    o.expect(map.id_for(d) == 262035 + d, "id for digit " + std::to_string(d));
  }
}

// ---- AC4 ---------------------------------------------------------------------

void ac4(Outcome& o) {
  const auto raw = load_raw_dataset(source("fixtures/silver_pot_raw.jsonl")).at(0);
  const auto frags = annotate::parse_annotation(read_text_file(source("fixtures/silver_pot_annotation.txt")));
  std::vector<std::size_t> sizes;
  for (const auto& f : frags) sizes.push_back(f.actions.size());
  o.expect(sizes == std::vector<std::size_t>{9, 1, 7, 5, 1, 6}, "step sizes");
  o.expect(annotate::validate_partition(raw, frags) == std::vector<std::size_t>{0, 9, 10, 17, 22, 23}, "alignment");
  for (std::size_t flat = 0; flat < raw.frames.size(); ++flat) {
    for (int axis = 0; axis < 3; ++axis) {
      auto p = frags;
      std::size_t k = flat, step = 0;
      while (k >= p[step].actions.size()) k -= p[step++].actions.size();
      p[step].actions[k].delta[axis] += 0.01;
      try {
        annotate::validate_partition(raw, p);
        o.expect(false, "perturbation at " + std::to_string(flat) + " accepted");
      } catch (const ValueMismatchError& e) {
        o.expect(e.flat_index() == flat && e.axis() == axis, "wrong index for perturbation at " + std::to_string(flat));
      }
    }
  }
}

// ---- AC5 ---------------------------------------------------------------------

backend::MockEntry entry(std::string match, std::string response, bool repeat = true) {
  backend::MockEntry e;
  e.match = std::move(match);
  e.response = std::move(response);
  e.repeat = repeat;
  e.latency_s = 1.0;
  return e;
}

const std::vector<std::string> kSteps{"Move to the Carrot", "Grasp the Carrot", "Lift the Carrot"};

std::vector<backend::MockEntry> policy_script() {
  return {entry("overall task", "['Move to the Carrot', 'Grasp the Carrot', 'Lift the Carrot']"),
          entry("task \"Move to the Carrot\"", "Forward and down."),
          entry("sub-task 'Move to the Carrot'", "[[0.05, 0.05, -0.09, 1.0], [0.0, 0.0, -0.09, 1.0]]"),
          entry("task \"Grasp the Carrot\"", "Close gripper."),
          entry("sub-task 'Grasp the Carrot'", "[[0.0, 0.0, 0.0, 0.0]]"),
          entry("task \"Lift the Carrot\"", "Up."),
          entry("sub-task 'Lift the Carrot'", "[[0.0, 0.0, 0.08, 0.0]]")};
}

struct Episode {
  rollout::RolloutLog log;
  std::vector<backend::TranscriptEntry> policy;
  std::vector<backend::TranscriptEntry> verifier;
};

Episode episode(const std::vector<std::pair<std::string, bool>>& verdicts, const rollout::RolloutConfig& cfg) {
  std::vector<backend::MockEntry> v;
  for (const auto& [name, ok] : verdicts) {
    v.push_back(entry("Current Subtask: " + name + "\n", prompts::verdict_json(ok, "High", "checked"), false));
  }
  auto clock = std::make_shared<backend::VirtualClock>();
  auto p = backend::make_mock(policy_script(), {}, clock);
  auto q = backend::make_mock(v, {}, clock);
  auto env = rollout::load_scenario(source("scenarios/pick_up.toml")).make_env(0);
  Episode e;
  e.log = rollout::run_episode(*p.client, *q.client, env, "pick up the carrot", cfg);
  e.policy = p.transport->transcript();
  e.verifier = q.transport->transcript();
  return e;
}

void ac5(Outcome& o) {
  rollout::RolloutConfig cfg;
  cfg.max_retries = 2;
  const auto a = episode({{kSteps[0], true}, {kSteps[1], true}, {kSteps[2], true}}, cfg);
  o.expect(a.log.cycles.size() == 3 && a.log.status == "complete", "(a) all-success episode must take 3 cycles");

  const auto b = episode({{kSteps[0], true}, {kSteps[1], false}, {kSteps[1], true}, {kSteps[2], true}}, cfg);
  o.expect(b.log.cycles.size() == 4, "(b) one failure must give 4 cycles");

  std::vector<std::pair<std::string, bool>> stubborn{{kSteps[0], true}};
  for (int k = 0; k < 6; ++k) stubborn.push_back({kSteps[1], false});
  stubborn.push_back({kSteps[2], true});
  const auto c = episode(stubborn, cfg);
  std::vector<int> per(3, 0);
  for (const auto& cy : c.log.cycles) ++per[cy.subtask_index];
  for (int n : per) o.expect(n <= 1 + cfg.max_retries, "(c) attempts per subtask exceed 1 + max_retries");
  o.expect(per[1] == 1 + cfg.max_retries && c.log.status == "forced_advance", "(c) forced advance");

  for (const auto* e : {&a, &b, &c}) {
    o.expect(e->policy.size() == 1 + 2 * e->log.cycles.size(), "(d) unexpected request count");
    if (e->policy.size() != 1 + 2 * e->log.cycles.size()) continue;
    o.expect(e->policy[0].chat.temperature == cfg.subtask_temperature && e->policy[0].chat.top_p == 0.95,
             "(e) planning sampling parameters");
    for (std::size_t k = 0; k < e->log.cycles.size(); ++k) {
      const auto& cy = e->log.cycles[k];
      const auto& l = e->log.subtasks[cy.subtask_index];
      const auto obs = rollout::SimEnv::from_snapshot(cy.before).descriptor();
      const auto motion = e->policy[1 + 2 * k].chat;
      const auto action = e->policy[2 + 2 * k].chat;
      const auto mt = motion.flattened_text();
      const auto at = action.flattened_text();
      o.expect(mt.find(l) != std::string::npos && mt.find(obs) != std::string::npos, "(d) motion request conditioning");
      o.expect(at.find(l) != std::string::npos && at.find(cy.motion_plan) != std::string::npos &&
                   at.find(obs) != std::string::npos,
               "(d) action request conditioning");
      o.expect(motion.temperature == 0.1 && motion.top_p == 0.95, "(e) motion sampling parameters");
      o.expect(action.temperature == 0.5 && action.top_p == 0.95, "(e) action sampling parameters");
    }
  }
  rollout::RolloutConfig ood = cfg;
  ood.ood = true;
  ood.subtask_temperature_ood = 1.0;
  const auto d = episode({{kSteps[0], true}, {kSteps[1], true}, {kSteps[2], true}}, ood);
  o.expect(d.policy[0].chat.temperature == 1.0, "(e) out-of-distribution planning temperature");
}

// ---- AC6 ---------------------------------------------------------------------

void ac6(Outcome& o) {
  const auto scenario = rollout::load_scenario(source("scenarios/pick_place_lift.toml"));
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> chunks(1, 8), len(1, 10), coin(0, 1);
  for (int ep = 0; ep < 1000; ++ep) {
    auto env = scenario.make_env(static_cast<std::uint64_t>(ep));
    const auto start = env.ee();
    rollout::Point sum{0, 0, 0};
    const int n = chunks(rng);
    for (int c = 0; c < n; ++c) {
      ActionChunk chunk;
      const int m = len(rng);
      for (int k = 0; k < m; ++k) chunk.push_back(make_action(milli(rng, 100), milli(rng, 100), milli(rng, 100), coin(rng)));
      for (const auto& a : rollout::safety_filter(chunk, env)) {
        env.step(a);
        o.expect(env.workspace().contains(env.ee()), "episode " + std::to_string(ep) + " left the workspace");
        for (int d = 0; d < 3; ++d) sum[d] += rollout::to_micro(a.delta[d]);
      }
    }
    for (int d = 0; d < 3; ++d) {
      o.expect(env.ee()[d] == start[d] + sum[d], "episode " + std::to_string(ep) + " displacement not conserved");
    }
  }
}

// ---- AC7 ---------------------------------------------------------------------

rollout::RolloutLog plan_log(std::vector<std::string> subtasks) {
  rollout::RolloutLog log;
  log.episode_id = "trial";
  log.subtasks = std::move(subtasks);
  return log;
}

Action act(double dx, double dy, double dz, double g) { return make_action(dx, dy, dz, g); }

rollout::SimEnv scene(const std::string& id) {
  return rollout::load_scenario(source("scenarios/" + id + ".toml")).make_env(0);
}

// Starts at the shared ee [0.30, 0.00, 0.20]; ends touching the object at (x, y, 0.02).
void reach(rollout::SimEnv& env, double x, double y) {
  const auto ee = env.ee_meters();
  const double hx = (x - ee[0]) / 2, hy = (y - ee[1]) / 2;
  rollout::execute(env, {act(hx, hy, -0.09, 1), act(hx, hy, 0.11 - ee[2], 1)});
}

int points(const rollout::RolloutLog& log, const rollout::SimEnv& env, const std::string& rubric) {
  return eval::score_trial(log, env, eval::load_rubric(source("rubrics/" + rubric + ".toml"))).points;
}

void ac7(Outcome& o) {
  {
    auto env = scene("pick_up");
    const auto log = plan_log({"Move to the Carrot"});
    reach(env, 0.35, 0.05);
    o.expect(points(log, env, "pick_up") == 1, "pick up: contact earns 1 of 2");
    rollout::execute(env, {act(0, 0, 0, 0), act(0, 0, 0.06, 0)});
    o.expect(points(log, env, "pick_up") == 2, "pick up: lift earns 2 of 2");
  }
  {
    auto env = scene("pick_and_place");
    const auto log = plan_log({"Move to the Carrot"});
    reach(env, 0.35, 0.05);
    o.expect(points(log, env, "pick_and_place") == 1, "pick and place: contact earns 1 of 2");
    rollout::execute(env, {act(0, 0, 0, 0), act(0, 0, 0.05, 0), act(0.10, -0.10, 0, 0), act(0, -0.10, -0.04, 0),
                           act(0, 0, 0, 1)});
    o.expect(points(log, env, "pick_and_place") == 2, "pick and place: release on plate earns 2 of 2");
  }
  {
    // Eggplant placed in the pan, fish contacted but never lifted.
    auto env = scene("pick_place_lift");
    reach(env, 0.35, -0.10);
    rollout::execute(env, {act(0, 0, 0, 0), act(0, 0, 0.08, 0), act(-0.10, 0.10, 0, 0), act(0, 0.10, 0, 0),
                           act(0, 0, -0.07, 0), act(0, 0, 0, 1), act(0, 0, 0.05, 1), act(0.10, 0, 0, 1),
                           act(0.10, 0, -0.06, 1)});
    const auto planned = plan_log({"Grasp the Aubergine", "Move to the Pan", "Release", "Lift the Fish"});
    o.expect(points(planned, env, "pick_place_lift") == 4, "compositional task: 4 of 5 with a correct plan");
    o.expect(points(plan_log({"Grasp the eggplant", "Lift the fish"}), env, "pick_place_lift") == 0,
             "compositional task: plan without the pan earns 0");
    o.expect(points(plan_log({}), env, "pick_place_lift_nonplanning") == 4,
             "compositional task: 4 of 5 for a non-planning policy");
    const auto kw = eval::load_rubric(source("rubrics/pick_place_lift.toml")).keywords;
    o.expect(kw && eval::keyword_score("the AUBERGINE goes in the pan, then the fish", *kw), "aubergine synonym");
  }
  {
    auto env = scene("pick_up_t");
    reach(env, 0.35, 0.05);
    rollout::execute(env, {act(0, 0, 0, 0), act(0, 0, 0.06, 0)});
    o.expect(points(plan_log({"Move to the gajar", "Lift"}), env, "pick_up_t") == 2, "gajar synonym credits the plan");
    o.expect(points(plan_log({"Mover a la zanahoria"}), env, "pick_up_t") == 0, "untranslated plan earns 0");
  }
  {
    auto env = scene("pick_up_a");
    reach(env, 0.35, -0.10);
    rollout::execute(env, {act(0, 0, 0, 0), act(0, 0, 0.06, 0)});
    o.expect(points(plan_log({"Move to the purple vegetable"}), env, "pick_up_a_eggplant") == 2,
             "abstract task: correct item");
    o.expect(points(plan_log({"Move to the carrot"}), env, "pick_up_a_eggplant") == 0, "abstract task: wrong item");
    o.expect(points(plan_log({"Move to the eggplant"}), env, "pick_up_a_carrot") == 0,
             "abstract task: carrot trial without carrot contact");
  }
}

// ---- AC8 ---------------------------------------------------------------------

double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const long double rank = p * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return static_cast<double>(v[lo] + (static_cast<long double>(v[hi]) - v[lo]) * (rank - lo));
}

void ac8(Outcome& o) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 300);
  std::uniform_real_distribution<double> val(0.05, 20.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(static_cast<std::size_t>(size(rng)));
    for (auto& x : v) x = val(rng);
    long double sum = 0;
    for (double x : v) sum += x;
    const long double mean = sum / v.size();
    long double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? static_cast<double>(std::sqrt(ss / (v.size() - 1))) : 0.0;
    const auto s = eval::latency_stats(v);
    const std::string tag = "multiset " + std::to_string(t) + ": ";
    o.expect(std::abs(s.median - oracle_quantile(v, 0.5)) <= 1e-9, tag + "median");
    o.expect(std::abs(s.mean - static_cast<double>(mean)) <= 1e-9, tag + "mean");
    o.expect(std::abs(s.std - sd) <= 1e-9, tag + "std");
    o.expect(std::abs(s.p25 - oracle_quantile(v, 0.25)) <= 1e-9, tag + "p25");
    o.expect(std::abs(s.p75 - oracle_quantile(v, 0.75)) <= 1e-9, tag + "p75");
    o.expect(s.min == *std::min_element(v.begin(), v.end()), tag + "min");
    o.expect(s.max == *std::max_element(v.begin(), v.end()), tag + "max");
  }
  const auto one = eval::latency_stats({3.25});
  o.expect(one.median == 3.25 && one.mean == 3.25 && one.p25 == 3.25 && one.p75 == 3.25 && one.min == 3.25 &&
               one.max == 3.25 && one.std == 0.0,
           "singleton fields");
}

// ---- AC9 ---------------------------------------------------------------------

int run_cli(std::vector<std::string> args, Outcome& o) {
  args.insert(args.begin(), "a2l");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  o.expect(code == 0, args[1] + " exited " + std::to_string(code) + ": " + err.str());
  return code;
}

void pipeline(const fs::path& dir, Outcome& o) {
  fs::remove_all(dir);
  const auto mocks = source("mocks/e2e").string();
  if (run_cli({"annotate", "--in", source("fixtures/corpus/raw.jsonl").string(), "--out", (dir / "annotated").string(),
           "--mock", mocks, "--jobs", "3", "--seed", "11"},
          o) != 0)
    return;
  if (run_cli({"export-sft", "--in", (dir / "annotated").string(), "--out", (dir / "sft").string(), "--at", "--manifest",
           "--seed", "11"},
          o) != 0)
    return;
  if (run_cli({"rollout", "--scenario", source("scenarios/pick_up.toml").string(), "--scenario",
           source("scenarios/pick_and_place.toml").string(), "--scenario",
           source("scenarios/pick_place_lift.toml").string(), "--mock", mocks, "--out", (dir / "logs").string(),
           "--jobs", "3", "--seed", "11"},
          o) != 0)
    return;
  if (run_cli({"eval", "--in", (dir / "logs").string(), "--rubric", source("rubrics").string(), "--out",
           (dir / "report").string()},
          o) != 0)
    return;
  run_cli({"stats", "--logs", (dir / "logs").string(), "--out", (dir / "stats.json").string()}, o);
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ac9(Outcome& o) {
  const auto base = fs::temp_directory_path() / "a2l_acceptance_e2e";
  pipeline(base / "run1", o);
  pipeline(base / "run2", o);
  const auto a = files_under(base / "run1");
  const auto b = files_under(base / "run2");
  o.expect(!a.empty() && a == b, "runs produced different file sets");
  for (const auto* f : {"annotated", "sft/sft.jsonl", "sft/sft_at.jsonl", "logs", "report/report.json", "stats.json"}) {
    o.expect(fs::exists(base / "run1" / f), std::string("missing output ") + f);
  }
  for (const auto& f : a) {
    if (!fs::exists(base / "run2" / f)) continue;
    o.expect(read_text_file(base / "run1" / f) == read_text_file(base / "run2" / f),
             "outputs differ: " + f.string());
  }
}

struct Criterion {
  const char* id;
  const char* title;
  double limit_s;  // 0: no runtime bound
  std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"AC1", "coalescing golden", 1.0, ac1},
      {"AC2", "coalescing properties (10000 sequences)", 30.0, ac2},
      {"AC3", "codec and action-token round trips", 30.0, ac3},
      {"AC4", "annotation partition validation", 0.0, ac4},
      {"AC5", "rollout state machine", 10.0, ac5},
      {"AC6", "safety filter and conservation (1000 episodes)", 0.0, ac6},
      {"AC7", "rubric scoring", 0.0, ac7},
      {"AC8", "latency statistics", 0.0, ac8},
      {"AC9", "end-to-end dry run", 60.0, ac9},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && s >= c.limit_s) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "runtime %.3f s exceeds %.0f s", s, c.limit_s);
      o.failures.push_back(buf);
    }
    const bool ok = o.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s %s %s (%.3f s)\n", c.id, ok ? "PASS" : "FAIL", c.title, s);
    for (const auto& f : o.failures) std::printf("    %s\n", f.c_str());
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "a2l/backend/mock.hpp"
#include "a2l/eval/eval.hpp"
#include "a2l/rollout/scenario.hpp"
#include "support.hpp"

using namespace a2l;
using namespace a2l::eval;
using a2l::rollout::execute;
using a2l::rollout::RolloutLog;
using a2l::rollout::SimEnv;
using a2l::testing::kind_of;
using a2l::testing::source_path;

namespace {

Rubric rubric(const std::string& id) { return load_rubric(source_path("rubrics/" + id + ".toml")); }

SimEnv scenario_env(const std::string& id) {
  return rollout::load_scenario(source_path("scenarios/" + id + ".toml")).make_env(0);
}

RolloutLog log_with_plan(std::vector<std::string> subtasks, std::vector<std::string> motion_plans = {}) {
  RolloutLog log;
  log.episode_id = "ep";
  log.subtasks = std::move(subtasks);
  for (auto& m : motion_plans) {
    rollout::CycleRecord c;
    c.motion_plan = std::move(m);
    log.cycles.push_back(std::move(c));
  }
  return log;
}

Action a(double dx, double dy, double dz, double g) { return make_action(dx, dy, dz, g); }

// From ee [0.30, 0.00, 0.20] down onto an object at (x, y, 0.02).
void reach(SimEnv& env, double x, double y) {
  const auto ee = env.ee_meters();
  const double hx = (x - ee[0]) / 2, hy = (y - ee[1]) / 2;
  execute(env, {a(hx, hy, -0.09, 1), a(hx, hy, 0.02 + 0.09 - ee[2], 1)});
}

void grasp_and_lift(SimEnv& env, double dz) { execute(env, {a(0, 0, 0, 0), a(0, 0, dz, 0)}); }

// Eggplant into the pan, then down onto the fish with the gripper open.
void eggplant_to_pan_then_touch_fish(SimEnv& env) {
  reach(env, 0.35, -0.10);
  grasp_and_lift(env, 0.08);
  execute(env, {a(-0.10, 0.10, 0, 0), a(0, 0.10, 0, 0), a(0, 0, -0.07, 0), a(0, 0, 0, 1), a(0, 0, 0.05, 1)});
  execute(env, {a(0.10, 0, 0, 1), a(0.10, 0, -0.06, 1)});
}

}  // namespace

TEST_CASE("keyword scoring is case-insensitive and needs every group") {
  KeywordSpec spec{{{"eggplant", "purple", "aubergine"}, {"pan"}, {"fish"}}};
  CHECK(keyword_score("Move to the AUBERGINE\nPlace in Pan\nGrasp fish", spec));
  CHECK(keyword_score("purple thing -> frying pan; then the fish", spec));
  CHECK_FALSE(keyword_score("Move to the eggplant and the pan", spec));
  KeywordSpec carrot{{{"carrot", "orange", "gajar"}}};
  CHECK(keyword_score("Move to the Gajar", carrot));
  CHECK_FALSE(keyword_score("Mover a la zanahoria", carrot));
  CHECK(kind_of([] { KeywordSpec{{{}}}.validate(); }) == ErrorKind::ConfigError);
}

TEST_CASE("atoms") {
  CHECK(parse_atom(" placed:eggplant@pan ").region == "pan");
  CHECK(parse_atom("lifted:fish").text() == "lifted:fish");
  CHECK(parse_atom("plan").kind == "plan");
  CHECK(kind_of([] { parse_atom("placed:eggplant"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_atom("thrown:fish"); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_atom("lifted:"); }) == ErrorKind::ConfigError);
}

TEST_CASE("shipped rubrics") {
  const auto r = rubric("pick_place_lift");
  CHECK(r.max_points == 5);
  REQUIRE(r.milestones.size() == 5);
  CHECK(r.milestones[2].text() == "placed:eggplant@pan");
  CHECK(rubric("pick_up").max_points == 2);
  CHECK(rubric("pick_and_place").max_points == 2);
  CHECK(rubric("pick_place_lift_nonplanning").max_points == 5);
  const auto t = rubric("pick_up_t");
  CHECK(t.max_points == 2);
  CHECK(t.milestones[0].all_of.size() == 2);
  CHECK(rubric("pick_up_a_eggplant").max_points == 2);
  CHECK(kind_of([] { parse_rubric(config::FlatConfig::parse("id = \"x\"\nmax_points = 1\nmilestones = [\"plan\"]\n"), "x"); }) ==
        ErrorKind::ConfigError);
  CHECK(kind_of([] { parse_rubric(config::FlatConfig::parse("id = \"x\"\nmax_points = 2\nmilestones = [\"lifted:a\"]\n"), "x"); }) ==
        ErrorKind::ConfigError);
}

TEST_CASE("pick up") {
  auto env = scenario_env("pick_up");
  const auto log = log_with_plan({"Move to the Carrot", "Grasp the Carrot", "Lift the Carrot"});
  CHECK(score_trial(log, env, rubric("pick_up")).points == 0);
  reach(env, 0.35, 0.05);
  CHECK(score_trial(log, env, rubric("pick_up")).points == 1);
  grasp_and_lift(env, 0.04);
  CHECK(score_trial(log, env, rubric("pick_up")).points == 1);
  execute(env, {a(0, 0, 0.01, 0)});
  const auto card = score_trial(log, env, rubric("pick_up"));
  CHECK(card.points == 2);
  CHECK(card.max_points == 2);
  CHECK(card.trace.size() == 2);
  CHECK_FALSE(card.keyword_pass.has_value());
}

TEST_CASE("pick and place") {
  auto env = scenario_env("pick_and_place");
  const auto log = log_with_plan({"Move to the Carrot"});
  reach(env, 0.35, 0.05);
  grasp_and_lift(env, 0.05);
  execute(env, {a(0.10, -0.10, 0, 0), a(0, -0.10, -0.04, 0)});
  CHECK(score_trial(log, env, rubric("pick_and_place")).points == 1);  // still held over the plate
  execute(env, {a(0, 0, 0, 1)});
  CHECK(score_trial(log, env, rubric("pick_and_place")).points == 2);
}

TEST_CASE("pick, place and lift with the planning milestone") {
  const auto r = rubric("pick_place_lift");
  auto env = scenario_env("pick_place_lift");
  eggplant_to_pan_then_touch_fish(env);
  const auto plan = log_with_plan({"Move to the Eggplant", "Place it in the Pan", "Grasp the Fish", "Lift the Fish"});
  auto card = score_trial(plan, env, r);
  CHECK(card.points == 4);
  CHECK(card.keyword_pass == true);
  CHECK(card.trace[4].achieved == false);

  // The milestones form a prefix; a plan that never mentions the pan earns nothing.
  const auto vague = log_with_plan({"Move to the Eggplant", "Grasp the Fish"}, {"Forward (+dx)."});
  CHECK(score_trial(vague, env, r).points == 0);
  const auto from_motion = log_with_plan({"Move to the Eggplant", "Grasp the Fish"}, {"Move over the pan (+dy)."});
  CHECK(score_trial(from_motion, env, r).points == 4);

  grasp_and_lift(env, 0.05);
  CHECK(score_trial(plan, env, r).points == 5);
}

TEST_CASE("pick, place and lift without planning") {
  const auto r = rubric("pick_place_lift_nonplanning");
  auto env = scenario_env("pick_place_lift");
  reach(env, 0.35, -0.10);
  grasp_and_lift(env, 0.08);
  execute(env, {a(-0.10, 0.10, 0, 0), a(0, 0.10, 0, 0), a(0, 0, -0.07, 0), a(0, 0, 0, 1), a(0, 0, 0.05, 1)});
  const auto log = log_with_plan({});
  // Lowering into the pan already brings the end-effector 5 cm closer to the fish.
  CHECK(score_trial(log, env, r).points == 3);
  CHECK(score_trial(log, env, r).trace[3].achieved == false);
  execute(env, {a(0.10, 0, 0, 1)});
  CHECK(score_trial(log, env, r).points == 3);
  execute(env, {a(0.10, 0, -0.06, 1)});
  CHECK(score_trial(log, env, r).points == 4);
  grasp_and_lift(env, 0.05);
  CHECK(score_trial(log, env, r).points == 5);
}

TEST_CASE("translated and abstract instructions") {
  auto env = scenario_env("pick_up_t");
  reach(env, 0.35, 0.05);
  grasp_and_lift(env, 0.06);
  const auto r = rubric("pick_up_t");
  CHECK(score_trial(log_with_plan({"Mover a la zanahoria"}), env, r).points == 0);
  CHECK(score_trial(log_with_plan({"Move to the orange vegetable"}), env, r).points == 2);
  CHECK(score_trial(log_with_plan({"Move to the gajar"}), env, r).points == 2);

  const auto ra = rubric("pick_up_a_eggplant");
  auto wrong = scenario_env("pick_up_a");
  reach(wrong, 0.35, 0.15);  // the carrot
  grasp_and_lift(wrong, 0.06);
  CHECK(score_trial(log_with_plan({"Move to the eggplant"}), wrong, ra).points == 0);
  CHECK(score_trial(log_with_plan({"Move to the carrot"}), wrong, rubric("pick_up_a_carrot")).points == 2);
}

TEST_CASE("rubrics naming absent entities are rejected") {
  auto env = scenario_env("pick_up");
  CHECK(kind_of([&] { score_trial(log_with_plan({"x"}), env, rubric("pick_place_lift_nonplanning")); }) ==
        ErrorKind::UnknownEntity);
  CHECK(kind_of([&] { score_trial(log_with_plan({"x"}), scenario_env("pick_up"), rubric("pick_and_place")); }) ==
        ErrorKind::UnknownEntity);
}

namespace {

// Order-statistic interpolation written directly from ranks, with long double accumulation.
double oracle_percentile(std::vector<double> v, double p) {
  const long double pos = p * static_cast<long double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const long double a = v[lo];
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(hi), v.end());
  const long double b = v[hi];
  return static_cast<double>(a + (b - a) * (pos - static_cast<long double>(lo)));
}

}  // namespace

TEST_CASE("latency statistics against an independent oracle") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(2, 200);
  std::uniform_real_distribution<double> val(0.2, 12.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(size(rng)));
    for (auto& x : v) x = std::round(val(rng) * 1000.0) / 1000.0;
    if (trial % 5 == 0) v.push_back(v[0]);  // duplicates

    long double sum = 0;
    for (double x : v) sum += x;
    const long double mean = sum / v.size();
    long double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = static_cast<double>(std::sqrt(ss / (v.size() - 1)));

    const auto s = latency_stats(v);
    CHECK(s.count == v.size());
    CHECK(std::abs(s.mean - static_cast<double>(mean)) <= 1e-9);
    CHECK(std::abs(s.std - sd) <= 1e-9);
    CHECK(std::abs(s.median - oracle_percentile(v, 0.5)) <= 1e-9);
    CHECK(std::abs(s.p25 - oracle_percentile(v, 0.25)) <= 1e-9);
    CHECK(std::abs(s.p75 - oracle_percentile(v, 0.75)) <= 1e-9);
    CHECK(s.min == *std::min_element(v.begin(), v.end()));
    CHECK(s.max == *std::max_element(v.begin(), v.end()));

    std::shuffle(v.begin(), v.end(), rng);
    const auto again = latency_stats(v);
    CHECK(again.mean == s.mean);
    CHECK(again.std == s.std);
  }
}

TEST_CASE("latency statistics edge cases") {
  const auto one = latency_stats({4.2});
  CHECK(one.median == 4.2);
  CHECK(one.mean == 4.2);
  CHECK(one.p25 == 4.2);
  CHECK(one.p75 == 4.2);
  CHECK(one.min == 4.2);
  CHECK(one.max == 4.2);
  CHECK(one.std == 0.0);
  const auto four = latency_stats({1, 2, 3, 4});
  CHECK(four.median == doctest::Approx(2.5));
  CHECK(four.p25 == doctest::Approx(1.75));
  CHECK(four.p75 == doctest::Approx(3.25));
  CHECK(kind_of([] { latency_stats({}); }) == ErrorKind::EmptyInput);
  CHECK(kind_of([] { latency_stats({1.0, 0.0}); }) == ErrorKind::Precondition);
  CHECK(kind_of([] { latency_stats({1.0, -2.0}); }) == ErrorKind::Precondition);
  CHECK(kind_of([] { latency_stats({1.0, NAN}); }) == ErrorKind::Precondition);

  const auto table = stats_table(four);
  CHECK(table.find("Median              2.500 [s]") != std::string::npos);
  CHECK(table.find("IQR                 1.750 - 3.250 [s]") != std::string::npos);
  const auto j = stats_to_json(four);
  CHECK(j["iqr_s"][1].get<double>() == doctest::Approx(3.25));
}

TEST_CASE("cycle durations come from the log") {
  RolloutLog log;
  for (double d : {5.3, 6.4}) {
    rollout::CycleRecord c;
    c.latency.cycle_s = d;
    log.cycles.push_back(c);
  }
  CHECK(cycle_durations(log) == std::vector<double>{5.3, 6.4});
}

TEST_CASE("reports group by scenario") {
  ScoreCard c1{"a", "pick_up", 2, 2, {}, {}};
  ScoreCard c2{"b", "pick_up", 1, 2, {}, {}};
  ScoreCard c3{"c", "pick_place_lift", 4, 5, {}, true};
  const auto r = build_report({c1, c2, c3}, {"pick_up", "pick_up", "pick_place_lift"});
  REQUIRE(r.summaries.size() == 2);
  CHECK(r.summaries[0].trials == 2);
  CHECK(r.summaries[0].points == 3);
  CHECK(r.summaries[0].mean_fraction == doctest::Approx(0.75));
  CHECK(r.summaries[1].mean_fraction == doctest::Approx(0.8));
  CHECK(report_to_json(r)["summaries"].size() == 2);
  CHECK(report_table(r).find("pick_place_lift") != std::string::npos);
  CHECK(kind_of([&] { build_report({c1}, {}); }) == ErrorKind::Precondition);
}

TEST_CASE("representation probe") {
  const auto script = backend::MockTransport::load_script(source_path("mocks/probe/policy.json"));
  backend::BackendConfig cfg;
  cfg.caps.logprobs = true;
  auto m = backend::make_mock(script, cfg);
  const auto map = codec::TokenMap::gemma3_default();
  const ActionChunk chunk{a(0.01, -0.02, 0.0, 1)};
  const auto r = representation_probe(*m.client, {backend::Message::user("act")}, chunk, map);
  CHECK(r.language_text == "[[0.010, -0.020, 0.0, 1.0]]");
  CHECK(r.language_mean == doctest::Approx(-0.35));
  CHECK(r.at_mean == doctest::Approx(-14.5));
  CHECK(r.at_mean < r.language_mean);
  CHECK(probe_csv({r}) == "index,language_mean,at_mean\n0,-0.350000,-14.500000\n");

  auto blind = backend::make_mock(script);
  CHECK(kind_of([&] { representation_probe(*blind.client, {backend::Message::user("act")}, chunk, map); }) ==
        ErrorKind::CapabilityMissing);
}

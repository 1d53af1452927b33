#include "a2l/eval/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "a2l/codec/action_text.hpp"

namespace a2l::eval {

using nlohmann::ordered_json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double percentile(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

void KeywordSpec::validate() const {
  for (const auto& g : groups) {
    if (g.empty()) throw Error(ErrorKind::ConfigError, "keyword group is empty");
    for (const auto& w : g) {
      if (w.empty()) throw Error(ErrorKind::ConfigError, "empty keyword");
    }
  }
}

bool keyword_score(std::string_view text, const KeywordSpec& spec) {
  if (text.empty()) return false;
  const std::string hay = lower(text);
  for (const auto& group : spec.groups) {
    const bool hit = std::any_of(group.begin(), group.end(), [&](const std::string& w) {
      return hay.find(lower(w)) != std::string::npos;
    });
    if (!hit) return false;
  }
  return true;
}

std::string Atom::text() const {
  if (kind == "plan") return "plan";
  if (kind == "placed") return "placed:" + object + "@" + region;
  return kind + ":" + object;
}

Atom parse_atom(const std::string& raw) {
  const std::string t = trim(raw);
  if (t == "plan") return {"plan", "", ""};
  const auto colon = t.find(':');
  if (colon == std::string::npos) throw Error(ErrorKind::ConfigError, "bad milestone atom '" + t + "'");
  Atom a{trim(t.substr(0, colon)), trim(t.substr(colon + 1)), ""};
  if (a.kind == "placed") {
    const auto at = a.object.find('@');
    if (at == std::string::npos) {
      throw Error(ErrorKind::ConfigError, "placed atom needs object@region: '" + t + "'");
    }
    a.region = trim(a.object.substr(at + 1));
    a.object = trim(a.object.substr(0, at));
    if (a.region.empty()) throw Error(ErrorKind::ConfigError, "placed atom has no region: '" + t + "'");
  } else if (a.kind != "contacted" && a.kind != "lifted" && a.kind != "moved_toward") {
    throw Error(ErrorKind::ConfigError, "unknown milestone predicate '" + a.kind + "'");
  }
  if (a.object.empty()) throw Error(ErrorKind::ConfigError, "atom has no object: '" + t + "'");
  return a;
}

std::string Milestone::text() const {
  std::string out;
  for (std::size_t i = 0; i < all_of.size(); ++i) {
    if (i) out += " & ";
    out += all_of[i].text();
  }
  return out;
}

void Rubric::validate() const {
  if (id.empty()) throw Error(ErrorKind::ConfigError, "rubric has no id");
  if (milestones.empty()) throw Error(ErrorKind::ConfigError, id + ": rubric has no milestones");
  if (max_points != static_cast<int>(milestones.size())) {
    throw Error(ErrorKind::ConfigError, id + ": max_points must equal the number of milestones");
  }
  for (const auto& m : milestones) {
    if (m.all_of.empty()) throw Error(ErrorKind::ConfigError, id + ": empty milestone");
    for (const auto& a : m.all_of) {
      if (a.kind == "plan" && !keywords) {
        throw Error(ErrorKind::ConfigError, id + ": plan milestone needs keyword groups");
      }
    }
  }
  if (keywords) keywords->validate();
}

Rubric parse_rubric(const config::FlatConfig& cfg, const std::string& fallback_id) {
  Rubric r;
  r.id = cfg.get_string("id", fallback_id);
  const auto* ms = cfg.find("milestones");
  if (ms == nullptr || !ms->is_array()) throw Error(ErrorKind::ConfigError, r.id + ": milestones must be an array");
  for (const auto& v : ms->as_array()) {
    if (!v.is_string()) throw Error(ErrorKind::ConfigError, r.id + ": milestones must be strings");
    Milestone m;
    const std::string& s = v.as_string();
    std::size_t from = 0;
    while (true) {
      const auto amp = s.find('&', from);
      m.all_of.push_back(parse_atom(s.substr(from, amp == std::string::npos ? std::string::npos : amp - from)));
      if (amp == std::string::npos) break;
      from = amp + 1;
    }
    r.milestones.push_back(std::move(m));
  }
  r.max_points = static_cast<int>(cfg.get_number("max_points", static_cast<double>(r.milestones.size())));
  if (const auto* kw = cfg.find("keywords")) {
    if (!kw->is_array()) throw Error(ErrorKind::ConfigError, r.id + ": keywords must be an array of arrays");
    KeywordSpec spec;
    for (const auto& g : kw->as_array()) {
      if (!g.is_array()) throw Error(ErrorKind::ConfigError, r.id + ": keyword groups must be arrays");
      std::vector<std::string> group;
      for (const auto& w : g.as_array()) {
        if (!w.is_string()) throw Error(ErrorKind::ConfigError, r.id + ": keywords must be strings");
        group.push_back(w.as_string());
      }
      spec.groups.push_back(std::move(group));
    }
    r.keywords = std::move(spec);
  }
  r.validate();
  return r;
}

Rubric load_rubric(const std::filesystem::path& path) {
  return parse_rubric(config::FlatConfig::load(path), path.stem().string());
}

bool atom_holds(const Atom& a, const rollout::RolloutLog& log, const rollout::SimEnv& env,
                const Rubric& rubric) {
  if (a.kind == "plan") {
    return rubric.keywords && keyword_score(log.planning_text(), *rubric.keywords);
  }
  const std::size_t i = env.object_index(a.object);
  const auto& st = env.stats()[i];
  const auto& p = env.params();
  if (a.kind == "contacted") return st.min_ee_distance < p.contact_radius;
  if (a.kind == "lifted") return st.max_lift_while_held + 1e-12 >= p.lift_threshold;
  if (a.kind == "moved_toward") {
    return st.initial_ee_distance - st.min_ee_distance + 1e-12 >= p.approach_distance;
  }
  if (a.kind == "placed") {
    const auto& region = env.region(a.region);
    const bool held = env.held() && *env.held() == i;
    return !held && region.box.contains(env.objects()[i].pos);
  }
  throw Error(ErrorKind::ConfigError, "unknown milestone predicate '" + a.kind + "'");
}

ScoreCard score_trial(const rollout::RolloutLog& log, const rollout::SimEnv& env_final,
                      const Rubric& rubric) {
  rubric.validate();
  for (const auto& m : rubric.milestones) {
    for (const auto& a : m.all_of) {
      if (a.kind == "plan") continue;
      env_final.object_index(a.object);
      if (a.kind == "placed") env_final.region(a.region);
    }
  }
  ScoreCard card;
  card.episode_id = log.episode_id;
  card.rubric_id = rubric.id;
  card.max_points = rubric.max_points;
  if (rubric.keywords) card.keyword_pass = keyword_score(log.planning_text(), *rubric.keywords);
  bool prefix = true;
  for (std::size_t k = 0; k < rubric.milestones.size(); ++k) {
    const auto& m = rubric.milestones[k];
    const bool ok = std::all_of(m.all_of.begin(), m.all_of.end(),
                                [&](const Atom& a) { return atom_holds(a, log, env_final, rubric); });
    card.trace.push_back({m.text(), ok});
    if (ok && prefix) {
      card.points = static_cast<int>(k) + 1;
    } else {
      prefix = false;
    }
  }
  return card;
}

LatencyStats latency_stats(std::vector<double> d) {
  if (d.empty()) throw Error(ErrorKind::EmptyInput, "no durations");
  for (double x : d) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::Precondition, "durations must be positive and finite");
    }
  }
  std::sort(d.begin(), d.end());
  LatencyStats s;
  s.count = d.size();
  s.min = d.front();
  s.max = d.back();
  s.median = percentile(d, 0.5);
  s.p25 = percentile(d, 0.25);
  s.p75 = percentile(d, 0.75);
  // Welford over the sorted values keeps the result independent of input order.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double x : d) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  s.mean = std::clamp(mean, s.min, s.max);
  s.std = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
  return s;
}

std::vector<double> cycle_durations(const rollout::RolloutLog& log) {
  std::vector<double> out;
  for (const auto& c : log.cycles) out.push_back(c.latency.cycle_s);
  return out;
}

ordered_json stats_to_json(const LatencyStats& s) {
  ordered_json j;
  j["count"] = s.count;
  j["median_s"] = s.median;
  j["mean_s"] = s.mean;
  j["std_s"] = s.std;
  j["iqr_s"] = {s.p25, s.p75};
  j["min_s"] = s.min;
  j["max_s"] = s.max;
  return j;
}

std::string stats_table(const LatencyStats& s) {
  std::string out;
  out += "Statistic           Value\n";
  out += "Median              " + fixed(s.median, 3) + " [s]\n";
  out += "Mean                " + fixed(s.mean, 3) + " [s]\n";
  out += "Standard Deviation  " + fixed(s.std, 3) + " [s]\n";
  out += "IQR                 " + fixed(s.p25, 3) + " - " + fixed(s.p75, 3) + " [s]\n";
  out += "Minimum             " + fixed(s.min, 3) + " [s]\n";
  out += "Maximum             " + fixed(s.max, 3) + " [s]\n";
  out += "Cycles              " + std::to_string(s.count) + "\n";
  return out;
}

ProbeResult representation_probe(backend::BackendClient& client,
                                 const std::vector<backend::Message>& prompt,
                                 const ActionChunk& chunk, const codec::TokenMap& map) {
  if (!client.config().caps.logprobs) {
    throw Error(ErrorKind::CapabilityMissing, "representation probe needs log-probabilities");
  }
  ProbeResult r;
  r.language_text = codec::serialize_chunk(chunk);
  r.at_text = codec::encode_at(r.language_text, map);
  r.language_mean = client.score_completion(prompt, r.language_text).mean;
  r.at_mean = client.score_completion(prompt, r.at_text).mean;
  return r;
}

std::string probe_csv(const std::vector<ProbeResult>& results) {
  std::string out = "index,language_mean,at_mean\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    out += std::to_string(i) + "," + fixed(results[i].language_mean, 6) + "," +
           fixed(results[i].at_mean, 6) + "\n";
  }
  return out;
}

EvalReport build_report(const std::vector<ScoreCard>& cards, const std::vector<std::string>& scenarios) {
  if (cards.size() != scenarios.size()) {
    throw Error(ErrorKind::Precondition, "one scenario name per score card is required");
  }
  EvalReport r;
  r.cards = cards;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    auto it = std::find_if(r.summaries.begin(), r.summaries.end(),
                           [&](const ScenarioSummary& s) { return s.scenario == scenarios[i]; });
    if (it == r.summaries.end()) {
      r.summaries.push_back({scenarios[i], cards[i].rubric_id, 0, 0, 0, 0.0});
      it = std::prev(r.summaries.end());
    }
    it->trials += 1;
    it->points += cards[i].points;
    it->max_points += cards[i].max_points;
    it->mean_fraction += static_cast<double>(cards[i].points) / cards[i].max_points;
  }
  for (auto& s : r.summaries) s.mean_fraction /= static_cast<double>(s.trials);
  return r;
}

ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  ordered_json sums = ordered_json::array();
  for (const auto& s : r.summaries) {
    sums.push_back({{"scenario", s.scenario},
                    {"rubric", s.rubric_id},
                    {"trials", s.trials},
                    {"points", s.points},
                    {"max_points", s.max_points},
                    {"mean_fraction", s.mean_fraction}});
  }
  j["summaries"] = std::move(sums);
  ordered_json cards = ordered_json::array();
  for (const auto& c : r.cards) {
    ordered_json jc;
    jc["episode_id"] = c.episode_id;
    jc["rubric"] = c.rubric_id;
    jc["points"] = c.points;
    jc["max_points"] = c.max_points;
    ordered_json trace = ordered_json::array();
    for (const auto& t : c.trace) trace.push_back({{"milestone", t.milestone}, {"achieved", t.achieved}});
    jc["trace"] = std::move(trace);
    jc["keyword_pass"] = c.keyword_pass ? ordered_json(*c.keyword_pass) : ordered_json(nullptr);
    cards.push_back(std::move(jc));
  }
  j["cards"] = std::move(cards);
  return j;
}

std::string report_table(const EvalReport& r) {
  std::string out = "scenario                 rubric                       trials  points  mean\n";
  for (const auto& s : r.summaries) {
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %-28s %6zu  %3d/%-3d %.3f\n", s.scenario.c_str(),
                  s.rubric_id.c_str(), s.trials, s.points, s.max_points, s.mean_fraction);
    out += line;
  }
  return out;
}

}  // namespace a2l::eval

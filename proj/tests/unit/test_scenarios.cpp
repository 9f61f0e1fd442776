#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "corridor/core/error.hpp"
#include "corridor/scenarios/scenario.hpp"
#include "corridor/scenarios/tables.hpp"
#include "fixtures.hpp"

using namespace corridor;
using namespace corridor::scen;

namespace {

// FNV-1a over every cycle and offset of a table, row by row.
std::uint64_t table_checksum(const std::vector<TableRow>& rows) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](long long v) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>((v >> (8 * b)) & 0xff);
      h *= 1099511628211ull;
    }
  };
  for (const auto& r : rows) {
    mix(parse_clock(r.start));
    mix(parse_clock(r.end));
    mix(r.cycle);
    for (int o : r.offsets) mix(o);
  }
  return h;
}

bool same_schedule(const net::Schedule& a, const net::Schedule& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].start != b[i].start || a[i].end != b[i].end || a[i].cycle != b[i].cycle || a[i].offsets != b[i].offsets)
      return false;
  }
  return true;
}

std::string lower(std::string_view p) {
  std::string s(p);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

TEST_CASE("baseline policy follows the time-of-day blocks") {
  const auto& doc = testing::huntington();
  auto noon = baseline_policy(doc.schedule("table2_noon"));
  CHECK(noon->decide({}, parse_clock("12:30")) == std::vector<int>{0, 0, 55, 55, 55});
  CHECK(*sig::block_for_time(doc.schedule("table2_noon"), parse_clock("12:30")).cycle == 105);
  auto pm = baseline_policy(doc.schedule("table2_pm"));
  CHECK(pm->decide({}, parse_clock("20:45")) == std::vector<int>{40, 40, 5, 0, 5});
  CHECK(*sig::block_for_time(doc.schedule("table2_pm"), parse_clock("20:45")).cycle == 90);
  auto am = baseline_policy(doc.schedule("table2_am"));
  CHECK(am->decide({}, parse_clock("05:10")) == std::vector<int>{75, 66, 14, 19, 48});
  CHECK(*sig::block_for_time(doc.schedule("table2_am"), parse_clock("05:10")).cycle == 110);
  CHECK(am->name() == "baseline");
}

TEST_CASE("replay policy reproduces the published learned offsets") {
  const auto& doc = testing::huntington();
  auto am = replay_policy("deeprl_am", doc.schedule("deeprl_am"));
  CHECK(am->decide({}, parse_clock("08:20")) == std::vector<int>{70, 86, 82, 59, 107});
  auto pm = replay_policy("deeprl_pm", doc.schedule("deeprl_pm"));
  CHECK(pm->decide({}, parse_clock("14:15")) == std::vector<int>{50, 55, 15, 43, 81});
  CHECK_THROWS_AS(am->decide({}, parse_clock("04:59")), ConfigError);
  // Offsets above the active cycle are reduced by the controller.
  CHECK(sig::effective_offset(107, 120) == 107);
  CHECK(sig::effective_offset(107, 90) == 17);
}

TEST_CASE("baseline offsets are constant inside every block") {
  const auto& doc = testing::huntington();
  for (std::string_view p : kPeriods) {
    const auto& s = doc.schedule("table2_" + lower(p));
    auto pol = baseline_policy(s);
    for (const auto& b : s) {
      for (Seconds t = b.start; t < b.end; t += 60) REQUIRE(pol->decide({}, t) == b.offsets);
    }
  }
}

TEST_CASE("bundled schedules match the embedded tables exactly") {
  const auto& doc = testing::huntington();
  const auto table2 = testing::fixture_json("table2_baseline.json");
  const auto synchro = testing::fixture_json("appendix_synchro.json");
  const auto deeprl = testing::fixture_json("appendix_deeprl.json");
  for (std::string_view p : kPeriods) {
    const std::string key(p);
    const std::string l = lower(p);
    CHECK(same_schedule(doc.schedule("table2_" + l), to_schedule(table2_rows(p))));
    CHECK(same_schedule(net::parse_schedule(table2["schedules"][key], 5, "table2"), doc.schedule("table2_" + l)));
    CHECK(same_schedule(net::parse_schedule(synchro["schedules"][key], 5, "synchro"), to_schedule(synchro_rows(p))));
    CHECK(same_schedule(net::parse_schedule(deeprl["schedules"][key], 5, "deeprl"), to_schedule(deeprl_rows(p))));
  }
  // Guards the transcribed values themselves against accidental edits.
  const std::uint64_t expected[3][3] = {
#include "table_checksums.inc"
  };
  for (std::size_t i = 0; i < kPeriods.size(); ++i) {
    CHECK(table_checksum(table2_rows(kPeriods[i])) == expected[i][0]);
    CHECK(table_checksum(synchro_rows(kPeriods[i])) == expected[i][1]);
    CHECK(table_checksum(deeprl_rows(kPeriods[i])) == expected[i][2]);
  }
}

namespace {

// Worst-case percent error when both delays carry half a unit of rounding in
// the second decimal, plus the rounding of the published percentage itself.
double rounding_bound(double baseline, double policy) {
  return 100.0 * 0.005 * (1.0 / baseline + policy / (baseline * baseline)) + 0.005;
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

}  // namespace

TEST_CASE("published sweep rows and percent arithmetic") {
  CHECK(percent_difference(53.46, 46.40) == doctest::Approx(13.2061).epsilon(1e-5));
  CHECK(percent_difference(53.17, 56.93) == doctest::Approx(-7.0717).epsilon(1e-4));
  CHECK(round2(percent_difference(53.46, 46.40)) == doctest::Approx(13.21));
  CHECK(std::abs(round2(percent_difference(53.17, 56.93)) - -7.06) <= 0.01 + 1e-9);
  CHECK(percent_difference(40.0, 40.0) == 0.0);
  CHECK_THROWS_AS(percent_difference(0.0, 1.0), ConfigError);
  const auto& rows = table3_rows();
  CHECK(rows.size() == 15);
  for (const auto& r : rows) {
    CHECK(std::abs(percent_difference(r.baseline, r.deeprl) - r.percent) <= rounding_bound(r.baseline, r.deeprl));
  }
}

TEST_CASE("surge scales targeted routes exactly inside the window") {
  const auto& doc = testing::huntington();
  const auto& prof = doc.profile("NOON");
  const auto& surge = doc.perturbation("noon_surge");
  const auto out = apply_perturbation(prof, surge, doc.network);
  for (std::size_t r = 0; r < doc.network.routes().size(); ++r) {
    for (Seconds t = prof.start; t < prof.end; t += 300) {
      const double base = prof.rate(r, t);
      const bool inside = t >= parse_clock("12:00") && t < parse_clock("13:00");
      REQUIRE(out.rate(r, t) == doctest::Approx(inside ? 1.5 * base : base).epsilon(1e-15));
    }
  }
  net::PerturbationSpec unit = surge;
  unit.magnitude = 1.0;
  const auto same = apply_perturbation(prof, unit, doc.network);
  REQUIRE(same.entries.size() == prof.entries.size());
  for (std::size_t i = 0; i < prof.entries.size(); ++i) {
    CHECK(same.entries[i].rate == prof.entries[i].rate);
    CHECK(same.entries[i].start == prof.entries[i].start);
  }
  net::PerturbationSpec one = surge;
  one.targets = {doc.network.route(0).id};
  const auto partial = apply_perturbation(prof, one, doc.network);
  CHECK(partial.rate(0, parse_clock("12:30")) == doctest::Approx(1.5 * prof.rate(0, parse_clock("12:30"))));
  CHECK(partial.rate(1, parse_clock("12:30")) == prof.rate(1, parse_clock("12:30")));
  one.targets = {"NOPE"};
  CHECK_THROWS_AS(apply_perturbation(prof, one, doc.network), ConfigError);
}

TEST_CASE("lane disruption removes one lane inside the window") {
  const auto& doc = testing::huntington();
  const auto& p = doc.perturbation("lane_disruption");
  const auto blocks = lane_blocks(p, doc.network);
  REQUIRE(blocks.size() == 2);
  const std::size_t eb1 = *doc.network.find_link("EB-1");
  CHECK(blocks[0].link == eb1);
  sim::World w(doc, doc.profile("NOON"), 1, parse_clock("11:59"));
  testing::install_fixed(w, 105, w.clock());
  for (const auto& b : blocks) w.add_lane_block(b);
  const int lanes = doc.network.link(eb1).lanes;
  w.step();
  CHECK(w.effective_lanes(eb1) == lanes);
  w.run_until(parse_clock("12:30"));
  CHECK(w.effective_lanes(eb1) == lanes - 1);
  w.run_until(parse_clock("13:00") + 1);
  CHECK(w.effective_lanes(eb1) == lanes);

  net::PerturbationSpec bad = p;
  bad.targets = {"EB-404"};
  CHECK_THROWS_AS(lane_blocks(bad, doc.network), ConfigError);
}

TEST_CASE("interval sweep") {
  const auto& doc = testing::huntington();
  const ScenarioSpec base = default_spec(doc, "NOON");
  const auto specs = interval_sweep(base, {300, 600, 900, 1800, 2700});
  REQUIRE(specs.size() == 5);
  CHECK(specs[0].interval == 300);
  CHECK(specs[4].interval == 2700);
  for (const auto& s : specs) CHECK_NOTHROW(s.validate(doc));
  CHECK(interval_sweep(base, {900})[0] == base);
  CHECK_THROWS_AS(interval_sweep(base, {420}), ConfigError);
  ScenarioSpec four = training_spec(doc, "AM");
  CHECK(four.duration == 4 * kHour);
  CHECK_THROWS_AS(interval_sweep(four, {420}), ConfigError);
}

TEST_CASE("spec validation") {
  const auto& doc = testing::huntington();
  ScenarioSpec s = default_spec(doc, "AM");
  CHECK_NOTHROW(s.validate(doc));
  ScenarioSpec late = s;
  late.duration += kHour;
  CHECK_THROWS_AS(late.validate(doc), ConfigError);
  ScenarioSpec warm = s;
  warm.warm_up = s.duration;
  CHECK_THROWS_AS(warm.validate(doc), ConfigError);
  ScenarioSpec label = s;
  label.label = "MIDNIGHT";
  CHECK_THROWS_AS(label.validate(doc), ConfigError);
  ScenarioSpec pert = default_spec(doc, "AM");
  pert.perturbations.push_back(doc.perturbation("noon_surge"));
  CHECK_THROWS_AS(pert.validate(doc), ConfigError);
}

TEST_CASE("noon baseline run has a warm-up row and sixteen intervals") {
  const auto& doc = testing::huntington();
  const ScenarioSpec spec = default_spec(doc, "NOON");
  auto pol = baseline_policy(doc.schedule("table2_noon"));
  const RunResult r = run_scenario(doc, spec, *pol, 3);
  REQUIRE(r.intervals.size() == 16);
  CHECK(r.intervals[0].warm_up);
  CHECK(r.intervals[0].end - r.intervals[0].start == 900);
  CHECK_FALSE(r.intervals[1].warm_up);
  CHECK(r.intervals.back().end == spec.end());
  CHECK(r.injected == r.exited + (r.injected - r.exited));
  CHECK(r.mean_delay > 0.0);
  for (const auto& m : r.intervals) {
    CHECK(m.reward <= 0.0);
    CHECK(m.offsets == pol->decide({}, m.start));
  }
}

TEST_CASE("perturbed runs match the unperturbed run up to the window start") {
  const auto& doc = testing::huntington();
  const ScenarioSpec base = default_spec(doc, "NOON");
  auto pol = baseline_policy(doc.schedule("table2_noon"));
  const RunResult plain = run_scenario(doc, base, *pol, 5);
  for (const char* name : {"noon_surge", "lane_disruption"}) {
    ScenarioSpec s = base;
    s.perturbations.push_back(doc.perturbation(name));
    const RunResult p = run_scenario(doc, s, *pol, 5);
    REQUIRE(p.intervals.size() == plain.intervals.size());
    bool differs_after = false;
    for (std::size_t i = 0; i < p.intervals.size(); ++i) {
      const auto& a = plain.intervals[i];
      const auto& b = p.intervals[i];
      if (b.end <= parse_clock("12:00")) {
        CHECK(a.avg_delay == b.avg_delay);
        CHECK(a.reward == b.reward);
        CHECK(a.total_queue == b.total_queue);
        CHECK(a.trips == b.trips);
      } else {
        differs_after = differs_after || a.reward != b.reward;
      }
    }
    CHECK(differs_after);
  }
}

TEST_CASE("constant and network policies drive a run") {
  const auto& doc = testing::huntington();
  ScenarioSpec spec = training_spec(doc, "AM", 2 * kHour);
  ConstantPolicy c({10, 20, 30, 40, 50});
  const RunResult r = run_scenario(doc, spec, c, 1);
  CHECK(r.intervals.size() == 8);
  for (std::size_t i = 1; i < r.intervals.size(); ++i) CHECK(r.intervals[i].offsets == std::vector<int>{10, 20, 30, 40, 50});
  NetworkPolicy n(learn::PolicyNetwork(default_architecture(doc), 1));
  const RunResult a = run_scenario(doc, spec, n, 1);
  const RunResult b = run_scenario(doc, spec, n, 1);
  CHECK(a.mean_delay == b.mean_delay);
  CHECK(a.total_reward == b.total_reward);
}

TEST_CASE("training environment layout and episode length") {
  const auto& doc = testing::huntington();
  TrainingEnv env(doc, TrainingEnvConfig{});
  CHECK(env.observation_size() == 208);
  CHECK(env.num_heads() == 5);
  CHECK(env.head_size() == 120);
  CHECK(env.steps_per_episode() == 45);
  const auto obs = env.reset(11);
  CHECK(obs.size() == 208);
  CHECK(env.episode_periods().size() == 3);
  int steps = 0;
  learn::StepResult r;
  do {
    r = env.step({0, 0, 0, 0, 0});
    ++steps;
    REQUIRE(r.reward <= 0.0);
  } while (!r.done);
  CHECK(steps == 45);

  TrainingEnvConfig seg;
  seg.segment_runs = true;
  seg.periods = {"AM"};
  TrainingEnv env2(doc, seg);
  env2.reset(1);
  int ends = 0;
  for (int i = 0; i < 45; ++i) ends += env2.step({0, 0, 0, 0, 0}).run_end.has_value();
  CHECK(ends == 2);

  TrainingEnvConfig bad;
  bad.interval = 7 * kMinute;
  CHECK_THROWS_AS(TrainingEnv(doc, bad), ConfigError);
}

TEST_CASE("a demand pool folds episode seeds onto a few realizations") {
  const auto& doc = testing::huntington();
  auto rewards = [&](const TrainingEnvConfig& cfg, std::uint64_t seed) {
    TrainingEnv env(doc, cfg);
    env.reset(seed);
    std::vector<double> out;
    for (int i = 0; i < 6; ++i) out.push_back(env.step({10, 20, 30, 40, 50}).reward);
    return out;
  };
  TrainingEnvConfig pooled;
  pooled.runs = 1;
  pooled.demand_pool = 3;
  CHECK(rewards(pooled, 4) == rewards(pooled, 7));
  CHECK(rewards(pooled, 4) != rewards(pooled, 5));
  TrainingEnvConfig fresh = pooled;
  fresh.demand_pool = 0;
  CHECK(rewards(fresh, 4) != rewards(fresh, 7));
}

TEST_CASE("brute force on the green-wave toy") {
  const auto& doc = testing::toy();
  const ScenarioSpec spec = default_spec(doc, doc.demand.front().label);
  CHECK_THROWS_AS(brute_force(doc, spec, 7, {1}, 20000, 1), ConfigError);
  CHECK_THROWS_AS(brute_force(doc, spec, 5, {1}, 100, 1), ConfigError);
  const auto res = brute_force(doc, spec, 20, {1}, 20000, 1);
  CHECK(res.axis.size() == static_cast<std::size_t>(res.cycle / 20));
  CHECK(res.offsets.size() == res.axis.size() * res.axis.size());
  CHECK(res.rewards.size() == res.offsets.size());
  for (double r : res.rewards) CHECK(r <= res.rewards[res.best]);
}

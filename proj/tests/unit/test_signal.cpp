#include <doctest.h>

#include <map>

#include "corridor/core/error.hpp"
#include "corridor/core/rng.hpp"
#include "corridor/signal/signal.hpp"
#include "fixtures.hpp"

using namespace corridor;
using namespace corridor::sig;

namespace {

std::shared_ptr<const PhasePlan> plan_of(std::vector<int> durations) {
  PhasePlan p;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    p.phases.push_back({"P" + std::to_string(i), durations[i], {}});
    p.cycle += durations[i];
  }
  p.validate();
  return std::make_shared<const PhasePlan>(p);
}

int mod(long long a, int m) { return static_cast<int>(((a % m) + m) % m); }

}  // namespace

TEST_CASE("effective offset reduces raw offsets against the cycle") {
  CHECK(effective_offset(115, 120) == 115);
  CHECK(effective_offset(115, 90) == 25);
  CHECK(effective_offset(0, 105) == 0);
}

TEST_CASE("plan_transition examples") {
  CHECK(plan_transition(10, 30, 120) == 20);
  CHECK(plan_transition(10, 100, 120) == -30);
  CHECK(plan_transition(0, 60, 120) == 60);
  CHECK(plan_transition(60, 0, 120) == 60);
  CHECK(plan_transition(30, 10, 120) == -20);
}

TEST_CASE("plan_transition wraps into (-c/2, c/2] for every pair") {
  for (int c : {90, 105, 110, 120}) {
    for (int a = 0; a < c; ++a) {
      for (int b = 0; b < c; ++b) {
        const int r = plan_transition(a, b, c);
        REQUIRE(mod(r - (b - a), c) == 0);
        REQUIRE(2 * r > -c);
        REQUIRE(2 * r <= c);
      }
    }
  }
}

TEST_CASE("apply_adjustment examples") {
  auto plan = plan_of({60, 60});
  SUBCASE("reduction absorbed by the current phase") {
    ControllerState s = aligned_state(plan, 0, 20);  // 40 s left in phase 0
    REQUIRE(s.remaining() == 40);
    s = apply_adjustment(s, -30);
    CHECK(s.phase_index == 0);
    CHECK(s.remaining() == 10);
    CHECK(s.pending_adjust == 0);
  }
  SUBCASE("short phase is skipped and the next absorbs the residual") {
    ControllerState s = aligned_state(plan, 0, 50);  // 10 s left
    s = apply_adjustment(s, -30);
    CHECK(s.phase_index == 1);
    CHECK(s.phase_elapsed == 0);
    CHECK(s.phase_duration == 40);
    CHECK(s.pending_adjust == 0);
  }
  SUBCASE("zero adjustment is the identity") {
    const ControllerState s = aligned_state(plan, 0, 33);
    const ControllerState t = apply_adjustment(s, 0);
    CHECK(t.phase_index == s.phase_index);
    CHECK(t.phase_elapsed == s.phase_elapsed);
    CHECK(t.phase_duration == s.phase_duration);
    CHECK(t.pending_adjust == 0);
  }
  SUBCASE("extension lands on the current phase only") {
    ControllerState s = aligned_state(plan, 0, 10);
    s = apply_adjustment(s, 25);
    CHECK(s.phase_index == 0);
    CHECK(s.phase_duration == 85);
  }
  SUBCASE("reduction cascades across several short phases") {
    auto short_plan = plan_of({10, 5, 5, 100});
    ControllerState s = aligned_state(short_plan, 0, 5);  // 5 s left in phase 0
    s = apply_adjustment(s, -18);
    CHECK(s.phase_index == 3);
    CHECK(s.phase_duration == 97);
  }
}

TEST_CASE("tick rolls phases and is periodic") {
  auto plan = plan_of({30, 20, 10});
  ControllerState s = aligned_state(plan, 0, 29);
  CHECK(tick(s) == 0);
  CHECK(s.phase_index == 1);
  CHECK(s.phase_elapsed == 0);

  ControllerState a = aligned_state(plan, 7, 1000);
  const ControllerState start = a;
  for (int i = 0; i < plan->cycle; ++i) tick(a);
  CHECK(a.phase_index == start.phase_index);
  CHECK(a.phase_elapsed == start.phase_elapsed);
}

TEST_CASE("after the (10,100) transition one cycle of ticks restores alignment") {
  auto plan = plan_of({60, 60});
  const Seconds g0 = 1234;
  ControllerState s = aligned_state(plan, 10, g0);
  s = apply_adjustment(s, plan_transition(10, 100, 120));
  s.offset = 100;
  Seconds g = g0;
  for (int i = 0; i < 120; ++i) {
    tick(s);
    ++g;
  }
  CHECK(is_aligned(s, g));
}

TEST_CASE("alignment restoration from random states and targets") {
  Rng rng(11);
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = 2 + rng.uniform_int(3);
    std::vector<int> d;
    for (int i = 0; i < n; ++i) d.push_back(5 + rng.uniform_int(50));
    auto plan = plan_of(d);
    const int c = plan->cycle;
    const int from = rng.uniform_int(c);
    const int to = rng.uniform_int(c);
    Seconds g = 36000 + rng.uniform_int(100000);
    const int adj = plan_transition(from, to, c);
    ControllerState s = aligned_state(plan, from, g);
    s = apply_adjustment(s, adj);
    s.offset = to;
    bool aligned = is_aligned(s, g);
    for (int k = 0; k < 2 * c && !aligned; ++k) {
      tick(s);
      ++g;
      aligned = is_aligned(s, g);
    }
    REQUIRE(aligned);
    // Once aligned it stays aligned, and phases keep their durations and order.
    std::vector<int> seen(plan->phases.size(), 0);
    std::size_t prev = s.phase_index;
    for (int k = 0; k < c; ++k) {
      const std::size_t p = tick(s);
      ++g;
      ++seen[p];
      if (p != prev) REQUIRE(p == (prev + 1) % plan->phases.size());
      prev = p;
      REQUIRE(is_aligned(s, g));
    }
    for (std::size_t i = 0; i < seen.size(); ++i) REQUIRE(seen[i] == plan->phases[i].duration);
  }
}

TEST_CASE("controller offsets never change splits while no adjustment is pending") {
  auto plan = plan_of({66, 54});
  SignalController ctl(plan, 0, 0);
  std::map<std::size_t, int> green;
  for (int k = 0; k < 120 * 5; ++k) ++green[ctl.tick()];
  CHECK(green[0] == 66 * 5);
  CHECK(green[1] == 54 * 5);
}

TEST_CASE("make_plan validation and rounding") {
  const auto& doc = testing::huntington();
  const auto& spec = doc.signal_for(doc.network.targets().front());
  for (int c : {90, 105, 110, 120}) {
    const PhasePlan p = make_plan(spec, c);
    int sum = 0;
    for (const auto& ph : p.phases) sum += ph.duration;
    CHECK(sum == c);
    CHECK(p.phases.size() >= 2);
  }
  PhasePlan bad;
  bad.cycle = 10;
  bad.phases = {{"A", 10, {}}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.phases = {{"A", 10, {}}, {"B", 0, {}}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.phases = {{"A", 5, {}}, {"B", 4, {}}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("schedule lookup follows the bundled baseline blocks") {
  const auto& am = testing::huntington().schedule("table2_am");
  const auto& seven = block_for_time(am, parse_clock("07:00"));
  CHECK(*seven.cycle == 120);
  CHECK(seven.offsets == std::vector<int>{60, 60, 65, 75, 5});
  const auto& early = block_for_time(am, parse_clock("05:30"));
  CHECK(*early.cycle == 110);
  CHECK(early.offsets == std::vector<int>{75, 66, 14, 19, 48});
  CHECK_THROWS_AS(block_for_time(am, parse_clock("04:00")), ConfigError);

  std::vector<PhasePlan> plans;
  const auto& spec = testing::huntington().signal_for(testing::huntington().network.targets().front());
  for (const auto& b : am) plans.push_back(make_plan(spec, *b.cycle, b.start, b.end));
  CHECK(plan_for_time(plans, parse_clock("07:00")).cycle == 120);
  CHECK(plan_for_time(plans, parse_clock("05:30")).cycle == 110);
  CHECK_THROWS_AS(plan_for_time(plans, parse_clock("23:00")), ConfigError);
}

TEST_CASE("plan changeover waits for the cycle boundary and re-expresses the offset") {
  auto p120 = plan_of({60, 60});
  auto p90 = plan_of({45, 45});
  SignalController ctl(p120, 100, 0);
  // Second 0 at offset 100 sits 20 s into phase 0's predecessor cycle.
  for (int i = 0; i < 30; ++i) ctl.tick();
  ctl.change_plan(p90, 115);
  CHECK(ctl.changeover_pending());
  CHECK(ctl.plan().cycle == 120);
  int guard = 0;
  while (ctl.changeover_pending() && guard++ < 240) ctl.tick();
  REQUIRE_FALSE(ctl.changeover_pending());
  CHECK(ctl.plan().cycle == 90);
  CHECK(ctl.offset() == effective_offset(115, 90));
  Seconds g = ctl.clock();
  ControllerState s = ctl.state();
  bool aligned = is_aligned(s, g);
  for (int k = 0; k < 180 && !aligned; ++k) {
    ctl.tick();
    aligned = is_aligned(ctl.state(), ctl.clock());
  }
  CHECK(aligned);
}

TEST_CASE("out-of-range offset commands are rejected") {
  SignalController ctl(plan_of({60, 60}), 0, 0);
  CHECK_THROWS_AS(ctl.command_offset(120), ConfigError);
  CHECK_THROWS_AS(ctl.command_offset(-1), ConfigError);
}

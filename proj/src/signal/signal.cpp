#include "corridor/signal/signal.hpp"

#include <cmath>
#include <numeric>

#include "corridor/core/error.hpp"

namespace corridor::sig {

namespace {

int mod(std::int64_t a, int m) {
  const auto r = a % m;
  return static_cast<int>(r < 0 ? r + m : r);
}

}  // namespace

void PhasePlan::validate() const {
  if (phases.size() < 2) throw ConfigError("signal plan", "at least 2 phases required");
  int total = 0;
  for (const auto& p : phases) {
    if (p.duration < 1) throw ConfigError("signal plan", "phase '" + p.name + "' shorter than 1 s");
    total += p.duration;
  }
  if (total != cycle) {
    throw ConfigError("signal plan", "phase durations sum to " + std::to_string(total) + ", cycle is " +
                                         std::to_string(cycle));
  }
}

std::size_t PhasePlan::locate(int position, int* elapsed) const {
  int start = 0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (position < start + phases[i].duration) {
      *elapsed = position - start;
      return i;
    }
    start += phases[i].duration;
  }
  throw RuntimeAbort("cycle position " + std::to_string(position) + " outside plan");
}

PhasePlan make_plan(const net::SignalSpec& spec, int cycle, Seconds valid_from, Seconds valid_to) {
  PhasePlan plan;
  plan.cycle = cycle;
  plan.valid_from = valid_from;
  plan.valid_to = valid_to;
  int used = 0;
  for (std::size_t i = 0; i < spec.phases.size(); ++i) {
    Phase p;
    p.name = spec.phases[i].name;
    p.movements = spec.phases[i].movements;
    p.duration = i + 1 == spec.phases.size() ? cycle - used
                                             : static_cast<int>(std::lround(spec.phases[i].split * cycle));
    used += p.duration;
    plan.phases.push_back(std::move(p));
  }
  plan.validate();
  return plan;
}

int effective_offset(int raw, int cycle) { return mod(raw, cycle); }

int plan_transition(int current_offset, int new_offset, int cycle) {
  int d = mod(new_offset - current_offset, cycle);
  if (2 * d > cycle) d -= cycle;
  return d;
}

ControllerState aligned_state(std::shared_ptr<const PhasePlan> plan, int offset, Seconds g) {
  ControllerState s;
  s.offset = offset;
  int elapsed = 0;
  s.phase_index = plan->locate(mod(g - offset, plan->cycle), &elapsed);
  s.phase_elapsed = elapsed;
  s.phase_duration = plan->phases[s.phase_index].duration;
  s.plan = std::move(plan);
  return s;
}

bool is_aligned(const ControllerState& state, Seconds g) {
  if (state.pending_adjust != 0) return false;
  if (state.phase_duration != state.plan->phases[state.phase_index].duration) return false;
  const ControllerState ref = aligned_state(state.plan, state.offset, g);
  return ref.phase_index == state.phase_index && ref.phase_elapsed == state.phase_elapsed;
}

ControllerState apply_adjustment(ControllerState state, int adjustment) {
  if (adjustment >= 0) {
    state.phase_duration += adjustment;
    return state;
  }
  state.pending_adjust = -adjustment;
  const auto& phases = state.plan->phases;
  while (state.pending_adjust > 0) {
    const int remaining = state.remaining();
    if (remaining > state.pending_adjust) {
      state.phase_duration -= state.pending_adjust;
      state.pending_adjust = 0;
      break;
    }
    state.pending_adjust -= remaining;
    state.phase_index = (state.phase_index + 1) % phases.size();
    state.phase_elapsed = 0;
    state.phase_duration = phases[state.phase_index].duration;
  }
  return state;
}

std::size_t tick(ControllerState& state) {
  const std::size_t active = state.phase_index;
  if (++state.phase_elapsed >= state.phase_duration) {
    state.phase_index = (state.phase_index + 1) % state.plan->phases.size();
    state.phase_elapsed = 0;
    state.phase_duration = state.plan->phases[state.phase_index].duration;
  }
  return active;
}

const net::ScheduleBlock& block_for_time(const net::Schedule& schedule, Seconds t) {
  for (const auto& b : schedule) {
    if (b.start <= t && t < b.end) return b;
  }
  throw ConfigError("schedule", "no block covers " + format_clock(t));
}

const PhasePlan& plan_for_time(const std::vector<PhasePlan>& plans, Seconds t) {
  for (const auto& p : plans) {
    if (p.valid_from <= t && t < p.valid_to) return p;
  }
  throw ConfigError("schedule", "no plan covers " + format_clock(t));
}

SignalController::SignalController(std::shared_ptr<const PhasePlan> plan, int raw_offset, Seconds start)
    : clock_(start) {
  const int cycle = plan->cycle;
  state_ = aligned_state(std::move(plan), effective_offset(raw_offset, cycle), start);
}

void SignalController::command_offset(int raw) {
  if (raw < 0 || raw >= kMaxOffset) throw ConfigError("offset", "offset " + std::to_string(raw) + " outside [0, 120)");
  if (pending_plan_) {
    pending_raw_ = raw;
    return;
  }
  const int cycle = state_.plan->cycle;
  const int target = effective_offset(raw, cycle);
  state_ = apply_adjustment(state_, plan_transition(state_.offset, target, cycle));
  state_.offset = target;
}

void SignalController::change_plan(std::shared_ptr<const PhasePlan> plan, int raw_offset) {
  pending_plan_ = std::move(plan);
  pending_raw_ = raw_offset;
}

std::size_t SignalController::tick() {
  const std::size_t active = sig::tick(state_);
  ++clock_;
  if (pending_plan_ && state_.phase_index == 0 && state_.phase_elapsed == 0) {
    const int cycle = pending_plan_->cycle;
    ControllerState next;
    next.plan = std::move(pending_plan_);
    next.offset = mod(clock_, cycle);
    next.phase_duration = next.plan->phases[0].duration;
    pending_plan_.reset();
    state_ = std::move(next);
    command_offset(pending_raw_);
  }
  return active;
}

}  // namespace corridor::sig

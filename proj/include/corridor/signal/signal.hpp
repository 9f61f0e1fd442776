#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "corridor/core/time.hpp"
#include "corridor/network/scenario_document.hpp"

namespace corridor::sig {

// Largest offset the agent can emit; also the action-head width.
inline constexpr int kMaxOffset = 120;

struct Phase {
  std::string name;
  int duration = 0;
  std::vector<net::Movement> movements;
};

struct PhasePlan {
  int cycle = 0;
  std::vector<Phase> phases;
  Seconds valid_from = 0;
  Seconds valid_to = 0;

  // Throws ConfigError unless durations sum to the cycle, each is >= 1 s and
  // there are at least two phases.
  void validate() const;
  // Cycle position -> phase index; elapsed is written to *elapsed.
  std::size_t locate(int position, int* elapsed) const;
};

// Durations from split fractions; rounding residue goes to the last phase.
PhasePlan make_plan(const net::SignalSpec& spec, int cycle, Seconds valid_from = 0, Seconds valid_to = 0);

int effective_offset(int raw, int cycle);

// Signed shift in (-cycle/2, cycle/2] that carries current onto next (mod cycle).
int plan_transition(int current_offset, int new_offset, int cycle);

struct ControllerState {
  std::shared_ptr<const PhasePlan> plan;
  int offset = 0;
  std::size_t phase_index = 0;
  int phase_elapsed = 0;
  int phase_duration = 0;  // current phase, including any adjustment
  int pending_adjust = 0;  // reduction still to be absorbed by later phases

  int remaining() const { return phase_duration - phase_elapsed; }
};

// State for second g of a controller running `plan` at `offset`.
ControllerState aligned_state(std::shared_ptr<const PhasePlan> plan, int offset, Seconds g);

// True when the timing at second g matches aligned_state for the state's offset
// and no adjustment is in flight.
bool is_aligned(const ControllerState& state, Seconds g);

// Positive: current phase extended. Negative: current phase shortened; phases
// that cannot absorb the reduction are skipped and the residual moves on.
ControllerState apply_adjustment(ControllerState state, int adjustment);

// Advances one second. Returns the phase index that held the right of way.
std::size_t tick(ControllerState& state);

// First block (document order) whose [start, end) contains t.
const net::ScheduleBlock& block_for_time(const net::Schedule& schedule, Seconds t);

// First plan whose [valid_from, valid_to) contains t.
const PhasePlan& plan_for_time(const std::vector<PhasePlan>& plans, Seconds t);

// Controller with an offset command input and plan changeover at cycle
// boundaries. The owner ticks it once per simulated second.
class SignalController {
 public:
  SignalController() = default;
  SignalController(std::shared_ptr<const PhasePlan> plan, int raw_offset, Seconds start);

  // raw in [0, kMaxOffset); reduced against the active cycle.
  void command_offset(int raw);
  // Effective from the next cycle boundary, at raw_offset.
  void change_plan(std::shared_ptr<const PhasePlan> plan, int raw_offset);

  // Right-of-way phase for the current second, then advance.
  std::size_t tick();

  Seconds clock() const { return clock_; }
  const ControllerState& state() const { return state_; }
  const PhasePlan& plan() const { return *state_.plan; }
  bool changeover_pending() const { return pending_plan_ != nullptr; }
  // Offset the controller is at or converging to, against its active cycle.
  int offset() const { return state_.offset; }
  std::size_t current_phase() const { return state_.phase_index; }

 private:
  ControllerState state_;
  Seconds clock_ = 0;
  std::shared_ptr<const PhasePlan> pending_plan_;
  int pending_raw_ = 0;
};

}  // namespace corridor::sig

#include "corridor/scenarios/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "corridor/core/error.hpp"
#include "corridor/core/parallel.hpp"

namespace corridor::scen {

namespace {

constexpr std::uint64_t kPeriodSalt = 0x706572ULL;
constexpr std::uint64_t kPoolSalt = 0x706f6f6cULL;

bool same(const net::PerturbationSpec& a, const net::PerturbationSpec& b) {
  return a.name == b.name && a.kind == b.kind && a.start == b.start && a.end == b.end &&
         a.magnitude == b.magnitude && a.targets == b.targets;
}

std::string cycle_schedule_name(const net::ScenarioDocument& doc, const ScenarioSpec& spec) {
  if (!spec.cycle_schedule.empty()) return spec.cycle_schedule;
  const auto& name = doc.profile(spec.label).baseline_schedule;
  if (name.empty()) throw ConfigError("scenario", "profile '" + spec.label + "' names no baseline schedule");
  return name;
}

}  // namespace

void ScenarioSpec::validate(const net::ScenarioDocument& doc) const {
  const auto& profile = doc.profile(label);
  if (duration <= 0) throw ConfigError("scenario.duration", "must be > 0");
  if (start < profile.start || end() > profile.end) {
    throw ConfigError("scenario", "window " + format_clock(start) + "-" + format_clock(end()) +
                                      " lies outside profile '" + label + "'");
  }
  if (warm_up < 0) throw ConfigError("scenario.warm_up", "must be >= 0");
  if (warm_up >= duration) throw ConfigError("scenario.warm_up", "warm-up consumes the whole scenario");
  if (interval <= 0) throw ConfigError("scenario.interval", "must be > 0");
  if (kEpisodeSpan % interval != 0) {
    throw ConfigError("scenario.interval", "interval of " + std::to_string(interval) +
                                               " s does not divide the 12 h decision span");
  }
  if (!(world.car_length > 0.0)) throw ConfigError("scenario.car_length", "must be > 0");
  const auto& cycles = doc.schedule(cycle_schedule_name(doc, *this));
  for (Seconds t = start; t < end();) {
    const auto& b = sig::block_for_time(cycles, t);
    if (!b.cycle) throw ConfigError("schedule", "cycle schedule block at " + format_clock(b.start) + " has no cycle");
    if (b.offsets.size() != doc.network.targets().size()) {
      throw ConfigError("schedule", "cycle schedule block at " + format_clock(b.start) + " has the wrong offset count");
    }
    t = b.end;
  }
  for (const auto& p : perturbations) {
    if (p.start < start || p.end > end()) {
      throw ConfigError("perturbation '" + p.name + "'", "window outside the scenario");
    }
  }
}

bool ScenarioSpec::operator==(const ScenarioSpec& o) const {
  if (perturbations.size() != o.perturbations.size()) return false;
  for (std::size_t i = 0; i < perturbations.size(); ++i) {
    if (!same(perturbations[i], o.perturbations[i])) return false;
  }
  return label == o.label && cycle_schedule == o.cycle_schedule && start == o.start && duration == o.duration &&
         warm_up == o.warm_up && interval == o.interval && sampling == o.sampling &&
         world.car_length == o.world.car_length && world.jam_spacing == o.world.jam_spacing &&
         world.detector_zone == o.world.detector_zone;
}

ScenarioSpec default_spec(const net::ScenarioDocument& doc, const std::string& label) {
  const auto& p = doc.profile(label);
  ScenarioSpec s;
  s.label = label;
  s.start = p.start;
  s.duration = p.end - p.start;
  return s;
}

ScenarioSpec training_spec(const net::ScenarioDocument& doc, const std::string& label, Seconds length,
                           Seconds interval) {
  ScenarioSpec s = default_spec(doc, label);
  if (length > s.duration) {
    throw ConfigError("scenario", "profile '" + label + "' is shorter than the " + std::to_string(length) + " s run");
  }
  s.duration = length;
  s.interval = interval;
  return s;
}

std::vector<ScenarioSpec> interval_sweep(const ScenarioSpec& base, const std::vector<Seconds>& intervals) {
  std::vector<ScenarioSpec> out;
  for (Seconds iv : intervals) {
    if (iv <= 0 || kEpisodeSpan % iv != 0) {
      throw ConfigError("interval", "interval of " + std::to_string(iv) + " s does not divide the 12 h decision span");
    }
    ScenarioSpec s = base;
    s.interval = iv;
    out.push_back(std::move(s));
  }
  return out;
}

net::DemandProfile apply_perturbation(const net::DemandProfile& profile, const net::PerturbationSpec& p,
                                      const net::Network& network) {
  if (p.kind != net::PerturbationKind::demand_surge) return profile;
  if (!(p.magnitude > 0.0)) throw ConfigError("perturbation '" + p.name + "'", "surge factor must be > 0");
  if (p.end <= p.start) throw ConfigError("perturbation '" + p.name + "'", "empty window");
  std::vector<char> hit(network.routes().size(), 0);
  for (const auto& id : p.targets) {
    if (id == "*") {
      std::fill(hit.begin(), hit.end(), 1);
      continue;
    }
    const auto r = network.find_route(id);
    if (!r) throw ConfigError("perturbation '" + p.name + "'.targets", "unknown route '" + id + "'");
    hit[*r] = 1;
  }
  if (p.magnitude == 1.0) return profile;
  net::DemandProfile out = profile;
  out.entries.clear();
  for (const auto& e : profile.entries) {
    const Seconds lo = std::max(e.start, p.start);
    const Seconds hi = std::min(e.end, p.end);
    if (!hit[e.route] || lo >= hi) {
      out.entries.push_back(e);
      continue;
    }
    if (e.start < lo) out.entries.push_back({e.route, e.start, lo, e.rate});
    out.entries.push_back({e.route, lo, hi, e.rate * p.magnitude});
    if (hi < e.end) out.entries.push_back({e.route, hi, e.end, e.rate});
  }
  return out;
}

std::vector<sim::LaneBlock> lane_blocks(const net::PerturbationSpec& p, const net::Network& network) {
  std::vector<sim::LaneBlock> out;
  if (p.kind != net::PerturbationKind::lane_disruption) return out;
  const int lanes = static_cast<int>(std::lround(p.magnitude));
  if (lanes < 1) throw ConfigError("perturbation '" + p.name + "'", "blocked lanes must be >= 1");
  for (const auto& id : p.targets) {
    const auto l = network.find_link(id);
    if (!l) throw ConfigError("perturbation '" + p.name + "'.targets", "unknown link '" + id + "'");
    if (lanes >= network.link(*l).lanes) {
      throw ConfigError("perturbation '" + p.name + "'", "cannot block every lane of '" + id + "'");
    }
    out.push_back({*l, p.start, p.end, lanes});
  }
  return out;
}

SchedulePolicy::SchedulePolicy(std::string name, net::Schedule schedule)
    : name_(std::move(name)), schedule_(std::move(schedule)) {
  if (schedule_.empty()) throw ConfigError("schedule", "empty schedule");
}

std::vector<int> SchedulePolicy::decide(const std::vector<double>&, Seconds t) { return *scheduled(t); }

std::optional<std::vector<int>> SchedulePolicy::scheduled(Seconds t) const {
  return sig::block_for_time(schedule_, t).offsets;
}

std::vector<Seconds> SchedulePolicy::change_times() const {
  std::vector<Seconds> out;
  for (const auto& b : schedule_) out.push_back(b.start);
  return out;
}

std::unique_ptr<SchedulePolicy> baseline_policy(const net::Schedule& schedule) {
  return std::make_unique<SchedulePolicy>("baseline", schedule);
}

std::unique_ptr<SchedulePolicy> replay_policy(const std::string& name, const net::Schedule& schedule) {
  return std::make_unique<SchedulePolicy>("replay:" + name, schedule);
}

std::vector<int> NetworkPolicy::decide(const std::vector<double>& observation, Seconds) {
  return learn::greedy_action(net_.forward(observation));
}

ScenarioRun::ScenarioRun(const net::ScenarioDocument& doc, ScenarioSpec spec, std::uint64_t seed)
    : doc_(&doc), spec_(std::move(spec)), seed_(seed) {
  spec_.validate(doc);
}

std::shared_ptr<const sig::PhasePlan> ScenarioRun::plan(std::size_t node, int cycle) {
  auto& slot = plans_[{node, cycle}];
  if (!slot) slot = std::make_shared<const sig::PhasePlan>(sig::make_plan(doc_->signal_for(node), cycle));
  return slot;
}

std::vector<double> ScenarioRun::start(const OffsetPolicy* schedule_source) {
  const net::Network& net = doc_->network;
  source_ = schedule_source;
  profile_ = doc_->profile(spec_.label);
  for (const auto& p : spec_.perturbations) profile_ = apply_perturbation(profile_, p, net);
  cycles_ = &doc_->schedule(cycle_schedule_name(*doc_, spec_));
  world_ = std::make_unique<sim::World>(*doc_, profile_, seed_, spec_.start, spec_.world);
  for (const auto& p : spec_.perturbations) {
    for (const auto& b : lane_blocks(p, net)) world_->add_lane_block(b);
  }

  const auto& block = sig::block_for_time(*cycles_, spec_.start);
  cycle_ = *block.cycle;
  raw_ = block.offsets;
  if (source_) {
    if (auto o = source_->scheduled(spec_.start)) raw_ = *o;
  }
  const auto& targets = net.targets();
  if (raw_.size() != targets.size()) throw ConfigError("policy", "offset count does not match target count");
  for (std::size_t n = 0; n < net.nodes().size(); ++n) {
    if (net.node(n).kind != net::NodeKind::signalized) continue;
    const auto it = std::find(targets.begin(), targets.end(), n);
    const int raw = it != targets.end() ? raw_[static_cast<std::size_t>(it - targets.begin())]
                                        : doc_->signal_for(n).offset;
    world_->install_controller(n, sig::SignalController(plan(n, cycle_), raw, spec_.start));
  }

  std::set<Seconds> events;
  for (const auto& b : *cycles_) events.insert(b.start);
  if (source_) {
    for (Seconds t : source_->change_times()) events.insert(t);
  }
  events_.clear();
  for (Seconds t : events) {
    if (t > spec_.start && t < spec_.end()) events_.push_back(t);
  }
  next_event_ = 0;
  metrics_.clear();

  world_->begin_interval();
  if (spec_.warm_up == 0) return std::vector<double>(world_->observation_size(), 0.0);
  IntervalMetric m;
  m.offsets = raw_;
  run_to(spec_.start + spec_.warm_up);
  IntervalMetric closed = close_interval(true);
  closed.offsets = m.offsets;
  metrics_.push_back(closed);
  std::vector<double> obs = world_->observe();
  world_->begin_interval();
  return obs;
}

bool ScenarioRun::done() const { return !world_ || world_->clock() >= spec_.end(); }

std::size_t ScenarioRun::decisions() const {
  const Seconds span = spec_.duration - spec_.warm_up;
  return static_cast<std::size_t>((span + spec_.interval - 1) / spec_.interval);
}

void ScenarioRun::run_to(Seconds t) {
  while (next_event_ < events_.size() && events_[next_event_] <= t) {
    world_->run_until(events_[next_event_]);
    apply_event(events_[next_event_]);
    ++next_event_;
  }
  world_->run_until(t);
}

void ScenarioRun::apply_event(Seconds t) {
  const net::Network& net = doc_->network;
  const auto& targets = net.targets();
  const int cycle = *sig::block_for_time(*cycles_, t).cycle;
  std::optional<std::vector<int>> next;
  if (source_) next = source_->scheduled(t);
  if (next && next->size() != targets.size()) throw ConfigError("policy", "offset count does not match target count");
  if (cycle != cycle_) {
    cycle_ = cycle;
    if (next) raw_ = *next;
    for (std::size_t n = 0; n < net.nodes().size(); ++n) {
      if (net.node(n).kind != net::NodeKind::signalized) continue;
      const auto it = std::find(targets.begin(), targets.end(), n);
      const int raw = it != targets.end() ? raw_[static_cast<std::size_t>(it - targets.begin())]
                                          : doc_->signal_for(n).offset;
      world_->controller(n).change_plan(plan(n, cycle), raw);
    }
  } else if (next && *next != raw_) {
    raw_ = *next;
    for (std::size_t i = 0; i < targets.size(); ++i) world_->controller(targets[i]).command_offset(raw_[i]);
  }
}

IntervalMetric ScenarioRun::close_interval(bool warm_up) {
  IntervalMetric m;
  m.start = world_->interval_start();
  m.end = world_->clock();
  m.warm_up = warm_up;
  m.trips = world_->interval_trips();
  m.delay_sum = world_->interval_delay_sum();
  m.distance_km = world_->interval_distance_km();
  m.avg_delay = m.trips > 0 ? m.delay_sum / m.distance_km : std::numeric_limits<double>::quiet_NaN();
  m.reward = sim::reward(*world_, spec_.sampling);
  m.total_queue = world_->mean_total_queue();
  return m;
}

ScenarioRun::Outcome ScenarioRun::advance(const std::vector<int>& raw_offsets) {
  if (done()) throw RuntimeAbort("scenario already finished");
  const auto& targets = doc_->network.targets();
  if (!raw_offsets.empty()) {
    if (raw_offsets.size() != targets.size()) throw ConfigError("policy", "offset count does not match target count");
    for (std::size_t i = 0; i < targets.size(); ++i) world_->controller(targets[i]).command_offset(raw_offsets[i]);
    raw_ = raw_offsets;
  }
  const std::vector<int> at_start = raw_;
  run_to(std::min(world_->clock() + spec_.interval, spec_.end()));
  Outcome out;
  out.metric = close_interval(false);
  out.metric.offsets = at_start;
  out.reward = out.metric.reward;
  out.observation = world_->observe();
  metrics_.push_back(out.metric);
  world_->begin_interval();
  return out;
}

RunResult run_scenario(const net::ScenarioDocument& doc, const ScenarioSpec& spec, OffsetPolicy& policy,
                       std::uint64_t seed) {
  ScenarioRun run(doc, spec, seed);
  std::vector<double> obs = run.start(&policy);
  while (!run.done()) obs = run.advance(policy.decide(obs, run.clock())).observation;
  RunResult r;
  r.seed = seed;
  r.policy = policy.name();
  r.intervals = run.metrics();
  double delay = 0.0, km = 0.0;
  std::size_t decisions = 0;
  for (const auto& m : r.intervals) {
    if (m.warm_up) continue;
    delay += m.delay_sum;
    km += m.distance_km;
    r.total_reward += m.reward;
    ++decisions;
  }
  r.mean_delay = km > 0 ? delay / km : std::numeric_limits<double>::quiet_NaN();
  r.mean_reward = decisions > 0 ? r.total_reward / static_cast<double>(decisions) : 0.0;
  r.injected = run.world().injected();
  r.exited = run.world().exited();
  return r;
}

TrainingEnv::TrainingEnv(const net::ScenarioDocument& doc, TrainingEnvConfig cfg) : doc_(&doc), cfg_(std::move(cfg)) {
  if (cfg_.periods.empty()) throw ConfigError("training", "no periods to draw from");
  if (cfg_.runs < 1) throw ConfigError("training", "runs must be >= 1");
  for (const auto& p : cfg_.periods) {
    ScenarioSpec s = training_spec(doc, p, cfg_.run_length, cfg_.interval);
    s.warm_up = cfg_.warm_up;
    s.validate(doc);
  }
  observation_size_ = static_cast<int>(doc.network.observation_nodes().size() * net::kApproachCount * 4);
  heads_ = static_cast<int>(doc.network.targets().size());
}

int TrainingEnv::steps_per_episode() const {
  const Seconds span = cfg_.run_length - cfg_.warm_up;
  return cfg_.runs * static_cast<int>((span + cfg_.interval - 1) / cfg_.interval);
}

std::vector<double> TrainingEnv::reset(std::uint64_t seed) {
  seed_ = cfg_.demand_pool ? mix_seed(kPoolSalt, seed % cfg_.demand_pool) : seed;
  Rng rng(mix_seed(seed_, kPeriodSalt));
  chosen_.clear();
  for (int i = 0; i < cfg_.runs; ++i) {
    chosen_.push_back(cfg_.periods[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(cfg_.periods.size())))]);
  }
  run_index_ = 0;
  return begin_run();
}

std::vector<double> TrainingEnv::begin_run() {
  ScenarioSpec s = training_spec(*doc_, chosen_[static_cast<std::size_t>(run_index_)], cfg_.run_length, cfg_.interval);
  s.warm_up = cfg_.warm_up;
  s.sampling = cfg_.sampling;
  run_ = std::make_unique<ScenarioRun>(*doc_, s, mix_seed(seed_, static_cast<std::uint64_t>(run_index_) + 1));
  return run_->start(nullptr);
}

learn::StepResult TrainingEnv::step(const std::vector<int>& action) {
  if (!run_) throw RuntimeAbort("step before reset");
  ScenarioRun::Outcome out = run_->advance(action);
  learn::StepResult r;
  r.reward = out.reward;
  if (!run_->done()) {
    r.observation = std::move(out.observation);
    return r;
  }
  if (++run_index_ < cfg_.runs) {
    if (cfg_.segment_runs) r.run_end = std::move(out.observation);
    r.observation = begin_run();
    return r;
  }
  r.observation = std::move(out.observation);
  r.done = true;
  r.truncated = true;
  return r;
}

learn::Architecture default_architecture(const net::ScenarioDocument& doc) {
  learn::Architecture a;
  a.input = static_cast<int>(doc.network.observation_nodes().size() * net::kApproachCount * 4);
  a.heads = static_cast<int>(doc.network.targets().size());
  a.head_size = sig::kMaxOffset;
  return a;
}

BruteForceResult brute_force(const net::ScenarioDocument& doc, const ScenarioSpec& spec, int step,
                             const std::vector<std::uint64_t>& seeds, std::size_t max_points, std::size_t workers) {
  spec.validate(doc);
  if (seeds.empty()) throw ConfigError("seeds", "no seeds given");
  if (step < 1) throw ConfigError("step", "must be >= 1");
  const auto& cycles = doc.schedule(cycle_schedule_name(doc, spec));
  BruteForceResult r;
  r.step = step;
  for (Seconds t = spec.start; t < spec.end();) {
    const auto& b = sig::block_for_time(cycles, t);
    if (*b.cycle % step != 0) {
      throw ConfigError("step", "step " + std::to_string(step) + " does not divide cycle " + std::to_string(*b.cycle));
    }
    r.cycle = std::max(r.cycle, *b.cycle);
    t = b.end;
  }
  for (int v = 0; v < r.cycle; v += step) r.axis.push_back(v);
  const std::size_t dims = doc.network.targets().size();
  double points = std::pow(static_cast<double>(r.axis.size()), static_cast<double>(dims));
  if (points > static_cast<double>(max_points)) {
    throw ConfigError("brute-force", "search space of " + std::to_string(static_cast<long long>(points)) +
                                         " points exceeds the cap of " + std::to_string(max_points));
  }
  std::vector<std::size_t> digit(dims, 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(points); ++i) {
    std::vector<int> o(dims);
    for (std::size_t d = 0; d < dims; ++d) o[d] = r.axis[digit[d]];
    r.offsets.push_back(std::move(o));
    for (std::size_t d = dims; d-- > 0;) {
      if (++digit[d] < r.axis.size()) break;
      digit[d] = 0;
    }
  }
  r.rewards.assign(r.offsets.size(), 0.0);
  parallel_for(r.offsets.size(), worker_count(workers), [&](std::size_t i) {
    ConstantPolicy policy(r.offsets[i]);
    double total = 0.0;
    for (auto seed : seeds) total += run_scenario(doc, spec, policy, seed).mean_reward;
    r.rewards[i] = total / static_cast<double>(seeds.size());
  });
  r.best = static_cast<std::size_t>(std::max_element(r.rewards.begin(), r.rewards.end()) - r.rewards.begin());
  return r;
}

double percent_difference(double baseline, double policy) {
  if (baseline == 0.0) throw ConfigError("sweep", "baseline delay is zero");
  return (baseline - policy) / baseline * 100.0;
}

}  // namespace corridor::scen

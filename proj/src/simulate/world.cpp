#include "corridor/simulate/world.hpp"

#include <algorithm>
#include <cmath>

#include "corridor/core/error.hpp"

namespace corridor::sim {

namespace {

Seconds whole_seconds(double t) { return static_cast<Seconds>(std::ceil(t - 1e-9)); }

}  // namespace

World::World(const net::ScenarioDocument& doc, const net::DemandProfile& profile, std::uint64_t seed,
             Seconds start, WorldConfig config)
    : doc_(&doc),
      config_(config),
      arrivals_(doc.network, profile),
      rng_(seed),
      clock_(start),
      interval_start_(start) {
  const net::Network& net = doc.network;
  const std::size_t n_links = net.links().size();
  links_.resize(n_links);
  travel_.resize(n_links);
  turns_.resize(n_links);
  link_detectors_.resize(n_links);
  queue_sum_.assign(n_links, 0.0);
  controllers_.resize(net.nodes().size());
  for (std::size_t i = 0; i < n_links; ++i) {
    const auto& l = net.link(i);
    links_[i].lane_queue.assign(l.lanes, 0);
    travel_[i] = static_cast<double>(whole_seconds(l.free_flow_time()));
  }

  for (const auto& spec : doc.signals) {
    if (spec.phases.size() > 32) throw ConfigError("signals", "more than 32 phases");
    for (std::size_t k = 0; k < spec.phases.size(); ++k) {
      for (const auto& [from, to] : spec.phases[k].movements) {
        auto& turns = turns_[from];
        auto it = std::find_if(turns.begin(), turns.end(), [&](const Turn& t) { return t.next == to; });
        if (it == turns.end()) it = turns.insert(turns.end(), Turn{to, 0});
        it->phases |= 1u << k;
      }
    }
  }
  for (std::size_t r = 0; r < net.routes().size(); ++r) {
    const auto& links = net.route(r).links;
    for (std::size_t k = 0; k + 1 < links.size(); ++k) {
      const auto& turns = turns_[links[k]];
      const bool served = std::any_of(turns.begin(), turns.end(),
                                      [&](const Turn& t) { return t.next == links[k + 1] && t.phases; });
      if (!served) {
        throw ConfigError("network.routes[" + std::to_string(r) + "]",
                          "movement " + net.link(links[k]).id + " -> " + net.link(links[k + 1]).id +
                              " is not permitted by any phase");
      }
    }
  }

  for (const auto& d : doc.detectors) {
    Detector det;
    det.link = d.link;
    det.kind = d.kind;
    det.position = d.position;
    const int lanes = net.link(d.link).lanes;
    det.covers.assign(lanes, 0);
    det.pass_time.assign(lanes, 0.0);
    for (int lane : d.lanes) det.covers[lane] = 1;
    link_detectors_[d.link].push_back(detectors_.size());
    detectors_.push_back(std::move(det));
  }
  monitored_ = net.monitored_links();
}

void World::install_controller(std::size_t node, sig::SignalController controller) {
  if (network().node(node).kind != net::NodeKind::signalized) {
    throw ConfigError("signals", "node '" + network().node(node).id + "' is not signalized");
  }
  controllers_.at(node) = std::move(controller);
}

sig::SignalController& World::controller(std::size_t node) {
  if (!controllers_.at(node)) throw RuntimeAbort("no controller at node '" + network().node(node).id + "'");
  return *controllers_[node];
}

const sig::SignalController& World::controller(std::size_t node) const {
  if (!controllers_.at(node)) throw RuntimeAbort("no controller at node '" + network().node(node).id + "'");
  return *controllers_[node];
}

void World::add_lane_block(const LaneBlock& block) {
  if (block.link >= links_.size()) throw ConfigError("perturbation", "unknown link index");
  if (block.lanes < 1) throw ConfigError("perturbation", "blocked lanes must be >= 1");
  if (block.lanes >= network().link(block.link).lanes) {
    throw ConfigError("perturbation", "cannot block every lane of '" + network().link(block.link).id + "'");
  }
  blocks_.push_back(block);
}

int World::effective_lanes(std::size_t link) const {
  return network().link(link).lanes - links_[link].blocked_lanes;
}

std::size_t World::storage(std::size_t link) const {
  const double cap = network().link(link).length * effective_lanes(link) / config_.jam_spacing;
  return std::max<std::size_t>(1, static_cast<std::size_t>(cap));
}

std::uint64_t World::on_network() const {
  std::uint64_t n = 0;
  for (const auto& s : links_) n += s.backlog.size() + s.in_transit.size() + s.queue.size();
  return n;
}

void World::enter_link(std::size_t vehicle, std::size_t link, Seconds t) {
  Vehicle& v = vehicles_[vehicle];
  LinkState& s = links_[link];
  v.lane = static_cast<int>(vehicle % static_cast<std::size_t>(effective_lanes(link)));
  v.link_entry = t;
  s.in_transit.push_back({vehicle, t + static_cast<Seconds>(travel_[link])});
  ++s.entered;
  const auto& l = network().link(link);
  for (std::size_t d : link_detectors_[link]) {
    Detector& det = detectors_[d];
    if (det.kind != net::DetectorKind::advance || !det.covers[v.lane]) continue;
    const auto when = t + static_cast<Seconds>(std::floor((l.length - det.position) / l.free_flow_speed));
    det.crossings.emplace_back(when, v.lane);
  }
}

void World::discharge(std::size_t link) {
  LinkState& s = links_[link];
  const auto& l = network().link(link);
  const std::size_t phase = controllers_[l.to]->current_phase();
  const double rate = l.saturation_flow * effective_lanes(link);
  const Seconds t = clock_;
  const bool green = std::any_of(turns_[link].begin(), turns_[link].end(),
                                 [&](const Turn& turn) { return turn.phases & (1u << phase); });
  if (!green) {
    s.accumulator = 0.0;
    return;
  }
  s.accumulator += rate;
  while (!s.queue.empty()) {
    const std::size_t id = s.queue.front();
    Vehicle& v = vehicles_[id];
    const std::size_t next = network().route(v.route).links[v.leg + 1];
    std::uint32_t mask = 0;
    for (const auto& turn : turns_[link]) {
      if (turn.next == next) mask = turn.phases;
    }
    if (!(mask & (1u << phase))) {
      s.accumulator = 0.0;
      return;
    }
    if (links_[next].on_link() >= storage(next)) {
      s.accumulator = std::min(s.accumulator, 1.0);
      return;
    }
    if (s.accumulator < 1.0) return;
    s.accumulator -= 1.0;
    s.queue.pop_front();
    --s.lane_queue[v.lane];
    ++s.exited;
    for (std::size_t d : link_detectors_[link]) {
      Detector& det = detectors_[d];
      if (det.kind == net::DetectorKind::stopbar && det.covers[v.lane]) {
        det.flow += 1.0;
        det.pass_time[v.lane] += config_.detector_zone / l.free_flow_speed;
      }
    }
    if (probe_node_ && *probe_node_ == l.to) {
      probe_.link_time_sum += static_cast<double>(t - v.link_entry);
      probe_.free_flow_sum += l.free_flow_time();
      ++probe_.served;
    }
    ++v.leg;
    enter_link(id, next, t);
  }
  s.accumulator = std::min(s.accumulator, std::max(0.0, 1.0 - rate));
}

void World::sample_detectors() {
  const Seconds t = clock_;
  for (auto& det : detectors_) {
    const LinkState& s = links_[det.link];
    const auto& l = network().link(det.link);
    if (det.kind == net::DetectorKind::advance) {
      while (!det.crossings.empty() && det.crossings.front().first <= t) {
        det.flow += 1.0;
        det.pass_time[det.crossings.front().second] += config_.detector_zone / l.free_flow_speed;
        det.crossings.pop_front();
      }
    }
    for (std::size_t lane = 0; lane < det.covers.size(); ++lane) {
      if (!det.covers[lane]) continue;
      const int queued = s.lane_queue[lane];
      const bool standing = det.kind == net::DetectorKind::stopbar
                                ? queued > 0
                                : queued * config_.jam_spacing > det.position;
      det.occupancy_sum += std::min(1.0, (standing ? 1.0 : 0.0) + det.pass_time[lane]);
      det.pass_time[lane] = 0.0;
    }
  }
}

std::size_t World::inject(std::size_t route) {
  const net::Network& net = network();
  if (route >= net.routes().size()) throw ConfigError("inject", "unknown route index");
  const std::size_t id = vehicles_.size();
  vehicles_.push_back({route, 0, 0, clock_});
  VehicleRecord rec;
  rec.id = id;
  rec.route = route;
  rec.entry_time = clock_;
  rec.free_flow_time = net.route_free_flow_time(route);
  rec.route_distance = net.route_distance(route);
  records_.push_back(rec);
  links_[net.route(route).links.front()].backlog.push_back(id);
  ++injected_;
  return id;
}

void World::step() {
  const Seconds t = clock_;
  const net::Network& net = network();

  if (!blocks_.empty()) {
    for (const auto& b : blocks_) links_[b.link].blocked_lanes = 0;
    for (const auto& b : blocks_) {
      if (b.start <= t && t < b.end) {
        auto& s = links_[b.link];
        s.blocked_lanes = std::min(s.blocked_lanes + b.lanes, net.link(b.link).lanes - 1);
      }
    }
  }

  scratch_.clear();
  arrivals_.arrivals(t, rng_, scratch_);
  for (std::size_t route : scratch_) inject(route);

  for (std::size_t i = 0; i < links_.size(); ++i) {
    LinkState& s = links_[i];
    while (!s.backlog.empty() && s.on_link() < storage(i)) {
      const std::size_t id = s.backlog.front();
      s.backlog.pop_front();
      enter_link(id, i, t);
    }
  }

  for (std::size_t i = 0; i < links_.size(); ++i) {
    LinkState& s = links_[i];
    const bool exit_node = net.node(net.link(i).to).kind == net::NodeKind::boundary;
    while (!s.in_transit.empty() && s.in_transit.front().arrival <= t) {
      const std::size_t id = s.in_transit.front().vehicle;
      s.in_transit.pop_front();
      if (exit_node) {
        ++s.exited;
        ++exited_;
        VehicleRecord& rec = records_[id];
        rec.exit_time = t;
        ++interval_trips_;
        interval_delay_ += static_cast<double>(t - rec.entry_time) - rec.free_flow_time;
        interval_distance_km_ += rec.route_distance / 1000.0;
      } else {
        s.queue.push_back(id);
        ++s.lane_queue[vehicles_[id].lane];
      }
    }
  }

  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (net.node(net.link(i).to).kind != net::NodeKind::signalized) continue;
    if (!controllers_[net.link(i).to]) throw RuntimeAbort("no controller at node '" + net.node(net.link(i).to).id + "'");
    discharge(i);
  }

  sample_detectors();
  for (std::size_t i = 0; i < links_.size(); ++i) queue_sum_[i] += static_cast<double>(links_[i].queue.size());
  if (probe_node_) {
    for (std::size_t l : net.incoming(*probe_node_)) probe_.queue_seconds += static_cast<double>(links_[l].queue.size());
    ++probe_.seconds;
  }

  for (auto& c : controllers_) {
    if (c) c->tick();
  }
  ++clock_;
}

void World::run_until(Seconds t) {
  while (clock_ < t) step();
}

void World::begin_interval() {
  interval_start_ = clock_;
  std::fill(queue_sum_.begin(), queue_sum_.end(), 0.0);
  interval_trips_ = 0;
  interval_delay_ = 0.0;
  interval_distance_km_ = 0.0;
  for (auto& d : detectors_) {
    d.flow = 0.0;
    d.occupancy_sum = 0.0;
  }
}

std::vector<DetectorReading> World::read_detectors() const {
  std::vector<DetectorReading> out;
  out.reserve(detectors_.size());
  const double seconds = static_cast<double>(interval_seconds());
  for (const auto& d : detectors_) {
    DetectorReading r;
    r.flow = d.flow;
    const double lanes = static_cast<double>(std::count(d.covers.begin(), d.covers.end(), 1));
    r.occupancy = seconds > 0 ? d.occupancy_sum / (lanes * seconds) : 0.0;
    out.push_back(r);
  }
  return out;
}

std::size_t World::observation_size() const {
  return network().observation_nodes().size() * net::kApproachCount * 2 * 2;
}

std::vector<double> World::observe() const {
  const net::Network& net = network();
  const auto nodes = net.observation_nodes();
  std::vector<double> obs(observation_size(), 0.0);
  const double seconds = static_cast<double>(interval_seconds());
  if (seconds <= 0) return obs;
  const auto readings = read_detectors();
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    for (int a = 0; a < net::kApproachCount; ++a) {
      const auto link = net.incoming(nodes[n], static_cast<net::Approach>(a));
      if (!link) continue;
      const auto& l = net.link(*link);
      for (int kind = 0; kind < 2; ++kind) {
        double flow = 0.0, occ = 0.0;
        int count = 0;
        for (std::size_t d : link_detectors_[*link]) {
          if (static_cast<int>(detectors_[d].kind) != kind) continue;
          flow += readings[d].flow;
          occ += readings[d].occupancy;
          ++count;
        }
        if (count == 0) continue;
        const std::size_t base = ((n * net::kApproachCount + a) * 2 + kind) * 2;
        obs[base] = flow / (l.saturation_flow * l.lanes * seconds);
        obs[base + 1] = occ / count;
      }
    }
  }
  return obs;
}

std::vector<double> World::queues() const {
  std::vector<double> q(links_.size());
  for (std::size_t i = 0; i < links_.size(); ++i) q[i] = static_cast<double>(links_[i].queue.size());
  return q;
}

std::vector<double> World::mean_queues() const {
  const double seconds = static_cast<double>(interval_seconds());
  std::vector<double> q(links_.size(), 0.0);
  if (seconds <= 0) return q;
  for (std::size_t i = 0; i < links_.size(); ++i) q[i] = queue_sum_[i] / seconds;
  return q;
}

double World::total_queue() const {
  double total = 0.0;
  for (std::size_t l : monitored_) total += static_cast<double>(links_[l].queue.size());
  return total;
}

double World::mean_total_queue() const {
  const double seconds = static_cast<double>(interval_seconds());
  if (seconds <= 0) return 0.0;
  double total = 0.0;
  for (std::size_t l : monitored_) total += queue_sum_[l];
  return total / seconds;
}

void World::probe_node(std::size_t node) {
  probe_node_ = node;
  probe_ = Probe{};
}

double reward(const net::Network& network, const std::vector<double>& queue_by_link, double car_length) {
  double r = 0.0;
  for (std::size_t l : network.monitored_links()) r -= queue_by_link[l] * car_length / network.link(l).length;
  return r;
}

double reward(const World& world, QueueSampling sampling) {
  return reward(world.network(), sampling == QueueSampling::mean ? world.mean_queues() : world.queues(),
                world.config().car_length);
}

double average_delay(const std::vector<VehicleRecord>& records) {
  double delay = 0.0, km = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.exit_time) continue;
    delay += static_cast<double>(*r.exit_time - r.entry_time) - r.free_flow_time;
    km += r.route_distance / 1000.0;
    ++n;
  }
  if (n == 0) throw RuntimeAbort("no completed trips");
  return delay / km;
}

QueueTravelCheck queue_travel_time_check(World& world, std::size_t node, Seconds duration) {
  world.probe_node(node);
  world.run_until(world.clock() + duration);
  const auto& p = world.probe();
  QueueTravelCheck out;
  out.vehicles = p.served;
  out.mean_queue = p.seconds > 0 ? p.queue_seconds / static_cast<double>(p.seconds) : 0.0;
  if (p.served == 0) {
    double ff = 0.0;
    const auto& incoming = world.network().incoming(node);
    for (std::size_t l : incoming) ff += world.network().link(l).free_flow_time();
    out.free_flow = incoming.empty() ? 0.0 : ff / static_cast<double>(incoming.size());
    out.measured = out.free_flow;
    out.predicted = out.free_flow;
    return out;
  }
  const double n = static_cast<double>(p.served);
  out.free_flow = p.free_flow_sum / n;
  out.measured = p.link_time_sum / n;
  out.predicted = static_cast<double>(p.seconds) * out.mean_queue / n + out.free_flow;
  return out;
}

}  // namespace corridor::sim

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "corridor/core/rng.hpp"
#include "corridor/core/time.hpp"
#include "corridor/network/demand.hpp"
#include "corridor/network/scenario_document.hpp"
#include "corridor/signal/signal.hpp"

namespace corridor::sim {

struct WorldConfig {
  double car_length = 5.0;      // m, reward scale c
  double jam_spacing = 7.0;     // m per stored vehicle (car + 2 m gap)
  double detector_zone = 8.0;   // m, loop length plus vehicle
};

struct VehicleRecord {
  std::size_t id = 0;
  std::size_t route = 0;
  Seconds entry_time = 0;
  std::optional<Seconds> exit_time;
  double free_flow_time = 0.0;
  double route_distance = 0.0;
};

struct LaneBlock {
  std::size_t link = 0;
  Seconds start = 0;
  Seconds end = 0;
  int lanes = 1;
};

struct DetectorReading {
  double flow = 0.0;       // vehicles in the interval
  double occupancy = 0.0;  // fraction of the interval
};

struct LinkState {
  struct Transit {
    std::size_t vehicle;
    Seconds arrival;  // second the vehicle reaches the stop bar
  };
  std::deque<std::size_t> backlog;  // generated, waiting for storage (entry links only)
  std::deque<Transit> in_transit;
  std::deque<std::size_t> queue;
  std::vector<int> lane_queue;  // queued vehicles per lane
  int blocked_lanes = 0;
  double accumulator = 0.0;
  std::uint64_t entered = 0;
  std::uint64_t exited = 0;

  std::size_t on_link() const { return in_transit.size() + queue.size(); }
};

// Second-by-second corridor state: vehicles, queues, detectors and the signal
// controllers of every signalized node.
class World {
 public:
  World(const net::ScenarioDocument& doc, const net::DemandProfile& profile, std::uint64_t seed,
        Seconds start, WorldConfig config = {});

  const net::Network& network() const { return doc_->network; }
  const net::ScenarioDocument& document() const { return *doc_; }
  const WorldConfig& config() const { return config_; }
  Seconds clock() const { return clock_; }

  void install_controller(std::size_t node, sig::SignalController controller);
  sig::SignalController& controller(std::size_t node);
  const sig::SignalController& controller(std::size_t node) const;
  void add_lane_block(const LaneBlock& block);

  // Scripted vehicle on `route`, generated at the current second; the next
  // step admits it like any other arrival.
  std::size_t inject(std::size_t route);
  // Advance one second.
  void step();
  void run_until(Seconds t);

  // Interval accumulators (detectors, queues, completed trips) restart here.
  void begin_interval();
  Seconds interval_start() const { return interval_start_; }
  Seconds interval_seconds() const { return clock_ - interval_start_; }

  // Per detector, in document order, over the current interval.
  std::vector<DetectorReading> read_detectors() const;
  // Fixed-layout observation vector over target then observed nodes.
  std::vector<double> observe() const;
  std::size_t observation_size() const;

  // Queued vehicles per link, instantaneous and averaged over the interval.
  std::vector<double> queues() const;
  std::vector<double> mean_queues() const;
  double total_queue() const;
  double mean_total_queue() const;

  // Trips completed in the current interval.
  std::size_t interval_trips() const { return interval_trips_; }
  double interval_delay_sum() const { return interval_delay_; }
  double interval_distance_km() const { return interval_distance_km_; }

  const std::vector<VehicleRecord>& records() const { return records_; }
  const LinkState& link_state(std::size_t link) const { return links_[link]; }
  int effective_lanes(std::size_t link) const;
  std::size_t storage(std::size_t link) const;

  std::uint64_t injected() const { return injected_; }
  std::uint64_t exited() const { return exited_; }
  std::uint64_t on_network() const;
  bool conserved() const { return injected_ == exited_ + on_network(); }

  // Link-level travel statistics of vehicles served at one node.
  void probe_node(std::size_t node);
  struct Probe {
    double link_time_sum = 0.0;
    double free_flow_sum = 0.0;
    std::size_t served = 0;
    double queue_seconds = 0.0;
    Seconds seconds = 0;
  };
  const Probe& probe() const { return probe_; }
  void reset_probe() { probe_ = Probe{}; }

 private:
  struct Vehicle {
    std::size_t route;
    std::size_t leg;
    int lane;
    Seconds link_entry;
  };
  struct Detector {
    std::size_t link;
    net::DetectorKind kind;
    double position;
    std::vector<char> covers;  // by lane
    std::deque<std::pair<Seconds, int>> crossings;  // advance: (second, lane)
    double flow = 0.0;
    double occupancy_sum = 0.0;  // lane-seconds
    std::vector<double> pass_time;  // scratch, by lane
  };
  struct Turn {
    std::size_t next;
    std::uint32_t phases;  // bit per phase index
  };

  void enter_link(std::size_t vehicle, std::size_t link, Seconds t);
  void discharge(std::size_t link);
  void sample_detectors();

  const net::ScenarioDocument* doc_;
  WorldConfig config_;
  net::ArrivalProcess arrivals_;
  Rng rng_;
  Seconds clock_;
  std::vector<LinkState> links_;
  std::vector<double> travel_;      // whole-second traversal per link
  std::vector<std::vector<Turn>> turns_;
  std::vector<std::optional<sig::SignalController>> controllers_;
  std::vector<std::size_t> active_phase_;
  std::vector<LaneBlock> blocks_;
  std::vector<Detector> detectors_;
  std::vector<std::vector<std::size_t>> link_detectors_;
  std::vector<std::size_t> monitored_;
  std::vector<Vehicle> vehicles_;
  std::vector<VehicleRecord> records_;
  std::vector<std::size_t> scratch_;

  Seconds interval_start_;
  std::vector<double> queue_sum_;
  std::size_t interval_trips_ = 0;
  double interval_delay_ = 0.0;
  double interval_distance_km_ = 0.0;

  std::uint64_t injected_ = 0;
  std::uint64_t exited_ = 0;

  std::optional<std::size_t> probe_node_;
  Probe probe_;
};

enum class QueueSampling { mean, endpoint };

// -sum over monitored links of queue * c / L.
double reward(const net::Network& network, const std::vector<double>& queue_by_link, double car_length);
double reward(const World& world, QueueSampling sampling = QueueSampling::mean);

// Mean delay per distance in s/km over completed trips; throws when there are none.
double average_delay(const std::vector<VehicleRecord>& records);

struct QueueTravelCheck {
  double measured = 0.0;   // mean link travel time of served vehicles
  double predicted = 0.0;  // tau * mean queue / N + L / mu
  double mean_queue = 0.0;
  std::size_t vehicles = 0;
  double free_flow = 0.0;
};

// Runs a probe window of `duration` seconds starting at the world's clock.
QueueTravelCheck queue_travel_time_check(World& world, std::size_t node, Seconds duration);

}  // namespace corridor::sim

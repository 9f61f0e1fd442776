#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "corridor/core/rng.hpp"
#include "corridor/core/time.hpp"
#include "corridor/network/network.hpp"

namespace corridor::net {

struct DemandEntry {
  std::size_t route = 0;
  Seconds start = 0;
  Seconds end = 0;
  double rate = 0.0;  // veh/h
};

struct DemandProfile {
  std::string label;  // AM | NOON | PM | custom
  Seconds start = 0;
  Seconds end = 0;
  std::string baseline_schedule;
  std::vector<DemandEntry> entries;

  // Total rate of a route at time t; overlapping entries add.
  double rate(std::size_t route, Seconds t) const;
};

// Poisson arrivals per route per 1 s step. The sequence is a pure function of
// (profile, rng seed); routes are drawn in index order every step.
class ArrivalProcess {
 public:
  ArrivalProcess(const Network& network, const DemandProfile& profile);

  // Appends one route index per vehicle generated during [t, t + 1).
  void arrivals(Seconds t, Rng& rng, std::vector<std::size_t>& out) const;

  double rate(std::size_t route, Seconds t) const;

 private:
  struct Segment {
    Seconds start;
    Seconds end;
    double rate;
  };
  std::vector<std::vector<Segment>> segments_;  // per route, sorted by start
};

std::vector<std::size_t> arrivals_for_step(const Network& network, const DemandProfile& profile,
                                           Seconds t, Rng& rng);

}  // namespace corridor::net

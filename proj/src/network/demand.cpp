#include "corridor/network/demand.hpp"

#include <algorithm>

namespace corridor::net {

double DemandProfile::rate(std::size_t route, Seconds t) const {
  double r = 0.0;
  for (const auto& e : entries) {
    if (e.route == route && e.start <= t && t < e.end) r += e.rate;
  }
  return r;
}

ArrivalProcess::ArrivalProcess(const Network& network, const DemandProfile& profile)
    : segments_(network.routes().size()) {
  for (const auto& e : profile.entries) {
    if (e.rate > 0.0 && e.end > e.start) segments_.at(e.route).push_back({e.start, e.end, e.rate});
  }
  for (auto& s : segments_) {
    std::sort(s.begin(), s.end(), [](const Segment& a, const Segment& b) { return a.start < b.start; });
  }
}

double ArrivalProcess::rate(std::size_t route, Seconds t) const {
  double r = 0.0;
  for (const auto& s : segments_[route]) {
    if (s.start > t) break;
    if (t < s.end) r += s.rate;
  }
  return r;
}

void ArrivalProcess::arrivals(Seconds t, Rng& rng, std::vector<std::size_t>& out) const {
  for (std::size_t r = 0; r < segments_.size(); ++r) {
    const double per_step = rate(r, t) / 3600.0;
    if (per_step <= 0.0) continue;
    const int n = rng.poisson(per_step);
    for (int k = 0; k < n; ++k) out.push_back(r);
  }
}

std::vector<std::size_t> arrivals_for_step(const Network& network, const DemandProfile& profile,
                                           Seconds t, Rng& rng) {
  std::vector<std::size_t> out;
  ArrivalProcess(network, profile).arrivals(t, rng, out);
  return out;
}

}  // namespace corridor::net

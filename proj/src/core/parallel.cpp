#include "corridor/core/parallel.hpp"

#include <cstdlib>
#include <string>

namespace corridor {

std::size_t worker_count(std::size_t requested) {
  std::size_t n = requested == 0 ? 1 : requested;
  if (const char* cap = std::getenv("CORRIDOR_RL_THREADS")) {
    try {
      const long v = std::stol(cap);
      if (v >= 1 && static_cast<std::size_t>(v) < n) n = static_cast<std::size_t>(v);
    } catch (...) {
      // Unparseable cap is ignored.
    }
  }
  return n;
}

}  // namespace corridor

#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace corridor {

// Seeded 64-bit stream. Draws are built from raw engine bits so sequences are
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  int uniform_int(int n);

  double normal();

  // Knuth's multiplication method; large means are split into chunks.
  int poisson(double mean);

  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer over a pair; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace corridor

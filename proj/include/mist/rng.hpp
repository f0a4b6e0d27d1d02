#pragma once

// Seeded random streams. Distributions are implemented here rather than via
// <random>'s distribution classes so that draw counts and outputs are the
// same across standard library implementations.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace mist {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_name(std::string_view name);  // FNV-1a, 64 bit

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent stream derived from a root seed and a stream name.
  static Rng stream(std::uint64_t root_seed, std::string_view name);

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n); exactly one engine draw.
  std::size_t index(std::size_t n);
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean = 0.0, double stddev = 1.0);  // Box-Muller, two draws
  /// Fisher-Yates permutation of 0..n-1; n-1 draws.
  std::vector<std::size_t> permutation(std::size_t n);

  std::string state() const;
  void set_state(const std::string& s);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mist

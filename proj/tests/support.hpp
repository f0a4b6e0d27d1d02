#pragma once

// Shared fixtures for the test binaries.

#include <chrono>
#include <cmath>
#include <vector>

#include "mist/config.hpp"
#include "mist/synth.hpp"
#include "mist/tensor.hpp"

namespace mist::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

/// A small dataset that trains in well under a second per epoch.
inline RunConfig small_config() {
  RunConfig c;
  c.dataset.pretrain_size = 120;
  c.dataset.heldout_size = 40;
  c.dataset.train_size = 96;
  c.dataset.eval_pairs = 20;
  c.train.pretrain_epochs = 3;
  c.train.train_epochs = 2;
  return c;
}

inline Dataset make_dataset(const DatasetConfig& c) {
  World w = make_world(c);
  Splits s = make_splits(w);
  return {std::move(w), std::move(s)};
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace mist::testing

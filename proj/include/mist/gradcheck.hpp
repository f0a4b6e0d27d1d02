#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mist/tensor.hpp"

namespace mist {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool ok = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  bool ok() const;
  double max_rel_error() const;
  std::string summary() const;
};

// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries whose
// true gradient is ~0 from being judged on central-difference round-off.
double relative_error(double analytic, double numeric, double floor = 1e-5);

/// Compares backward() against central differences (f(p+h) - f(p-h)) / 2h
/// for every element of every listed parameter. `loss` must rebuild the
/// forward pass from the current parameter values on each call.
GradCheckReport finite_difference_check(const std::function<Tensor()>& loss, const ParamList& params,
                                        double h = 1e-5, double tolerance = 1e-4);

}  // namespace mist

#pragma once

// Fast invariant suite behind `mist selftest`, and the gradient-check cases it
// shares with the test binaries.

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "mist/gradcheck.hpp"
#include "mist/models.hpp"

namespace mist {

struct GradientProblem {
  std::function<Tensor()> loss;
  ParamList params;
};

/// A named loss whose inputs and parameters are drawn from a seed.
struct GradientCase {
  std::string name;
  std::function<GradientProblem(std::uint64_t seed)> build;
};

/// One case per differentiable tensor op, named after the op.
std::vector<GradientCase> op_gradient_cases();
/// Every network under the reconstruction L1 loss and the DV bound.
std::vector<GradientCase> network_gradient_cases(const ModelConfig& cfg = {});

GradCheckReport run_gradient_case(const GradientCase& c, std::uint64_t seed, double tolerance = 1e-4);

struct SelfTestCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct SelfTestOptions {
  std::size_t op_points = 3;       // seeded points per op case
  std::size_t network_points = 2;  // seeded points per network case
  std::size_t gaussian_steps = 1500;
  std::string fault_op;            // test fixture: corrupt this op's gradient rule
};

/// Runs every check, printing one PASS/FAIL line each to `out`.
std::vector<SelfTestCheck> run_selftest(const SelfTestOptions& opts, std::ostream& out);

}  // namespace mist

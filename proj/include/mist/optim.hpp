#pragma once

#include <string>
#include <vector>

#include "mist/gradcheck.hpp"

namespace mist {

enum class OptimizerKind { kAdam, kSgd };

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain gradient steps over a
/// fixed parameter list. Reads each parameter's accumulated grad.
class Optimizer {
 public:
  Optimizer(ParamList params, double learning_rate, OptimizerKind kind = OptimizerKind::kAdam);

  /// Descent step: p -= lr * update(grad).
  void descend() { step(-1.0); }
  /// Ascent step: p += lr * update(grad).
  void ascend() { step(+1.0); }
  void zero_grad();

  const ParamList& params() const { return params_; }
  std::size_t steps_taken() const { return t_; }
  double learning_rate() const { return lr_; }

  // State for checkpoints and determinism tests.
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  void step(double sign);

  ParamList params_;
  double lr_;
  OptimizerKind kind_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace mist

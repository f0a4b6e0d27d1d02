#include "mist/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace mist {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected adam or sgd)");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

Optimizer::Optimizer(ParamList params, double learning_rate, OptimizerKind kind)
    : params_(std::move(params)), lr_(learning_rate), kind_(kind) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void Optimizer::step(double sign) {
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto t = params_[i].tensor;
    if (!t.has_grad()) continue;  // never reached by a backward pass
    auto g = t.grad();
    auto p = t.mutable_values();
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t k = 0; k < p.size(); ++k) p[k] += sign * lr_ * g[k];
      continue;
    }
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * g[k];
      v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] += sign * lr_ * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

}  // namespace mist

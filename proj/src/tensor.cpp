#include "mist/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace mist {

namespace {

struct FaultInjection {
  std::string op;
  double factor = 1.0;
};

FaultInjection& fault() {
  static FaultInjection f;
  return f;
}

[[noreturn]] void shape_fail(const std::string& op, const Shape& a, const Shape& b) {
  throw ShapeError(op + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

[[noreturn]] void shape_fail(const std::string& op, const Shape& a, const std::string& why) {
  throw ShapeError(op + ": " + why + " (got " + shape_str(a) + ")");
}

void ensure_grad(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
}

// Creates the output node; records inputs and the rule only when needed.
Tensor make_result(std::string op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, std::function<void(Node&)> rule) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = std::move(op);
  bool needs = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor& t) { return t.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node());
    node->backward_rule = std::move(rule);
  }
  return Tensor(std::move(node));
}

void require_rank2(const std::string& op, const Tensor& t) {
  if (t.rank() != 2) shape_fail(op, t.shape(), "expected a rank-2 tensor");
}

template <typename F, typename G>
Tensor unary(const std::string& op, const Tensor& a, F forward, G local_grad) {
  std::vector<double> out(a.numel());
  auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(av[i]);
  return make_result(op, a.shape(), std::move(out), {a}, [local_grad](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    ensure_grad(in);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      in.grad[i] += self.grad[i] * local_grad(in.value[i], self.value[i]);
  });
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::vector<double> values(shape_numel(shape), v);
  return from(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape_numel(shape))
    throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  node->op = "leaf";
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({}, {v}, requires_grad); }

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  Shape s{values.size()};
  return from(std::move(s), std::move(values), requires_grad);
}

std::size_t Tensor::rows() const {
  if (rank() != 2) shape_fail("rows", shape(), "expected a rank-2 tensor");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) shape_fail("cols", shape(), "expected a rank-2 tensor");
  return node_->shape[1];
}

std::span<double> Tensor::mutable_values() {
  if (!is_leaf()) throw std::logic_error("mutable_values: only leaf tensors may be modified in place");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) shape_fail("item", shape(), "expected a single element");
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->value.at(r * cols() + c); }

void Tensor::set_requires_grad(bool on) {
  if (!is_leaf()) throw std::logic_error("set_requires_grad: only valid on leaf tensors");
  node_->requires_grad = on;
  if (!on) node_->grad.clear();
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) shape_fail("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = &bv[p * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    const auto& g = self.grad;
    if (A.requires_grad) {  // dA = g B^T
      ensure_grad(A);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * B.value[p * n + j];
          A.grad[i * k + p] += s;
        }
    }
    if (B.requires_grad) {  // dB = A^T g
      ensure_grad(B);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A.value[i * k + p];
          double* brow = &B.grad[p * n];
          for (std::size_t j = 0; j < n; ++j) brow[j] += aip * g[i * n + j];
        }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("add", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      ensure_grad(*in);
      for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("sub", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    if (A.requires_grad) {
      ensure_grad(A);
      for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i];
    }
    if (B.requires_grad) {
      ensure_grad(B);
      for (std::size_t i = 0; i < self.grad.size(); ++i) B.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul", a.shape(), b.shape());
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    if (A.requires_grad) {
      ensure_grad(A);
      for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i] * B.value[i];
    }
    if (B.requires_grad) {
      ensure_grad(B);
      for (std::size_t i = 0; i < self.grad.size(); ++i) B.grad[i] += self.grad[i] * A.value[i];
    }
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  if (a.rank() != 2 || bias.rank() != 1 || bias.numel() != a.cols()) shape_fail("add_bias", a.shape(), bias.shape());
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias.values()[j];
  return make_result("add_bias", a.shape(), std::move(out), {a, bias}, [m, n](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    if (A.requires_grad) {
      ensure_grad(A);
      for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i];
    }
    if (B.requires_grad) {
      ensure_grad(B);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) B.grad[j] += self.grad[i * n + j];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) shape_fail("reshape", a.shape(), shape);
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {a}, [](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    ensure_grad(A);
    for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary("scale", a, [factor](double x) { return factor * x; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary("add_scalar", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor tanh(const Tensor& a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor abs(const Tensor& a) {
  return unary("abs", a, [](double x) { return std::fabs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor softmax(const Tensor& a) {
  if (a.rank() == 0) shape_fail("softmax", a.shape(), "expected rank >= 1");
  const std::size_t n = a.shape().back();
  const std::size_t m = a.numel() / n;
  std::vector<double> out(a.numel());
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = &av[i * n];
    double* y = &out[i * n];
    const double mx = *std::max_element(x, x + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= s;
  }
  return make_result("softmax", a.shape(), std::move(out), {a}, [m, n](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    ensure_grad(A);
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = &self.value[i * n];
      const double* g = &self.grad[i * n];
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) A.grad[i * n + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_result("sum", {}, {s}, {a}, [](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    ensure_grad(A);
    for (double& g : A.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) shape_fail("mean", a.shape(), "empty tensor");
  const double inv = 1.0 / static_cast<double>(a.numel());
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_result("mean", {}, {s * inv}, {a}, [inv](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    ensure_grad(A);
    for (double& g : A.grad) g += self.grad[0] * inv;
  });
}

Tensor mean(const Tensor& a, std::size_t axis) {
  require_rank2("mean", a);
  if (axis > 1) shape_fail("mean", a.shape(), "axis out of range");
  const std::size_t m = a.rows(), n = a.cols();
  if ((axis == 0 ? m : n) == 0) shape_fail("mean", a.shape(), "empty reduction axis");
  auto av = a.values();
  if (axis == 0) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[j] += av[i * n + j];
    for (double& v : out) v /= static_cast<double>(m);
    return make_result("mean", {n}, std::move(out), {a}, [m, n](Node& self) {
      Node& A = *self.inputs[0];
      if (!A.requires_grad) return;
      ensure_grad(A);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) A.grad[i * n + j] += self.grad[j] / static_cast<double>(m);
    });
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += av[i * n + j];
    out[i] /= static_cast<double>(n);
  }
  return make_result("mean", {m}, std::move(out), {a}, [m, n](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    ensure_grad(A);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) A.grad[i * n + j] += self.grad[i] / static_cast<double>(n);
  });
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
  if (a.rank() == 1 && b.rank() == 1 && axis == 0) {
    std::vector<double> out(a.values().begin(), a.values().end());
    out.insert(out.end(), b.values().begin(), b.values().end());
    const std::size_t na = a.numel();
    return make_result("concat", {a.numel() + b.numel()}, std::move(out), {a, b}, [na](Node& self) {
      Node& A = *self.inputs[0];
      Node& B = *self.inputs[1];
      if (A.requires_grad) {
        ensure_grad(A);
        for (std::size_t i = 0; i < na; ++i) A.grad[i] += self.grad[i];
      }
      if (B.requires_grad) {
        ensure_grad(B);
        for (std::size_t i = 0; i < B.grad.size(); ++i) B.grad[i] += self.grad[na + i];
      }
    });
  }
  if (a.rank() != 2 || b.rank() != 2 || axis > 1) shape_fail("concat", a.shape(), b.shape());
  if (axis == 0) {
    if (a.cols() != b.cols()) shape_fail("concat", a.shape(), b.shape());
    std::vector<double> out(a.values().begin(), a.values().end());
    out.insert(out.end(), b.values().begin(), b.values().end());
    const std::size_t na = a.numel();
    return make_result("concat", {a.rows() + b.rows(), a.cols()}, std::move(out), {a, b}, [na](Node& self) {
      Node& A = *self.inputs[0];
      Node& B = *self.inputs[1];
      if (A.requires_grad) {
        ensure_grad(A);
        for (std::size_t i = 0; i < na; ++i) A.grad[i] += self.grad[i];
      }
      if (B.requires_grad) {
        ensure_grad(B);
        for (std::size_t i = 0; i < B.grad.size(); ++i) B.grad[i] += self.grad[na + i];
      }
    });
  }
  if (a.rows() != b.rows()) shape_fail("concat", a.shape(), b.shape());
  const std::size_t m = a.rows(), na = a.cols(), nb = b.cols(), n = na + nb;
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(&a.values()[i * na], na, &out[i * n]);
    std::copy_n(&b.values()[i * nb], nb, &out[i * n + na]);
  }
  return make_result("concat", {m, n}, std::move(out), {a, b}, [m, na, nb, n](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    if (A.requires_grad) {
      ensure_grad(A);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < na; ++j) A.grad[i * na + j] += self.grad[i * n + j];
    }
    if (B.requires_grad) {
      ensure_grad(B);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nb; ++j) B.grad[i * nb + j] += self.grad[i * n + na + j];
    }
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
  require_rank2("gather_rows", table);
  const std::size_t n = table.cols(), rows = table.rows();
  std::vector<double> out(indices.size() * n);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows)
      throw ShapeError("gather_rows: index " + std::to_string(indices[i]) + " out of range for " +
                       shape_str(table.shape()));
    std::copy_n(&table.values()[indices[i] * n], n, &out[i * n]);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result("gather_rows", {indices.size(), n}, std::move(out), {table},
                     [idx = std::move(idx), n](Node& self) {
                       Node& T = *self.inputs[0];
                       if (!T.requires_grad) return;
                       ensure_grad(T);
                       // scatter-add: repeated indices sum
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         for (std::size_t j = 0; j < n; ++j) T.grad[idx[i] * n + j] += self.grad[i * n + j];
                     });
}

Tensor log_sum_exp(const Tensor& a) {
  if (a.numel() == 0) shape_fail("log_sum_exp", a.shape(), "empty tensor");
  auto av = a.values();
  const double mx = *std::max_element(av.begin(), av.end());
  double s = 0.0;
  for (double v : av) s += std::exp(v - mx);
  const double out = mx + std::log(s);
  return make_result("log_sum_exp", {}, {out}, {a}, [](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    ensure_grad(A);
    const double lse = self.value[0];
    for (std::size_t i = 0; i < A.value.size(); ++i) A.grad[i] += self.grad[0] * std::exp(A.value[i] - lse);
  });
}

Tensor log_sum_exp(const Tensor& a, std::size_t axis) {
  require_rank2("log_sum_exp", a);
  if (axis > 1) shape_fail("log_sum_exp", a.shape(), "axis out of range");
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t outer = axis == 0 ? n : m;
  const std::size_t inner = axis == 0 ? m : n;
  if (inner == 0) shape_fail("log_sum_exp", a.shape(), "empty reduction axis");
  auto idx = [axis, n](std::size_t o, std::size_t k) { return axis == 0 ? k * n + o : o * n + k; };
  std::vector<double> out(outer);
  auto av = a.values();
  for (std::size_t o = 0; o < outer; ++o) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < inner; ++k) mx = std::max(mx, av[idx(o, k)]);
    double s = 0.0;
    for (std::size_t k = 0; k < inner; ++k) s += std::exp(av[idx(o, k)] - mx);
    out[o] = mx + std::log(s);
  }
  return make_result("log_sum_exp", {outer}, std::move(out), {a}, [outer, inner, idx](Node& self) {
    Node& A = *self.inputs[0];
    if (!A.requires_grad) return;
    ensure_grad(A);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t k = 0; k < inner; ++k)
        A.grad[idx(o, k)] += self.grad[o] * std::exp(A.value[idx(o, k)] - self.value[o]);
  });
}

Tensor segment_max(const Tensor& a, std::span<const std::pair<std::size_t, std::size_t>> segments) {
  require_rank2("segment_max", a);
  const std::size_t n = a.cols();
  std::vector<double> out(segments.size() * n);
  std::vector<std::size_t> argmax(segments.size() * n);
  auto av = a.values();
  for (std::size_t s = 0; s < segments.size(); ++s) {
    auto [begin, end] = segments[s];
    if (begin >= end || end > a.rows())
      shape_fail("segment_max", a.shape(), "bad segment [" + std::to_string(begin) + "," + std::to_string(end) + ")");
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t best = begin;
      for (std::size_t r = begin + 1; r < end; ++r)
        if (av[r * n + j] > av[best * n + j]) best = r;  // first maximum wins
      argmax[s * n + j] = best;
      out[s * n + j] = av[best * n + j];
    }
  }
  return make_result("segment_max", {segments.size(), n}, std::move(out), {a},
                     [argmax = std::move(argmax), n](Node& self) {
                       Node& A = *self.inputs[0];
                       if (!A.requires_grad) return;
                       ensure_grad(A);
                       for (std::size_t k = 0; k < argmax.size(); ++k) A.grad[argmax[k] * n + k % n] += self.grad[k];
                     });
}

// ---- backward --------------------------------------------------------------

Graph Graph::collect(const Tensor& root) {
  Graph g;
  std::unordered_set<const Node*> seen;
  // iterative post-order DFS; inputs are emitted before their consumers
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    g.order.push_back(node);
    stack.pop_back();
  }
  return g;
}

std::size_t Graph::op_count() const {
  return static_cast<std::size_t>(
      std::count_if(order.begin(), order.end(), [](const auto& n) { return n->op != "leaf"; }));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ShapeError("backward: loss must be a scalar, got " + (loss.defined() ? shape_str(loss.shape()) : "undefined"));
  if (!loss.requires_grad()) return;
  Graph g = Graph::collect(loss);
  for (auto& n : g.order)
    if (n->op != "leaf") n->grad.assign(n->value.size(), 0.0);
  Node& root = *loss.node();
  if (root.op == "leaf") {
    ensure_grad(root);
    root.grad[0] += 1.0;
    return;
  }
  root.grad[0] = 1.0;
  const auto& f = fault();
  for (auto it = g.order.rbegin(); it != g.order.rend(); ++it) {
    Node& n = **it;
    if (n.op == "leaf" || !n.backward_rule) continue;
    if (!f.op.empty() && n.op == f.op)
      for (double& v : n.grad) v *= f.factor;
    n.backward_rule(n);
  }
  // Intermediate gradients are scratch space; drop them to keep memory flat.
  for (auto& n : g.order)
    if (n->op != "leaf") std::vector<double>().swap(n->grad);
}

namespace debug {
void inject_gradient_fault(const std::string& op, double factor) {
  fault().op = op;
  fault().factor = factor;
}
}  // namespace debug

}  // namespace mist

#pragma once

// Dense double-precision tensors with a define-by-run gradient tape.
//
// Every op returns a fresh Tensor. When at least one input requires a
// gradient, the result keeps references to its inputs together with a local
// backward rule; the graph is therefore implicit in the parent links and
// released when the last handle to the loss goes away. Tensors built only
// from constants record nothing.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mist {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Thrown by ops whose operands do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a backward pass reaches the node
  bool requires_grad = false;
  std::string op;  // "leaf" for user-created tensors
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_rule;  // reads this->grad, accumulates into inputs
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }

  std::span<const double> values() const { return node_->value; }
  // Mutable access is for leaves only (optimizers, finite differences).
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();

  const std::string& op() const { return node_->op; }
  bool is_leaf() const { return node_->op == "leaf"; }

  /// Deep copy of the values as a new leaf (no graph, no grad).
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

// ---- primitive ops ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);        // [m,k]x[k,n]
Tensor add(const Tensor& a, const Tensor& b);           // same shape
Tensor sub(const Tensor& a, const Tensor& b);           // same shape
Tensor mul(const Tensor& a, const Tensor& b);           // elementwise
Tensor add_bias(const Tensor& a, const Tensor& bias);   // [m,n] + [n]
Tensor reshape(const Tensor& a, Shape shape);          // same element count
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double c);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor softmax(const Tensor& a);                        // over the last axis
Tensor sum(const Tensor& a);                            // all elements -> scalar
Tensor mean(const Tensor& a);                           // all elements -> scalar
Tensor mean(const Tensor& a, std::size_t axis);         // rank-2 only
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);
Tensor log_sum_exp(const Tensor& a);                    // all elements -> scalar
Tensor log_sum_exp(const Tensor& a, std::size_t axis);  // rank-2 only
// Max over contiguous row segments: segments[i] = (begin, end) of group i.
Tensor segment_max(const Tensor& a, std::span<const std::pair<std::size_t, std::size_t>> segments);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// ---- backward --------------------------------------------------------------

/// Topologically ordered record of the ops reachable from a root.
struct Graph {
  std::vector<Node*> order;  // inputs precede consumers; owned by the root's graph

  static Graph collect(const Tensor& root);
  std::size_t op_count() const;
};

/// Accumulates d(loss)/d(leaf) into every reachable leaf that requires a
/// gradient. Intermediate gradients are reset on each call; leaf gradients
/// add up across calls until zero_grad().
void backward(const Tensor& loss);

namespace debug {
// Test hook: multiplies the local gradient of the named op by `factor`.
// An empty name disables injection.
void inject_gradient_fault(const std::string& op, double factor = 1.5);
}  // namespace debug

}  // namespace mist

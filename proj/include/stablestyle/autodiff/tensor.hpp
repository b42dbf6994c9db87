#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sst {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Propagates node.grad into the grads of node.inputs.
using BackwardFn = std::function<void(Node& node)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool backward_consumed = false;
  std::vector<NodePtr> inputs;
  BackwardFn backward;

  bool is_leaf() const { return !backward; }
  std::vector<double>& grad_buffer();
};

}  // namespace detail

struct BackwardStats {
  std::size_t nodes_visited = 0;
};

// Dense float64 tensor in row-major order. Copies share the underlying node,
// so a Tensor behaves like a handle into the autodiff graph.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> values() const;
  // Only leaves may be mutated in place (optimizers, finite differences).
  std::span<double> mutable_values();
  double item() const;
  // Rank-3 convenience accessor (channel, row, column).
  double at(std::size_t c, std::size_t y, std::size_t x) const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  // Gradient buffer; zeros when no gradient has been accumulated.
  std::vector<double> grad() const;
  void zero_grad();

  // Reverse-mode sweep from a scalar tensor. Each loss may be swept once.
  BackwardStats backward() const;

  // Same values, no graph history, no gradient tracking.
  Tensor detach() const;
  // Deep copy of the values into a fresh leaf.
  Tensor clone(bool requires_grad = false) const;

  const detail::NodePtr& node() const { return node_; }
  static Tensor from_node(detail::NodePtr node);

 private:
  detail::NodePtr node_;
};

// Graph recording is disabled while at least one guard is alive on the
// current thread. Used for inference and finite-difference probes.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {

// Builds an op result. Checks finiteness, and records the backward rule only
// when recording is enabled and an input requires grad.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, BackwardFn backward);

}  // namespace detail

}  // namespace sst

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace jlm::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// One value in the recorded computation graph. Values are immutable once
// created; only leaf parameters are mutated, and only by the optimizer.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  std::vector<double>& ensure_grad();
};

// Shared handle onto a graph node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor scalar(double v) { return constant({}, {v}); }
  // Leaf with a zero-initialized gradient buffer.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> data() const { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  double item() const;

  // Parameter storage, for optimizers and checkpoint loading.
  std::span<double> mutable_data() { return node_->value; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Builds a result node; the backward closure is dropped when no input
// requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward);

// Reverse pass from a scalar. Throws GraphError for non-scalar losses.
void backward(const Tensor& loss);

}  // namespace jlm::nn

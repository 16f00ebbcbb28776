#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "talkit/tensor.hpp"

namespace talkit {

// Handle into one Graph. Only valid for the graph that produced it.
struct Value {
  int index = -1;
};

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;

// Reverse-mode tape over dense rank-1/rank-2 tensors. Nodes are appended in
// forward order; insertion order is the topological order. A graph is
// single-threaded; distinct graphs may live on distinct threads.
//
// backward() re-seeds the loss gradient and zeroes every non-leaf gradient
// first, so calling it repeatedly accumulates gradients on the leaves.
class Graph {
 public:
  // Leaves. requires_grad is taken from the tensor flag.
  Value leaf(Tensor t);
  Value constant(Tensor t);  // leaf with requires_grad forced off

  // Same-length 1-D convolution. input (T, C_in), kernel (K*C_in, C_out)
  // row-major over (tap, input channel), bias (C_out,). K must be odd.
  Value conv1d(Value input, Value kernel, Value bias, int kernel_width);

  // Elementwise unaries.
  Value relu(Value x);
  Value sigmoid(Value x);
  Value abs(Value x);
  Value max_with_zero(Value x);      // max(0, x)
  Value neg_min_with_zero(Value x);  // -min(0, x)
  Value log(Value x);                // caller guarantees positive input
  Value clamp_unit(Value x);         // clamp to [kProbClamp, 1 - kProbClamp]
  Value smooth_l1(Value x);          // 0.5 x^2 if |x| < 1 else |x| - 0.5

  // Elementwise binaries; shapes must match or one side must be a scalar
  // (size-1 tensor).
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);

  // scale * x + shift, elementwise.
  Value affine(Value x, double scale, double shift);

  // Contiguous [begin, end) slice of a rank-1 tensor.
  Value slice(Value x, int begin, int end);

  // Rank-2 (T, 1) column to rank-1 (T,).
  Value flatten(Value x);

  // Reductions to a scalar (rank-1, length-1) tensor. Input must be non-empty.
  Value sum(Value x);
  Value mean(Value x);

  // Fused node with caller-supplied forward value and backward. parent_grads
  // entries are null for parents that do not require gradients.
  using CustomBackward =
      std::function<void(const Tensor& out_grad, const std::vector<Tensor*>& parent_grads)>;
  Value custom(const std::vector<Value>& parents, Tensor value, CustomBackward backward,
               double kink_distance = std::numeric_limits<double>::infinity());

  // Reverse pass from a scalar loss. Gradients accumulate on requires_grad
  // leaves across calls; intermediate gradients are reset on each call.
  void backward(Value loss);

  const Tensor& value(Value v) const { return node(v).value; }
  const Tensor& grad(Value v) const;
  bool requires_grad(Value v) const { return node(v).requires_grad; }
  void zero_grad();  // clears every gradient, leaves included

  int size() const { return static_cast<int>(nodes_.size()); }

  // Smallest distance of any activation to a non-differentiable point seen
  // while building this graph. Gradient checks resample when this is small.
  double min_kink_distance() const { return min_kink_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated iff requires_grad
    bool requires_grad = false;
    bool is_leaf = false;
    std::vector<int> parents;
    std::function<void(Graph&, int)> backward;  // null for leaves
  };

  Node& node(Value v);
  const Node& node(Value v) const;
  Value push(Node n);
  Value unary(Value x, double (*f)(double), double (*df)(double), double (*kink)(double));
  Value binary(Value a, Value b, int op);  // 0 add, 1 sub, 2 mul
  void note_kink(double distance) {
    if (distance < min_kink_) min_kink_ = distance;
  }

  std::vector<Node> nodes_;
  double min_kink_ = std::numeric_limits<double>::infinity();
};

}  // namespace talkit

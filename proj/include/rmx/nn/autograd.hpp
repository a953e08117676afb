#pragma once

// Tape-free reverse-mode differentiation: every op output is a Node that
// remembers its inputs and how to push its gradient back into them.
// Parameters are long-lived leaf nodes; intermediate nodes die with the
// last reference to the graph's output.

#include <functional>
#include <memory>
#include <vector>

#include "rmx/nn/tensor.hpp"

namespace rmx::nn {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> inputs;
  std::function<void(Node<T>&)> backward_fn;

  /// Zero-filled gradient buffer of the value's shape, allocated on demand.
  Tensor<T>& grad_buffer();
  bool has_grad() const { return !grad.empty(); }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

/// Leaf that never receives gradients.
template <typename T>
Var<T> constant(Tensor<T> value);

/// Trainable leaf.
template <typename T>
Var<T> parameter(Tensor<T> value);

/// Builds an op node. The backward function is recorded only while
/// gradients are enabled and at least one input requires them.
template <typename T>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> inputs,
               std::function<void(Node<T>&)> backward_fn);

/// Seeds d(root)/d(root) = 1 (root must hold one value) and propagates
/// gradients to every reachable node that requires them.
template <typename T>
void backward(const Var<T>& root);

bool grad_enabled();

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

}  // namespace rmx::nn

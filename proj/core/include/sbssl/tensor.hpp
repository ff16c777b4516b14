#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "sbssl/errors.hpp"
#include "sbssl/rng.hpp"

namespace sbssl {

class Tensor;

namespace detail {

/// One record on the computation tape. The tape is the DAG of these nodes;
/// backward() replays it in reverse topological order.
struct TensorNode {
  std::vector<int> shape;
  std::shared_ptr<std::vector<double>> values;
  bool requires_grad = false;
  std::vector<double> grad;  // sized on first use, same length as values
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;  // accumulates node.grad into parents

  bool is_leaf() const { return !backward_fn; }
  std::size_t numel() const { return values ? values->size() : 0; }
};

void ensure_grad(TensorNode& node);

}  // namespace detail

/// True while ops should record tape nodes. Backward passes through ops run
/// with recording off are impossible; forward values are unaffected.
bool grad_enabled();

/// Scoped "forward only" switch for evaluation and finite differencing.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense row-major tensor of doubles with optional gradient tracking.
/// Copying is cheap (shared handle); values are immutable by convention once
/// a tensor participates in a graph, except for optimizer updates on leaves.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

  static Tensor zeros(const std::vector<int>& shape, bool requires_grad = false);
  static Tensor full(const std::vector<int>& shape, double value, bool requires_grad = false);
  static Tensor from_data(const std::vector<int>& shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Gaussian init, mean zero.
  static Tensor randn(const std::vector<int>& shape, Rng& rng, double stddev,
                      bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  int dim(int i) const { return shape()[static_cast<std::size_t>(i)]; }
  std::size_t numel() const;

  std::vector<double>& data();
  const std::vector<double>& data() const;
  double value() const;  // scalar tensors only
  double at(std::initializer_list<int> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  /// Gradient buffer, allocated as zeros on first access.
  std::vector<double>& grad();
  const std::vector<double>& grad() const { return const_cast<Tensor*>(this)->grad(); }
  bool has_grad() const;
  void zero_grad();

  /// Reverse-mode pass from a scalar. Leaf gradients accumulate across calls;
  /// intermediate gradients are reset per call.
  void backward() const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

/// Formats a shape as "[2,3,4]" for error messages.
std::string shape_str(const std::vector<int>& shape);

// Elementwise. The right operand may be a suffix of the left shape, in which
// case it broadcasts over the leading dimensions (bias adds, masks).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor absolute(const Tensor& a);
Tensor gelu(const Tensor& a);

/// [*, m, k] x [k, n], or batched [..., m, k] x [..., k, n] with equal
/// leading dimensions. Shape mismatches raise ShapeError naming both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Probability-simplex projection of each slice along the last dimension,
/// stabilized by max subtraction. Non-finite input raises NumericError.
Tensor softmax_lastdim(const Tensor& a);

/// Normalizes over the last dimension (biased variance), then applies the
/// elementwise affine gain/bias (both shaped [last_dim]).
Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon = 1e-5);

Tensor sum_all(const Tensor& a);
/// Mean over dimension 0. Summation is performed in value-sorted order, so
/// the result is exactly invariant to permutations of dimension 0.
Tensor mean_dim0(const Tensor& a);
/// Max over dimension 0 (ties feed gradient to the first occurrence).
Tensor max_dim0(const Tensor& a);

Tensor reshape(const Tensor& a, const std::vector<int>& shape);
Tensor permute(const Tensor& a, const std::vector<int>& perm);
Tensor transpose_last2(const Tensor& a);
Tensor concat(const Tensor& a, const Tensor& b, int dim);
Tensor slice(const Tensor& a, int dim, int start, int length);
/// [d0, ...] -> [copies, d0, ...]
Tensor tile_leading(const Tensor& a, int copies);
/// Stacks equally-shaped tensors along a new leading dimension.
Tensor stack_rows(const std::vector<Tensor>& rows);

/// Mean cross-entropy of logits [batch, classes] against integer labels.
Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& labels);

/// Free-function spelling of Tensor::backward().
void backward(const Tensor& loss);

}  // namespace sbssl

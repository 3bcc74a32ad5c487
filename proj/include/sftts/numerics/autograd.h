// Copyright 2026 The sftts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode differentiation over BasicTensor.
//
// Every op builds its output eagerly and, when gradient recording is enabled
// and at least one input requires a gradient, links a graph node holding the
// backward closure. Graphs are single-threaded; distinct graphs may share
// read-only leaves across threads as long as nobody calls Backward() on them
// concurrently.
//
// Ops are instantiated for float (training) and double (gradient checks).

#ifndef SFTTS_NUMERICS_AUTOGRAD_H_
#define SFTTS_NUMERICS_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sftts/numerics/tensor.h"

namespace sftts {

template <typename T>
struct Node {
  BasicTensor<T> value;
  BasicTensor<T> grad;  // empty until something flows in
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  // Adds `g` into this node's gradient, allocating on first use.
  void Accumulate(const BasicTensor<T>& g);
  // Returns the gradient buffer, zero-filled on first use.
  BasicTensor<T>& GradBuffer();
};

template <typename T>
class BasicVar {
 public:
  BasicVar() = default;
  explicit BasicVar(BasicTensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit BasicVar(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const BasicTensor<T>& value() const { return node_->value; }
  // Leaves only: optimizers and loaders write parameters in place.
  BasicTensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int64_t size() const { return node_->value.size(); }
  int64_t dim(int axis) const { return node_->value.dim(axis); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  const BasicTensor<T>& grad() const { return node_->grad; }
  BasicTensor<T>& mutable_grad() { return node_->GradBuffer(); }
  void ZeroGrad() { node_->grad = BasicTensor<T>(); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }
  T item() const { return node_->value.item(); }

 private:
  std::shared_ptr<Node<T>> node_;
};

using Var = BasicVar<float>;

// Gradient recording switch (thread-local).
bool GradEnabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Eager non-finite detection on every op output (thread-local, on by
// default). A violation throws NumericError naming the op.
bool FiniteChecksEnabled();
void SetFiniteChecks(bool on);

// Runs the backward pass from a single-element `loss`, seeding d(loss) = 1.
// Leaf gradients accumulate across calls until ZeroGrad().
template <typename T>
void Backward(const BasicVar<T>& loss);

template <typename T>
BasicVar<T> Constant(BasicTensor<T> value) {
  return BasicVar<T>(std::move(value), false);
}

// Returns a gradient-free alias of `x`'s current value.
template <typename T>
BasicVar<T> Detach(const BasicVar<T>& x);

// ---- element-wise (numpy broadcasting, trailing-axis aligned) ----
template <typename T> BasicVar<T> Add(const BasicVar<T>& a, const BasicVar<T>& b);
template <typename T> BasicVar<T> Sub(const BasicVar<T>& a, const BasicVar<T>& b);
template <typename T> BasicVar<T> Mul(const BasicVar<T>& a, const BasicVar<T>& b);
template <typename T> BasicVar<T> Div(const BasicVar<T>& a, const BasicVar<T>& b);
template <typename T> BasicVar<T> AddScalar(const BasicVar<T>& x, T c);
template <typename T> BasicVar<T> MulScalar(const BasicVar<T>& x, T c);
template <typename T> BasicVar<T> Relu(const BasicVar<T>& x);
template <typename T> BasicVar<T> Abs(const BasicVar<T>& x);
template <typename T> BasicVar<T> Square(const BasicVar<T>& x);
template <typename T> BasicVar<T> Rsqrt(const BasicVar<T>& x);

// ---- reductions ----
template <typename T> BasicVar<T> Sum(const BasicVar<T>& x);
template <typename T> BasicVar<T> Mean(const BasicVar<T>& x);
template <typename T> BasicVar<T> SumAxis(const BasicVar<T>& x, int axis, bool keepdim);
template <typename T> BasicVar<T> MeanAxis(const BasicVar<T>& x, int axis, bool keepdim);

// ---- shape ----
template <typename T> BasicVar<T> Reshape(const BasicVar<T>& x, Shape shape);
template <typename T> BasicVar<T> Transpose(const BasicVar<T>& x);  // 2-D
template <typename T>
BasicVar<T> Concat(const std::vector<BasicVar<T>>& xs, int axis);
template <typename T>
BasicVar<T> Slice(const BasicVar<T>& x, int axis, int64_t start, int64_t length);

// ---- linear algebra ----
// (m x k) . (k x n)
template <typename T> BasicVar<T> MatMul(const BasicVar<T>& a, const BasicVar<T>& b);
// x (m x in) . w (in x out) + b (out); `b` may be undefined.
template <typename T>
BasicVar<T> Linear(const BasicVar<T>& x, const BasicVar<T>& w, const BasicVar<T>& b);

// ---- normalisation / probability ----
template <typename T> BasicVar<T> Softmax(const BasicVar<T>& x, int axis);
template <typename T> BasicVar<T> LogSoftmax(const BasicVar<T>& x, int axis);
// Normalises over the last axis; gamma/beta (last-axis extent) may be undefined.
template <typename T>
BasicVar<T> LayerNorm(const BasicVar<T>& x, const BasicVar<T>& gamma,
                      const BasicVar<T>& beta, T eps = T(1e-5));
// Mean negative log-likelihood of `targets` under row-wise softmax(logits).
template <typename T>
BasicVar<T> CrossEntropy(const BasicVar<T>& logits, std::span<const int> targets);

// ---- lookup ----
// table (V x D), ids in [0, V) -> (N x D)
template <typename T>
BasicVar<T> Embedding(const BasicVar<T>& table, std::span<const int> ids);

// ---- attention ----
// Boolean (Tq x Tk) mask, row-major, true = may attend.
struct AttentionMask {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<char> allowed;

  static AttentionMask Causal(int64_t n);
  // Prefix-LM: the first `prefix` positions attend among themselves; later
  // positions attend to the prefix and causally to each other.
  static AttentionMask PrefixCausal(int64_t prefix, int64_t n);
};

// Multi-head scaled dot-product attention. q (Tq x D), k/v (Tk x D); D is
// split into `heads` contiguous slices.
template <typename T>
BasicVar<T> Attention(const BasicVar<T>& q, const BasicVar<T>& k, const BasicVar<T>& v,
                      int heads, const AttentionMask* mask = nullptr);
// Attention probabilities (heads x Tq x Tk) for inspection; no graph.
template <typename T>
BasicTensor<T> AttentionProbs(const BasicTensor<T>& q, const BasicTensor<T>& k, int heads,
                              const AttentionMask* mask = nullptr);

// ---- convolution (direct, via im2col) ----
// Time-major 1-D: x (T x Cin), w (Cout x Cin x K), b (Cout) or undefined.
// Stride 1, same padding (left = (K-1)/2).
template <typename T>
BasicVar<T> Conv1d(const BasicVar<T>& x, const BasicVar<T>& w, const BasicVar<T>& b);
// x (Cin x H x W), w (Cout x Cin x kh x kw), b (Cout) or undefined.
template <typename T>
BasicVar<T> Conv2d(const BasicVar<T>& x, const BasicVar<T>& w, const BasicVar<T>& b,
                   int stride, int padding);

// Output extent of Conv2d along one axis.
inline int64_t Conv2dOutExtent(int64_t in, int64_t kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

}  // namespace sftts

#endif  // SFTTS_NUMERICS_AUTOGRAD_H_

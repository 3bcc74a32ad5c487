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

#include "sftts/numerics/autograd.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace sftts {

namespace {

thread_local bool g_grad_enabled = true;
thread_local bool g_finite_checks = true;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
MatMap<T> AsMat(BasicTensor<T>& t, int64_t rows, int64_t cols) {
  return MatMap<T>(t.data(), rows, cols);
}
template <typename T>
ConstMatMap<T> AsMat(const BasicTensor<T>& t, int64_t rows, int64_t cols) {
  return ConstMatMap<T>(t.data(), rows, cols);
}

template <typename T>
void CheckFinite(const BasicTensor<T>& t, const char* op) {
  if (!g_finite_checks) return;
  for (T v : t.values()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("op ") + op + ": non-finite value in output of shape " +
                         ShapeString(t.shape()));
    }
  }
}

template <typename T>
BasicVar<T> MakeResult(BasicTensor<T> value, const char* op,
                       std::initializer_list<const BasicVar<T>*> parents,
                       std::function<void(Node<T>&)> backward) {
  CheckFinite(value, op);
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  if (g_grad_enabled) {
    bool any = false;
    for (const BasicVar<T>* p : parents) {
      if (p->defined() && p->requires_grad()) any = true;
    }
    if (any) {
      node->requires_grad = true;
      for (const BasicVar<T>* p : parents) {
        node->parents.push_back(p->defined() ? p->node() : nullptr);
      }
      node->backward = std::move(backward);
    }
  }
  return BasicVar<T>(std::move(node));
}

template <typename T>
BasicVar<T> MakeResultList(BasicTensor<T> value, const char* op,
                           const std::vector<BasicVar<T>>& parents,
                           std::function<void(Node<T>&)> backward) {
  CheckFinite(value, op);
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = op;
  if (g_grad_enabled) {
    bool any = std::any_of(parents.begin(), parents.end(),
                           [](const BasicVar<T>& p) { return p.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      for (const auto& p : parents) node->parents.push_back(p.node());
      node->backward = std::move(backward);
    }
  }
  return BasicVar<T>(std::move(node));
}

// True when parent `i` of `n` wants a gradient.
template <typename T>
bool Wants(const Node<T>& n, size_t i) {
  return i < n.parents.size() && n.parents[i] && n.parents[i]->requires_grad;
}

void Require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw ShapeError(std::string(op) + ": " + what);
}

std::string TwoShapes(const Shape& a, const Shape& b) {
  return ShapeString(a) + " vs " + ShapeString(b);
}

int NormalizeAxis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  Require(axis >= 0 && axis < rank, op, "axis out of range for rank " + std::to_string(rank));
  return axis;
}

// Splits a shape around `axis` into (outer, n, inner).
struct AxisSplit {
  int64_t outer = 1;
  int64_t n = 1;
  int64_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// ---- broadcasting ----

Shape BroadcastShape(const Shape& a, const Shape& b, const char* op) {
  const size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (size_t i = 0; i < rank; ++i) {
    const int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + TwoShapes(a, b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

std::vector<int64_t> BroadcastStrides(const Shape& in, const Shape& out) {
  std::vector<int64_t> strides(out.size(), 0);
  int64_t stride = 1;
  for (size_t k = 0; k < in.size(); ++k) {
    const size_t i = in.size() - 1 - k;
    const size_t o = out.size() - 1 - k;
    strides[o] = in[i] == 1 ? 0 : stride;
    stride *= in[i];
  }
  return strides;
}

// Calls f(out_index, a_index, b_index) for every element of `out`.
template <typename F>
void ForEachBroadcast(const Shape& out, const std::vector<int64_t>& sa,
                      const std::vector<int64_t>& sb, F&& f) {
  const int rank = static_cast<int>(out.size());
  const int64_t total = NumElements(out);
  if (total == 0) return;
  const int64_t last = out[rank - 1];
  const int64_t la = sa[rank - 1];
  const int64_t lb = sb[rank - 1];
  std::vector<int64_t> idx(rank, 0);
  int64_t ia = 0;
  int64_t ib = 0;
  for (int64_t o = 0; o < total; o += last) {
    for (int64_t j = 0; j < last; ++j) f(o + j, ia + j * la, ib + j * lb);
    // advance the outer multi-index
    for (int d = rank - 2; d >= 0; --d) {
      ++idx[d];
      ia += sa[d];
      ib += sb[d];
      if (idx[d] < out[d]) break;
      ia -= sa[d] * out[d];
      ib -= sb[d] * out[d];
      idx[d] = 0;
    }
  }
}

template <typename T, typename Fwd, typename Bwd>
BasicVar<T> Binary(const BasicVar<T>& a, const BasicVar<T>& b, const char* op, Fwd fwd,
                   Bwd bwd) {
  const Shape out_shape = BroadcastShape(a.shape(), b.shape(), op);
  const auto sa = BroadcastStrides(a.shape(), out_shape);
  const auto sb = BroadcastStrides(b.shape(), out_shape);
  BasicTensor<T> out(out_shape);
  const T* pa = a.value().data();
  const T* pb = b.value().data();
  T* po = out.data();
  if (a.shape() == b.shape()) {
    for (int64_t i = 0; i < out.size(); ++i) po[i] = fwd(pa[i], pb[i]);
  } else {
    ForEachBroadcast(out_shape, sa, sb,
                     [&](int64_t o, int64_t i, int64_t j) { po[o] = fwd(pa[i], pb[j]); });
  }
  return MakeResult<T>(std::move(out), op, {&a, &b},
                       [out_shape, sa, sb, bwd](Node<T>& n) {
                         const Node<T>& na = *n.parents[0];
                         const Node<T>& nb = *n.parents[1];
                         const bool want_a = Wants(n, 0);
                         const bool want_b = Wants(n, 1);
                         T* ga = want_a ? n.parents[0]->GradBuffer().data() : nullptr;
                         T* gb = want_b ? n.parents[1]->GradBuffer().data() : nullptr;
                         const T* g = n.grad.data();
                         const T* va = na.value.data();
                         const T* vb = nb.value.data();
                         ForEachBroadcast(out_shape, sa, sb,
                                          [&](int64_t o, int64_t i, int64_t j) {
                                            T da, db;
                                            bwd(g[o], va[i], vb[j], da, db);
                                            if (ga) ga[i] += da;
                                            if (gb) gb[j] += db;
                                          });
                       });
}

template <typename T, typename Fwd, typename Bwd>
BasicVar<T> Unary(const BasicVar<T>& x, const char* op, Fwd fwd, Bwd bwd) {
  BasicTensor<T> out(x.shape());
  const T* px = x.value().data();
  for (int64_t i = 0; i < out.size(); ++i) out[i] = fwd(px[i]);
  return MakeResult<T>(std::move(out), op, {&x}, [bwd](Node<T>& n) {
    auto& gx = n.parents[0]->GradBuffer();
    const T* vx = n.parents[0]->value.data();
    const T* vy = n.value.data();
    const T* g = n.grad.data();
    for (int64_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * bwd(vx[i], vy[i]);
  });
}

}  // namespace

// ---- Node ----

template <typename T>
void Node<T>::Accumulate(const BasicTensor<T>& g) {
  if (grad.empty()) {
    grad = g;
    return;
  }
  for (int64_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

template <typename T>
BasicTensor<T>& Node<T>::GradBuffer() {
  if (grad.empty()) grad = BasicTensor<T>(value.shape());
  return grad;
}

// ---- switches ----

bool GradEnabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool FiniteChecksEnabled() { return g_finite_checks; }
void SetFiniteChecks(bool on) { g_finite_checks = on; }

// ---- backward ----

template <typename T>
void Backward(const BasicVar<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: loss must be a single-element tensor, got " +
                     (loss.defined() ? ShapeString(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; each node is emitted once.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  Node<T>* root = loss.node().get();
  root->Accumulate(BasicTensor<T>(root->value.shape(), T(1)));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

template <typename T>
BasicVar<T> Detach(const BasicVar<T>& x) {
  return BasicVar<T>(x.value(), false);
}

// ---- element-wise ----

template <typename T>
BasicVar<T> Add(const BasicVar<T>& a, const BasicVar<T>& b) {
  return Binary<T>(
      a, b, "add", [](T x, T y) { return x + y; },
      [](T g, T, T, T& da, T& db) {
        da = g;
        db = g;
      });
}

template <typename T>
BasicVar<T> Sub(const BasicVar<T>& a, const BasicVar<T>& b) {
  return Binary<T>(
      a, b, "sub", [](T x, T y) { return x - y; },
      [](T g, T, T, T& da, T& db) {
        da = g;
        db = -g;
      });
}

template <typename T>
BasicVar<T> Mul(const BasicVar<T>& a, const BasicVar<T>& b) {
  return Binary<T>(
      a, b, "mul", [](T x, T y) { return x * y; },
      [](T g, T x, T y, T& da, T& db) {
        da = g * y;
        db = g * x;
      });
}

template <typename T>
BasicVar<T> Div(const BasicVar<T>& a, const BasicVar<T>& b) {
  return Binary<T>(
      a, b, "div", [](T x, T y) { return x / y; },
      [](T g, T x, T y, T& da, T& db) {
        da = g / y;
        db = -g * x / (y * y);
      });
}

template <typename T>
BasicVar<T> AddScalar(const BasicVar<T>& x, T c) {
  return Unary<T>(
      x, "add_scalar", [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <typename T>
BasicVar<T> MulScalar(const BasicVar<T>& x, T c) {
  return Unary<T>(
      x, "mul_scalar", [c](T v) { return v * c; }, [c](T, T) { return c; });
}

template <typename T>
BasicVar<T> Relu(const BasicVar<T>& x) {
  return Unary<T>(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
BasicVar<T> Abs(const BasicVar<T>& x) {
  return Unary<T>(
      x, "abs", [](T v) { return std::abs(v); },
      [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
BasicVar<T> Square(const BasicVar<T>& x) {
  return Unary<T>(
      x, "square", [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
BasicVar<T> Rsqrt(const BasicVar<T>& x) {
  for (T v : x.value().values()) {
    if (!(v > T(0))) throw NumericError("op rsqrt: non-positive input");
  }
  return Unary<T>(
      x, "rsqrt", [](T v) { return T(1) / std::sqrt(v); },
      [](T, T y) { return T(-0.5) * y * y * y; });
}

// ---- reductions ----

template <typename T>
BasicVar<T> Sum(const BasicVar<T>& x) {
  T acc = T(0);
  for (T v : x.value().values()) acc += v;
  return MakeResult<T>(BasicTensor<T>::Scalar(acc), "sum", {&x}, [](Node<T>& n) {
    auto& gx = n.parents[0]->GradBuffer();
    const T g = n.grad[0];
    for (int64_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

template <typename T>
BasicVar<T> Mean(const BasicVar<T>& x) {
  Require(x.size() > 0, "mean", "empty input");
  return MulScalar(Sum(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
BasicVar<T> SumAxis(const BasicVar<T>& x, int axis, bool keepdim) {
  axis = NormalizeAxis(axis, x.value().rank(), "sum_axis");
  const AxisSplit s = SplitAt(x.shape(), axis);
  Shape out_shape = x.shape();
  if (keepdim) {
    out_shape[axis] = 1;
  } else {
    out_shape.erase(out_shape.begin() + axis);
    if (out_shape.empty()) out_shape = {1};
  }
  BasicTensor<T> out(out_shape);
  const T* px = x.value().data();
  for (int64_t o = 0; o < s.outer; ++o)
    for (int64_t j = 0; j < s.n; ++j)
      for (int64_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += px[(o * s.n + j) * s.inner + i];
  return MakeResult<T>(std::move(out), "sum_axis", {&x}, [s](Node<T>& n) {
    T* gx = n.parents[0]->GradBuffer().data();
    const T* g = n.grad.data();
    for (int64_t o = 0; o < s.outer; ++o)
      for (int64_t j = 0; j < s.n; ++j)
        for (int64_t i = 0; i < s.inner; ++i) gx[(o * s.n + j) * s.inner + i] += g[o * s.inner + i];
  });
}

template <typename T>
BasicVar<T> MeanAxis(const BasicVar<T>& x, int axis, bool keepdim) {
  const int a = NormalizeAxis(axis, x.value().rank(), "mean_axis");
  Require(x.shape()[a] > 0, "mean_axis", "empty axis");
  return MulScalar(SumAxis(x, a, keepdim), T(1) / static_cast<T>(x.shape()[a]));
}

// ---- shape ----

template <typename T>
BasicVar<T> Reshape(const BasicVar<T>& x, Shape shape) {
  if (NumElements(shape) != x.size()) {
    throw ShapeError("reshape: " + TwoShapes(x.shape(), shape));
  }
  return MakeResult<T>(x.value().Reshaped(std::move(shape)), "reshape", {&x}, [](Node<T>& n) {
    auto& gx = n.parents[0]->GradBuffer();
    for (int64_t i = 0; i < gx.size(); ++i) gx[i] += n.grad[i];
  });
}

template <typename T>
BasicVar<T> Transpose(const BasicVar<T>& x) {
  Require(x.value().rank() == 2, "transpose", "expects rank 2, got " + ShapeString(x.shape()));
  const int64_t r = x.dim(0), c = x.dim(1);
  BasicTensor<T> out({c, r});
  AsMat(out, c, r) = AsMat(x.value(), r, c).transpose();
  return MakeResult<T>(std::move(out), "transpose", {&x}, [r, c](Node<T>& n) {
    AsMat(n.parents[0]->GradBuffer(), r, c) += AsMat(n.grad, c, r).transpose();
  });
}

template <typename T>
BasicVar<T> Concat(const std::vector<BasicVar<T>>& xs, int axis) {
  Require(!xs.empty(), "concat", "no inputs");
  const int rank = xs[0].value().rank();
  axis = NormalizeAxis(axis, rank, "concat");
  Shape out_shape = xs[0].shape();
  out_shape[axis] = 0;
  const Shape ref = out_shape;
  std::vector<int64_t> extents;
  for (const auto& x : xs) {
    Shape probe = x.shape();
    Require(static_cast<int>(probe.size()) == rank, "concat",
            "rank mismatch " + TwoShapes(xs[0].shape(), probe));
    probe[axis] = 0;
    Require(probe == ref, "concat", "extent mismatch " + TwoShapes(xs[0].shape(), x.shape()));
    extents.push_back(x.shape()[axis]);
    out_shape[axis] += x.shape()[axis];
  }
  const AxisSplit so = SplitAt(out_shape, axis);
  BasicTensor<T> out(out_shape);
  int64_t offset = 0;
  for (size_t k = 0; k < xs.size(); ++k) {
    const T* px = xs[k].value().data();
    const int64_t nk = extents[k];
    for (int64_t o = 0; o < so.outer; ++o)
      std::copy(px + o * nk * so.inner, px + (o + 1) * nk * so.inner,
                out.data() + (o * so.n + offset) * so.inner);
    offset += nk;
  }
  return MakeResultList<T>(std::move(out), "concat", xs, [so, extents](Node<T>& n) {
    int64_t offset = 0;
    for (size_t k = 0; k < extents.size(); ++k) {
      const int64_t nk = extents[k];
      if (Wants(n, k)) {
        T* gx = n.parents[k]->GradBuffer().data();
        for (int64_t o = 0; o < so.outer; ++o)
          for (int64_t e = 0; e < nk * so.inner; ++e)
            gx[o * nk * so.inner + e] += n.grad[(o * so.n + offset) * so.inner + e];
      }
      offset += nk;
    }
  });
}

template <typename T>
BasicVar<T> Slice(const BasicVar<T>& x, int axis, int64_t start, int64_t length) {
  axis = NormalizeAxis(axis, x.value().rank(), "slice");
  const AxisSplit s = SplitAt(x.shape(), axis);
  Require(start >= 0 && length >= 0 && start + length <= s.n, "slice",
          "range [" + std::to_string(start) + ", " + std::to_string(start + length) +
              ") outside extent " + std::to_string(s.n) + " of " + ShapeString(x.shape()));
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  BasicTensor<T> out(out_shape);
  const T* px = x.value().data();
  for (int64_t o = 0; o < s.outer; ++o)
    std::copy(px + (o * s.n + start) * s.inner, px + (o * s.n + start + length) * s.inner,
              out.data() + o * length * s.inner);
  return MakeResult<T>(std::move(out), "slice", {&x}, [s, start, length](Node<T>& n) {
    T* gx = n.parents[0]->GradBuffer().data();
    for (int64_t o = 0; o < s.outer; ++o)
      for (int64_t e = 0; e < length * s.inner; ++e)
        gx[(o * s.n + start) * s.inner + e] += n.grad[o * length * s.inner + e];
  });
}

// ---- linear algebra ----

template <typename T>
BasicVar<T> MatMul(const BasicVar<T>& a, const BasicVar<T>& b) {
  Require(a.value().rank() == 2 && b.value().rank() == 2 && a.dim(1) == b.dim(0), "matmul",
          "inner extents differ " + TwoShapes(a.shape(), b.shape()));
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  BasicTensor<T> out({m, n});
  AsMat(out, m, n).noalias() = AsMat(a.value(), m, k) * AsMat(b.value(), k, n);
  return MakeResult<T>(std::move(out), "matmul", {&a, &b}, [m, k, n](Node<T>& nd) {
    const auto g = AsMat(nd.grad, m, n);
    if (Wants(nd, 0))
      AsMat(nd.parents[0]->GradBuffer(), m, k).noalias() +=
          g * AsMat(nd.parents[1]->value, k, n).transpose();
    if (Wants(nd, 1))
      AsMat(nd.parents[1]->GradBuffer(), k, n).noalias() +=
          AsMat(nd.parents[0]->value, m, k).transpose() * g;
  });
}

template <typename T>
BasicVar<T> Linear(const BasicVar<T>& x, const BasicVar<T>& w, const BasicVar<T>& b) {
  Require(x.value().rank() == 2 && w.value().rank() == 2 && x.dim(1) == w.dim(0), "linear",
          "input " + TwoShapes(x.shape(), w.shape()));
  const int64_t m = x.dim(0), in = x.dim(1), out_dim = w.dim(1);
  if (b.defined()) {
    Require(b.size() == out_dim, "linear", "bias " + TwoShapes(b.shape(), w.shape()));
  }
  BasicTensor<T> out({m, out_dim});
  auto om = AsMat(out, m, out_dim);
  om.noalias() = AsMat(x.value(), m, in) * AsMat(w.value(), in, out_dim);
  if (b.defined()) om.rowwise() += AsMat(b.value(), 1, out_dim).row(0);
  return MakeResult<T>(std::move(out), "linear", {&x, &w, &b}, [m, in, out_dim](Node<T>& nd) {
    const auto g = AsMat(nd.grad, m, out_dim);
    if (Wants(nd, 0))
      AsMat(nd.parents[0]->GradBuffer(), m, in).noalias() +=
          g * AsMat(nd.parents[1]->value, in, out_dim).transpose();
    if (Wants(nd, 1))
      AsMat(nd.parents[1]->GradBuffer(), in, out_dim).noalias() +=
          AsMat(nd.parents[0]->value, m, in).transpose() * g;
    if (Wants(nd, 2)) AsMat(nd.parents[2]->GradBuffer(), 1, out_dim) += g.colwise().sum();
  });
}

// ---- normalisation / probability ----

template <typename T>
BasicVar<T> Softmax(const BasicVar<T>& x, int axis) {
  axis = NormalizeAxis(axis, x.value().rank(), "softmax");
  const AxisSplit s = SplitAt(x.shape(), axis);
  BasicTensor<T> out(x.shape());
  const T* px = x.value().data();
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t i = 0; i < s.inner; ++i) {
      const int64_t base = o * s.n * s.inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (int64_t j = 0; j < s.n; ++j) mx = std::max(mx, px[base + j * s.inner]);
      T z = T(0);
      for (int64_t j = 0; j < s.n; ++j) {
        const T e = std::exp(px[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        z += e;
      }
      for (int64_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= z;
    }
  }
  return MakeResult<T>(std::move(out), "softmax", {&x}, [s](Node<T>& n) {
    T* gx = n.parents[0]->GradBuffer().data();
    const T* y = n.value.data();
    const T* g = n.grad.data();
    for (int64_t o = 0; o < s.outer; ++o) {
      for (int64_t i = 0; i < s.inner; ++i) {
        const int64_t base = o * s.n * s.inner + i;
        T dot = T(0);
        for (int64_t j = 0; j < s.n; ++j) dot += g[base + j * s.inner] * y[base + j * s.inner];
        for (int64_t j = 0; j < s.n; ++j) {
          const int64_t e = base + j * s.inner;
          gx[e] += y[e] * (g[e] - dot);
        }
      }
    }
  });
}

template <typename T>
BasicVar<T> LogSoftmax(const BasicVar<T>& x, int axis) {
  axis = NormalizeAxis(axis, x.value().rank(), "log_softmax");
  const AxisSplit s = SplitAt(x.shape(), axis);
  BasicTensor<T> out(x.shape());
  const T* px = x.value().data();
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t i = 0; i < s.inner; ++i) {
      const int64_t base = o * s.n * s.inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (int64_t j = 0; j < s.n; ++j) mx = std::max(mx, px[base + j * s.inner]);
      T z = T(0);
      for (int64_t j = 0; j < s.n; ++j) z += std::exp(px[base + j * s.inner] - mx);
      const T lse = mx + std::log(z);
      for (int64_t j = 0; j < s.n; ++j) out[base + j * s.inner] = px[base + j * s.inner] - lse;
    }
  }
  return MakeResult<T>(std::move(out), "log_softmax", {&x}, [s](Node<T>& n) {
    T* gx = n.parents[0]->GradBuffer().data();
    const T* y = n.value.data();
    const T* g = n.grad.data();
    for (int64_t o = 0; o < s.outer; ++o) {
      for (int64_t i = 0; i < s.inner; ++i) {
        const int64_t base = o * s.n * s.inner + i;
        T gsum = T(0);
        for (int64_t j = 0; j < s.n; ++j) gsum += g[base + j * s.inner];
        for (int64_t j = 0; j < s.n; ++j) {
          const int64_t e = base + j * s.inner;
          gx[e] += g[e] - std::exp(y[e]) * gsum;
        }
      }
    }
  });
}

template <typename T>
BasicVar<T> LayerNorm(const BasicVar<T>& x, const BasicVar<T>& gamma, const BasicVar<T>& beta,
                      T eps) {
  const int64_t d = x.dim(-1);
  const int64_t rows = x.size() / std::max<int64_t>(d, 1);
  if (gamma.defined()) {
    Require(gamma.size() == d, "layer_norm", "gamma " + TwoShapes(gamma.shape(), x.shape()));
  }
  if (beta.defined()) {
    Require(beta.size() == d, "layer_norm", "beta " + TwoShapes(beta.shape(), x.shape()));
  }
  BasicTensor<T> out(x.shape());
  BasicTensor<T> xhat(x.shape());
  std::vector<T> rstd(static_cast<size_t>(rows));
  const T* px = x.value().data();
  const T* pg = gamma.defined() ? gamma.value().data() : nullptr;
  const T* pb = beta.defined() ? beta.value().data() : nullptr;
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = px + r * d;
    T mean = T(0);
    for (int64_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<T>(d);
    T var = T(0);
    for (int64_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    for (int64_t j = 0; j < d; ++j) {
      const T h = (row[j] - mean) * rs;
      xhat[r * d + j] = h;
      out[r * d + j] = h * (pg ? pg[j] : T(1)) + (pb ? pb[j] : T(0));
    }
  }
  return MakeResult<T>(
      std::move(out), "layer_norm", {&x, &gamma, &beta},
      [d, rows, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& n) {
        const T* g = n.grad.data();
        const bool has_gamma = n.parents[1] != nullptr;
        const T* pg = has_gamma ? n.parents[1]->value.data() : nullptr;
        if (Wants(n, 0)) {
          T* gx = n.parents[0]->GradBuffer().data();
          std::vector<T> dh(static_cast<size_t>(d));
          for (int64_t r = 0; r < rows; ++r) {
            T mean_dh = T(0), mean_dh_h = T(0);
            for (int64_t j = 0; j < d; ++j) {
              dh[j] = g[r * d + j] * (pg ? pg[j] : T(1));
              mean_dh += dh[j];
              mean_dh_h += dh[j] * xhat[r * d + j];
            }
            mean_dh /= static_cast<T>(d);
            mean_dh_h /= static_cast<T>(d);
            for (int64_t j = 0; j < d; ++j)
              gx[r * d + j] += rstd[r] * (dh[j] - mean_dh - xhat[r * d + j] * mean_dh_h);
          }
        }
        if (Wants(n, 1)) {
          T* gg = n.parents[1]->GradBuffer().data();
          for (int64_t r = 0; r < rows; ++r)
            for (int64_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * xhat[r * d + j];
        }
        if (Wants(n, 2)) {
          T* gb = n.parents[2]->GradBuffer().data();
          for (int64_t r = 0; r < rows; ++r)
            for (int64_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
        }
      });
}

template <typename T>
BasicVar<T> CrossEntropy(const BasicVar<T>& logits, std::span<const int> targets) {
  Require(logits.value().rank() == 2, "cross_entropy",
          "logits must be rank 2, got " + ShapeString(logits.shape()));
  const int64_t n = logits.dim(0), k = logits.dim(1);
  Require(static_cast<int64_t>(targets.size()) == n, "cross_entropy",
          "logits " + ShapeString(logits.shape()) + " vs " + std::to_string(targets.size()) +
              " targets");
  Require(n > 0, "cross_entropy", "no rows");
  std::vector<int> tgt(targets.begin(), targets.end());
  for (int t : tgt) {
    if (t < 0 || t >= k) {
      throw ShapeError("cross_entropy: target " + std::to_string(t) + " outside [0, " +
                       std::to_string(k) + ")");
    }
  }
  BasicTensor<T> probs({n, k});
  T loss = T(0);
  const T* px = logits.value().data();
  for (int64_t r = 0; r < n; ++r) {
    const T* row = px + r * k;
    const T mx = *std::max_element(row, row + k);
    T z = T(0);
    for (int64_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    for (int64_t j = 0; j < k; ++j) probs[r * k + j] = std::exp(row[j] - mx) / z;
    loss -= row[tgt[r]] - mx - std::log(z);
  }
  loss /= static_cast<T>(n);
  return MakeResult<T>(BasicTensor<T>::Scalar(loss), "cross_entropy", {&logits},
                       [n, k, tgt = std::move(tgt), probs = std::move(probs)](Node<T>& nd) {
                         T* gx = nd.parents[0]->GradBuffer().data();
                         const T g = nd.grad[0] / static_cast<T>(n);
                         for (int64_t r = 0; r < n; ++r) {
                           for (int64_t j = 0; j < k; ++j) {
                             const T onehot = j == tgt[r] ? T(1) : T(0);
                             gx[r * k + j] += g * (probs[r * k + j] - onehot);
                           }
                         }
                       });
}

// ---- lookup ----

template <typename T>
BasicVar<T> Embedding(const BasicVar<T>& table, std::span<const int> ids) {
  Require(table.value().rank() == 2, "embedding",
          "table must be rank 2, got " + ShapeString(table.shape()));
  const int64_t v = table.dim(0), d = table.dim(1);
  std::vector<int> idv(ids.begin(), ids.end());
  const int64_t n = static_cast<int64_t>(idv.size());
  BasicTensor<T> out({n, d});
  for (int64_t r = 0; r < n; ++r) {
    if (idv[r] < 0 || idv[r] >= v) {
      throw ShapeError("embedding: id " + std::to_string(idv[r]) + " outside table of " +
                       std::to_string(v) + " rows");
    }
    std::copy(table.value().data() + idv[r] * d, table.value().data() + (idv[r] + 1) * d,
              out.data() + r * d);
  }
  return MakeResult<T>(std::move(out), "embedding", {&table}, [d, idv = std::move(idv)](Node<T>& nd) {
    T* gt = nd.parents[0]->GradBuffer().data();
    for (size_t r = 0; r < idv.size(); ++r)
      for (int64_t j = 0; j < d; ++j) gt[idv[r] * d + j] += nd.grad[r * d + j];
  });
}

// ---- attention ----

AttentionMask AttentionMask::Causal(int64_t n) { return PrefixCausal(0, n); }

AttentionMask AttentionMask::PrefixCausal(int64_t prefix, int64_t n) {
  AttentionMask m;
  m.rows = n;
  m.cols = n;
  m.allowed.assign(static_cast<size_t>(n * n), 0);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j)
      m.allowed[i * n + j] = (j <= i || (i < prefix && j < prefix)) ? 1 : 0;
  return m;
}

namespace {

template <typename T>
void AttentionForward(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v,
                      int heads, const AttentionMask* mask, BasicTensor<T>* out,
                      BasicTensor<T>* probs) {
  const int64_t tq = q.dim(0), tk = k.dim(0), d = q.dim(1);
  const int64_t dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  RowMat<T> qh(tq, dh), kh(tk, dh), s(tq, tk);
  for (int h = 0; h < heads; ++h) {
    qh = AsMat(q, tq, d).middleCols(h * dh, dh);
    kh = AsMat(k, tk, d).middleCols(h * dh, dh);
    s.noalias() = qh * kh.transpose();
    s *= scale;
    for (int64_t i = 0; i < tq; ++i) {
      T mx = -std::numeric_limits<T>::infinity();
      for (int64_t j = 0; j < tk; ++j) {
        if (mask && !mask->allowed[i * tk + j]) continue;
        mx = std::max(mx, s(i, j));
      }
      if (!std::isfinite(mx)) {
        throw ShapeError("attention: query row " + std::to_string(i) + " has no allowed key");
      }
      T z = T(0);
      for (int64_t j = 0; j < tk; ++j) {
        const T e = (mask && !mask->allowed[i * tk + j]) ? T(0) : std::exp(s(i, j) - mx);
        s(i, j) = e;
        z += e;
      }
      s.row(i) /= z;
    }
    if (probs) {
      std::copy(s.data(), s.data() + tq * tk, probs->data() + h * tq * tk);
    }
    if (out) {
      AsMat(*out, tq, d).middleCols(h * dh, dh).noalias() =
          s * AsMat(v, tk, d).middleCols(h * dh, dh);
    }
  }
}

template <typename T>
void CheckAttentionShapes(const Shape& q, const Shape& k, const Shape& v, int heads,
                          const AttentionMask* mask) {
  Require(q.size() == 2 && k.size() == 2 && v.size() == 2, "attention", "inputs must be rank 2");
  Require(q[1] == k[1] && k[1] == v[1], "attention",
          "model dims differ: q " + ShapeString(q) + ", k " + ShapeString(k) + ", v " +
              ShapeString(v));
  Require(k[0] == v[0], "attention", "key/value lengths " + TwoShapes(k, v));
  Require(heads > 0 && q[1] % heads == 0, "attention",
          "dim " + std::to_string(q[1]) + " not divisible by " + std::to_string(heads) + " heads");
  if (mask) {
    Require(mask->rows == q[0] && mask->cols == k[0], "attention",
            "mask " + std::to_string(mask->rows) + "x" + std::to_string(mask->cols) +
                " vs scores " + std::to_string(q[0]) + "x" + std::to_string(k[0]));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> AttentionProbs(const BasicTensor<T>& q, const BasicTensor<T>& k, int heads,
                              const AttentionMask* mask) {
  CheckAttentionShapes<T>(q.shape(), k.shape(), k.shape(), heads, mask);
  BasicTensor<T> probs({heads, q.dim(0), k.dim(0)});
  AttentionForward<T>(q, k, k, heads, mask, nullptr, &probs);
  return probs;
}

template <typename T>
BasicVar<T> Attention(const BasicVar<T>& q, const BasicVar<T>& k, const BasicVar<T>& v, int heads,
                      const AttentionMask* mask) {
  CheckAttentionShapes<T>(q.shape(), k.shape(), v.shape(), heads, mask);
  const int64_t tq = q.dim(0), tk = k.dim(0), d = q.dim(1);
  BasicTensor<T> out({tq, d});
  BasicTensor<T> probs({heads, tq, tk});
  AttentionForward<T>(q.value(), k.value(), v.value(), heads, mask, &out, &probs);
  return MakeResult<T>(
      std::move(out), "attention", {&q, &k, &v},
      [tq, tk, d, heads, probs = std::move(probs)](Node<T>& n) {
        const int64_t dh = d / heads;
        const T scale = T(1) / std::sqrt(static_cast<T>(dh));
        const auto g = AsMat(n.grad, tq, d);
        const auto qv = AsMat(n.parents[0]->value, tq, d);
        const auto kv = AsMat(n.parents[1]->value, tk, d);
        const auto vv = AsMat(n.parents[2]->value, tk, d);
        RowMat<T> dp(tq, tk), ds(tq, tk);
        for (int h = 0; h < heads; ++h) {
          const auto p = ConstMatMap<T>(probs.data() + h * tq * tk, tq, tk);
          const auto gh = g.middleCols(h * dh, dh);
          if (Wants(n, 2))
            AsMat(n.parents[2]->GradBuffer(), tk, d).middleCols(h * dh, dh).noalias() +=
                p.transpose() * gh;
          if (!Wants(n, 0) && !Wants(n, 1)) continue;
          dp.noalias() = gh * vv.middleCols(h * dh, dh).transpose();
          for (int64_t i = 0; i < tq; ++i) {
            const T dot = dp.row(i).dot(p.row(i));
            ds.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
          }
          ds *= scale;
          if (Wants(n, 0))
            AsMat(n.parents[0]->GradBuffer(), tq, d).middleCols(h * dh, dh).noalias() +=
                ds * kv.middleCols(h * dh, dh);
          if (Wants(n, 1))
            AsMat(n.parents[1]->GradBuffer(), tk, d).middleCols(h * dh, dh).noalias() +=
                ds.transpose() * qv.middleCols(h * dh, dh);
        }
      });
}

// ---- convolution ----

template <typename T>
BasicVar<T> Conv1d(const BasicVar<T>& x, const BasicVar<T>& w, const BasicVar<T>& b) {
  Require(x.value().rank() == 2 && w.value().rank() == 3 && x.dim(1) == w.dim(1), "conv1d",
          "input " + TwoShapes(x.shape(), w.shape()) + " (want T x Cin and Cout x Cin x K)");
  const int64_t t = x.dim(0), cin = x.dim(1), cout = w.dim(0), kk = w.dim(2);
  if (b.defined()) Require(b.size() == cout, "conv1d", "bias " + TwoShapes(b.shape(), w.shape()));
  const int64_t left = (kk - 1) / 2;
  const int64_t cols_w = cin * kk;
  RowMat<T> cols = RowMat<T>::Zero(t, cols_w);
  const T* px = x.value().data();
  for (int64_t ti = 0; ti < t; ++ti)
    for (int64_t k = 0; k < kk; ++k) {
      const int64_t src = ti + k - left;
      if (src < 0 || src >= t) continue;
      for (int64_t c = 0; c < cin; ++c) cols(ti, c * kk + k) = px[src * cin + c];
    }
  BasicTensor<T> out({t, cout});
  auto om = AsMat(out, t, cout);
  om.noalias() = cols * AsMat(w.value(), cout, cols_w).transpose();
  if (b.defined()) om.rowwise() += AsMat(b.value(), 1, cout).row(0);
  return MakeResult<T>(
      std::move(out), "conv1d", {&x, &w, &b},
      [t, cin, cout, kk, left, cols_w, cols = std::move(cols)](Node<T>& n) {
        const auto g = AsMat(n.grad, t, cout);
        if (Wants(n, 1))
          AsMat(n.parents[1]->GradBuffer(), cout, cols_w).noalias() += g.transpose() * cols;
        if (Wants(n, 2)) AsMat(n.parents[2]->GradBuffer(), 1, cout) += g.colwise().sum();
        if (Wants(n, 0)) {
          RowMat<T> dcols(t, cols_w);
          dcols.noalias() = g * AsMat(n.parents[1]->value, cout, cols_w);
          T* gx = n.parents[0]->GradBuffer().data();
          for (int64_t ti = 0; ti < t; ++ti)
            for (int64_t k = 0; k < kk; ++k) {
              const int64_t src = ti + k - left;
              if (src < 0 || src >= t) continue;
              for (int64_t c = 0; c < cin; ++c) gx[src * cin + c] += dcols(ti, c * kk + k);
            }
        }
      });
}

template <typename T>
BasicVar<T> Conv2d(const BasicVar<T>& x, const BasicVar<T>& w, const BasicVar<T>& b, int stride,
                   int padding) {
  Require(x.value().rank() == 3 && w.value().rank() == 4 && x.dim(0) == w.dim(1), "conv2d",
          "input " + TwoShapes(x.shape(), w.shape()) +
              " (want Cin x H x W and Cout x Cin x kh x kw)");
  Require(stride >= 1 && padding >= 0, "conv2d", "stride must be >= 1 and padding >= 0");
  const int64_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int64_t cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int64_t ho = Conv2dOutExtent(h, kh, stride, padding);
  const int64_t wo = Conv2dOutExtent(wd, kw, stride, padding);
  Require(ho > 0 && wo > 0, "conv2d",
          "kernel larger than padded input " + TwoShapes(x.shape(), w.shape()));
  if (b.defined()) Require(b.size() == cout, "conv2d", "bias " + TwoShapes(b.shape(), w.shape()));
  const int64_t cols_w = cin * kh * kw;
  const int64_t npos = ho * wo;
  RowMat<T> cols = RowMat<T>::Zero(npos, cols_w);
  const T* px = x.value().data();
  for (int64_t oy = 0; oy < ho; ++oy)
    for (int64_t ox = 0; ox < wo; ++ox)
      for (int64_t c = 0; c < cin; ++c)
        for (int64_t i = 0; i < kh; ++i) {
          const int64_t iy = oy * stride - padding + i;
          if (iy < 0 || iy >= h) continue;
          for (int64_t j = 0; j < kw; ++j) {
            const int64_t ix = ox * stride - padding + j;
            if (ix < 0 || ix >= wd) continue;
            cols(oy * wo + ox, (c * kh + i) * kw + j) = px[(c * h + iy) * wd + ix];
          }
        }
  BasicTensor<T> out({cout, ho, wo});
  auto om = AsMat(out, cout, npos);
  om.noalias() = AsMat(w.value(), cout, cols_w) * cols.transpose();
  if (b.defined()) om.colwise() += AsMat(b.value(), cout, 1).col(0);
  return MakeResult<T>(
      std::move(out), "conv2d", {&x, &w, &b},
      [cin, h, wd, cout, kh, kw, ho, wo, stride, padding, cols_w, npos,
       cols = std::move(cols)](Node<T>& n) {
        const auto g = AsMat(n.grad, cout, npos);
        if (Wants(n, 1)) AsMat(n.parents[1]->GradBuffer(), cout, cols_w).noalias() += g * cols;
        if (Wants(n, 2)) AsMat(n.parents[2]->GradBuffer(), cout, 1) += g.rowwise().sum();
        if (Wants(n, 0)) {
          RowMat<T> dcols(npos, cols_w);
          dcols.noalias() = g.transpose() * AsMat(n.parents[1]->value, cout, cols_w);
          T* gx = n.parents[0]->GradBuffer().data();
          for (int64_t oy = 0; oy < ho; ++oy)
            for (int64_t ox = 0; ox < wo; ++ox)
              for (int64_t c = 0; c < cin; ++c)
                for (int64_t i = 0; i < kh; ++i) {
                  const int64_t iy = oy * stride - padding + i;
                  if (iy < 0 || iy >= h) continue;
                  for (int64_t j = 0; j < kw; ++j) {
                    const int64_t ix = ox * stride - padding + j;
                    if (ix < 0 || ix >= wd) continue;
                    gx[(c * h + iy) * wd + ix] += dcols(oy * wo + ox, (c * kh + i) * kw + j);
                  }
                }
        }
      });
}

// ---- instantiation ----

#define SFTTS_INSTANTIATE_OPS(T)                                                              \
  template struct Node<T>;                                                                    \
  template void Backward<T>(const BasicVar<T>&);                                              \
  template BasicVar<T> Detach<T>(const BasicVar<T>&);                                         \
  template BasicVar<T> Add<T>(const BasicVar<T>&, const BasicVar<T>&);                        \
  template BasicVar<T> Sub<T>(const BasicVar<T>&, const BasicVar<T>&);                        \
  template BasicVar<T> Mul<T>(const BasicVar<T>&, const BasicVar<T>&);                        \
  template BasicVar<T> Div<T>(const BasicVar<T>&, const BasicVar<T>&);                        \
  template BasicVar<T> AddScalar<T>(const BasicVar<T>&, T);                                   \
  template BasicVar<T> MulScalar<T>(const BasicVar<T>&, T);                                   \
  template BasicVar<T> Relu<T>(const BasicVar<T>&);                                           \
  template BasicVar<T> Abs<T>(const BasicVar<T>&);                                            \
  template BasicVar<T> Square<T>(const BasicVar<T>&);                                         \
  template BasicVar<T> Rsqrt<T>(const BasicVar<T>&);                                          \
  template BasicVar<T> Sum<T>(const BasicVar<T>&);                                            \
  template BasicVar<T> Mean<T>(const BasicVar<T>&);                                           \
  template BasicVar<T> SumAxis<T>(const BasicVar<T>&, int, bool);                             \
  template BasicVar<T> MeanAxis<T>(const BasicVar<T>&, int, bool);                            \
  template BasicVar<T> Reshape<T>(const BasicVar<T>&, Shape);                                 \
  template BasicVar<T> Transpose<T>(const BasicVar<T>&);                                      \
  template BasicVar<T> Concat<T>(const std::vector<BasicVar<T>>&, int);                       \
  template BasicVar<T> Slice<T>(const BasicVar<T>&, int, int64_t, int64_t);                   \
  template BasicVar<T> MatMul<T>(const BasicVar<T>&, const BasicVar<T>&);                     \
  template BasicVar<T> Linear<T>(const BasicVar<T>&, const BasicVar<T>&, const BasicVar<T>&); \
  template BasicVar<T> Softmax<T>(const BasicVar<T>&, int);                                   \
  template BasicVar<T> LogSoftmax<T>(const BasicVar<T>&, int);                                \
  template BasicVar<T> LayerNorm<T>(const BasicVar<T>&, const BasicVar<T>&,                   \
                                    const BasicVar<T>&, T);                                   \
  template BasicVar<T> CrossEntropy<T>(const BasicVar<T>&, std::span<const int>);             \
  template BasicVar<T> Embedding<T>(const BasicVar<T>&, std::span<const int>);                \
  template BasicVar<T> Attention<T>(const BasicVar<T>&, const BasicVar<T>&,                   \
                                    const BasicVar<T>&, int, const AttentionMask*);           \
  template BasicTensor<T> AttentionProbs<T>(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                            int, const AttentionMask*);                       \
  template BasicVar<T> Conv1d<T>(const BasicVar<T>&, const BasicVar<T>&, const BasicVar<T>&); \
  template BasicVar<T> Conv2d<T>(const BasicVar<T>&, const BasicVar<T>&, const BasicVar<T>&,  \
                                 int, int);

SFTTS_INSTANTIATE_OPS(float)
SFTTS_INSTANTIATE_OPS(double)

#undef SFTTS_INSTANTIATE_OPS

}  // namespace sftts

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sdn/tensor.hpp"

namespace sdn::nn {

// Graph node: a value plus an optional gradient buffer of the same shape.
template <typename T>
struct Var {
  TensorT<T> value;
  TensorT<T> grad;
  bool needs_grad = false;

  bool has_grad() const { return grad.size() == value.size() && grad.size() > 0; }
  void ensure_grad() {
    if (!has_grad()) grad = TensorT<T>(value.shape());
  }
  void zero_grad() {
    if (has_grad()) grad.fill(T(0));
  }
};

template <typename T>
using VarPtr = std::shared_ptr<Var<T>>;

template <typename T>
VarPtr<T> make_var(TensorT<T> value, bool needs_grad = false) {
  auto v = std::make_shared<Var<T>>();
  v->value = std::move(value);
  v->needs_grad = needs_grad;
  return v;
}

// Define-by-run reverse-mode tape. Ops record one backward closure each; the
// tape runs them in reverse. One graph per step; not thread-safe.
template <typename T>
class Graph {
 public:
  explicit Graph(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  void record(std::function<void()> fn) { tape_.push_back(std::move(fn)); }
  size_t tape_size() const { return tape_.size(); }
  void clear() { tape_.clear(); }

  // Seeds d(out) = cotangent and propagates to every needs_grad leaf.
  void backward_with(const VarPtr<T>& out, const TensorT<T>& cotangent) {
    require_same_shape(out->value, cotangent, "backward cotangent");
    out->ensure_grad();
    for (int64_t i = 0; i < cotangent.size(); ++i) out->grad[i] += cotangent[i];
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
  }

  // Standard entry: out must be scalar (one element).
  void backward(const VarPtr<T>& out) {
    if (out->value.size() != 1)
      throw ShapeError("backward requires a scalar output, got " + shape_str(out->value.shape()));
    TensorT<T> one(out->value.shape());
    one.fill(T(1));
    backward_with(out, one);
  }

 private:
  bool recording_;
  std::vector<std::function<void()>> tape_;
};

// ---- core differentiable ops ----
// All take [N,C,H,W] activations. conv2d: stride 1 or 2, zero padding k/2 so
// spatial alignment is preserved (stride 2 halves even extents).

template <typename T>
VarPtr<T> conv2d(Graph<T>& g, const VarPtr<T>& x, const VarPtr<T>& w, int stride);

template <typename T>
VarPtr<T> bias_add(Graph<T>& g, const VarPtr<T>& x, const VarPtr<T>& b);

template <typename T>
VarPtr<T> relu(Graph<T>& g, const VarPtr<T>& x);

template <typename T>
VarPtr<T> maxpool2(Graph<T>& g, const VarPtr<T>& x);

template <typename T>
VarPtr<T> upsample_nearest2(Graph<T>& g, const VarPtr<T>& x);

template <typename T>
VarPtr<T> concat_channels(Graph<T>& g, const VarPtr<T>& a, const VarPtr<T>& b);

template <typename T>
VarPtr<T> add(Graph<T>& g, const VarPtr<T>& a, const VarPtr<T>& b);

// x + c with c broadcast over the batch dimension (c rank 3, x rank 4) or of
// the same shape as x. c is constant (no gradient).
template <typename T>
VarPtr<T> add_const(Graph<T>& g, const VarPtr<T>& x, const TensorT<T>& c);

// elu(u) + 1: strictly positive feature map (u+1 for u >= 0, exp(u) below).
template <typename T>
VarPtr<T> elu_plus_one(Graph<T>& g, const VarPtr<T>& x);

// Mean per-pixel K-class cross-entropy. logits [N,K,H,W], target [N,H,W] with
// values in [0, K). Returns a scalar.
template <typename T>
VarPtr<T> softmax_cross_entropy(Graph<T>& g, const VarPtr<T>& logits, const TensorI& target);

// Same data, new shape (element count preserved).
template <typename T>
VarPtr<T> reshape(Graph<T>& g, const VarPtr<T>& x, std::vector<int> shape);

}  // namespace sdn::nn

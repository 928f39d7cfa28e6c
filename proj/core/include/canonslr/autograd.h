// Copyright 2026 The CanonSLR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CANONSLR_AUTOGRAD_H_
#define CANONSLR_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <vector>

#include "canonslr/tensor.h"

namespace canonslr {

// Reverse-mode differentiation over coarse-grained tensor operations.
//
// A Var is a shared handle onto a Node holding a forward value and, once
// touched by backpropagation, a gradient of the same shape. Ops are free
// functions taking a Tape pointer: with a null tape (evaluation mode) nothing
// is recorded and the op is a pure function of its inputs, so evaluation can
// run concurrently over shared parameters.

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;

  // Zero-initialized on first use.
  Tensor<T>& grad_ref() {
    if (grad.empty() && !value.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
  void zero_grad() { grad = Tensor<T>(); }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false)
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Node<T>* node() const { return node_.get(); }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(const Tensor<T>& grad_out)>;

  // Wraps an op result. The backward closure receives the output gradient
  // and accumulates into the inputs that require grad; it may keep raw
  // pointers to those inputs because the tape entry keeps them alive.
  static Var<T> record(Tape* tape, Tensor<T> value,
                       std::vector<Var<T>> inputs, BackwardFn backward);

  // Seeds d(root)/d(root) = seed (root must be a scalar [1]) and runs every
  // recorded closure in reverse order. Parameter grads accumulate.
  void backward(const Var<T>& root, T seed = T(1));

  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    Var<T> output;
    std::vector<Var<T>> inputs;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace canonslr

#endif  // CANONSLR_AUTOGRAD_H_

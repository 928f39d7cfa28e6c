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

#include "canonslr/autograd.h"

#include "canonslr/error.h"

namespace canonslr {

template <typename T>
Var<T> Tape<T>::record(Tape* tape, Tensor<T> value, std::vector<Var<T>> inputs,
                       BackwardFn backward) {
  bool needs_grad = false;
  for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();
  if (tape == nullptr || !needs_grad) return Var<T>(std::move(value), false);
  Var<T> out(std::move(value), true);
  tape->entries_.push_back({out, std::move(inputs), std::move(backward)});
  return out;
}

template <typename T>
void Tape<T>::backward(const Var<T>& root, T seed) {
  if (!root.defined() || root.value().size() != 1) {
    throw InvalidArgument("backward root must be a scalar");
  }
  if (!root.requires_grad()) return;
  root.node()->grad_ref()[0] += seed;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    Node<T>* out = it->output.node();
    if (out->grad.empty()) continue;
    it->backward(out->grad);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace canonslr

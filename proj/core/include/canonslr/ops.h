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

#ifndef CANONSLR_OPS_H_
#define CANONSLR_OPS_H_

#include <vector>

#include "canonslr/autograd.h"

// Differentiable tensor ops. Layout conventions:
//   image stacks  [C, N, H, W]  (channel-major so a conv GEMM writes its
//                               output in place; N is time for a clip)
//   sequences     [T, C]        (time-major)
namespace canonslr::ops {

template <typename T>
Var<T> add(Tape<T>* tape, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> relu(Tape<T>* tape, const Var<T>& x);

template <typename T>
Var<T> scale(Tape<T>* tape, const Var<T>& x, T factor);

// x * alpha for a learnable scalar alpha of shape [1].
template <typename T>
Var<T> scale_by(Tape<T>* tape, const Var<T>& x, const Var<T>& alpha);

// sum_i weights[i] * terms[i] over scalars of shape [1].
template <typename T>
Var<T> weighted_sum(Tape<T>* tape, const std::vector<Var<T>>& terms,
                    const std::vector<T>& weights);

// x [C,N,H,W], weight [O,C,k,k], bias [O] -> [O,N,Ho,Wo].
template <typename T>
Var<T> conv2d(Tape<T>* tape, const Var<T>& x, const Var<T>& weight,
              const Var<T>& bias, int stride, int pad);

// Mean over H and W: [C,N,H,W] -> [N,C].
template <typename T>
Var<T> spatial_mean(Tape<T>* tape, const Var<T>& x);

// x [T,C], weight [O,C,k], bias [O], zero padding `pad` on both ends.
template <typename T>
Var<T> conv1d(Tape<T>* tape, const Var<T>& x, const Var<T>& weight,
              const Var<T>& bias, int pad);

// Non-overlapping max pooling along time; trailing frames that do not fill a
// window are dropped. Ties resolve to the earliest frame.
template <typename T>
Var<T> max_pool1d(Tape<T>* tape, const Var<T>& x, int window);

// x [N,C], weight [O,C], bias [O] -> [N,O].
template <typename T>
Var<T> linear(Tape<T>* tape, const Var<T>& x, const Var<T>& weight,
              const Var<T>& bias);

// Contracts the last axis of x with weight [C,D]; leading axes preserved.
template <typename T>
Var<T> matmul(Tape<T>* tape, const Var<T>& x, const Var<T>& weight);

template <typename T>
struct LstmWeights {
  Var<T> input;      // [4H, C], gate order i, f, g, o
  Var<T> recurrent;  // [4H, H]
  Var<T> bias;       // [4H]
};

// Bidirectional single-layer LSTM: x [T,C] -> [T,2H], forward half first.
template <typename T>
Var<T> bilstm(Tape<T>* tape, const Var<T>& x, const LstmWeights<T>& forward,
              const LstmWeights<T>& backward);

}  // namespace canonslr::ops

#endif  // CANONSLR_OPS_H_

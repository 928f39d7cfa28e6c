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

#ifndef CANONSLR_CTC_H_
#define CANONSLR_CTC_H_

#include <span>
#include <vector>

#include "canonslr/autograd.h"

// Connectionist temporal classification over logit sequences [T', classes].
// The blank symbol is an explicit argument; throughout this project it is
// the last class (index V for a vocabulary of V glosses).
namespace canonslr::ctc {

using Labels = std::vector<int>;

// Merges adjacent repeats, then removes blanks.
Labels collapse(std::span<const int> path, int blank);

// Minimum number of frames needed to emit target: one per label plus one
// separating blank for every adjacent repeated pair.
std::size_t min_frames(std::span<const int> target);

struct LossAndGrad {
  double loss = 0;
  Tensor<double> grad;  // d loss / d logits, same shape as the logits
};

// Log-space forward-backward. Throws FeasibilityError if the target cannot
// be aligned in the available frames and InvalidArgument on NaN logits or
// out-of-range labels.
template <typename T>
LossAndGrad loss_and_grad(const Tensor<T>& logits, std::span<const int> target,
                          int blank);

// Differentiable wrapper; result has shape [1].
template <typename T>
Var<T> loss(Tape<T>* tape, const Var<T>& logits, std::span<const int> target,
            int blank);

// Per-frame argmax (lowest index on ties), then collapse.
template <typename T>
Labels greedy_decode(const Tensor<T>& logits, int blank);

// Prefix beam search. Hypotheses are ranked by total log probability, with
// ties ordered lexicographically on the label prefix so results are
// reproducible. Without pruning (beam_width >= number of live prefixes) the
// result is the exact most probable collapsed sequence.
template <typename T>
Labels beam_decode(const Tensor<T>& logits, int beam_width, int blank);

}  // namespace canonslr::ctc

#endif  // CANONSLR_CTC_H_

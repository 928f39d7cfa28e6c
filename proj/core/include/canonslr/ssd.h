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

#ifndef CANONSLR_SSD_H_
#define CANONSLR_SSD_H_

#include <cstddef>

#include "canonslr/autograd.h"
#include "canonslr/views.h"

// Sequence-level soft-target distillation from a frozen canonical-view
// teacher onto student logit sequences.
namespace canonslr::ssd {

struct DistillConfig {
  double temperature = 8.0;
  double weight = 40.0;
  View frontal_view = View::kFront;  // canonical anchor
};

// Throws InvalidArgument unless temperature > 0 and weight >= 0.
void validate(const DistillConfig& cfg);

// Linear interpolation of raw logits [T,K] along time to target_len frames,
// first and last frames mapped onto each other. A single-frame target takes
// the first teacher frame.
template <typename T>
Tensor<T> align_temporal(const Tensor<T>& teacher, std::size_t target_len);

// Unweighted distillation term: zero on the anchor view, otherwise
// T_d^2 * mean_t KL(softmax(teacher_t / T_d) || softmax(student_t / T_d)).
template <typename T>
double loss_value(const Tensor<T>& teacher_aligned, const Tensor<T>& student,
                  View view, const DistillConfig& cfg);

// Differentiable in the student logits only; teacher values are constants.
template <typename T>
Var<T> loss(Tape<T>* tape, const Tensor<T>& teacher_aligned,
            const Var<T>& student, View view, const DistillConfig& cfg);

}  // namespace canonslr::ssd

#endif  // CANONSLR_SSD_H_
